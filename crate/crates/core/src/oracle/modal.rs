use crate::error::{check_dim, Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::operators::{Grid1D, OperatorBundle};
use crate::stepper::InitialData;

use super::expm::{expm, matvec, Mat3};

/// Coefficients of `u` in the eigenvectors `grid.mode(k)` of the discrete
/// Laplacian, ordered as `grid.mode_range()`. The modes are not
/// normalized: `u = mode(k)` gives a unit coefficient.
pub fn modal_transform(u: &[f64], grid: &Grid1D) -> Result<Vec<f64>> {
    check_dim(grid.n(), u.len())?;
    grid.mode_range()
        .map(|k| Ok(grid.h_inner(u, &grid.mode(k))? / grid.mode_norm_sq(k)))
        .collect()
}

pub fn inverse_modal_transform(coeffs: &[f64], grid: &Grid1D) -> Result<Vec<f64>> {
    check_dim(grid.n(), coeffs.len())?;
    let mut u = vec![0.0; grid.n()];
    for (c, k) in coeffs.iter().zip(grid.mode_range()) {
        if *c != 0.0 {
            for (ui, m) in u.iter_mut().zip(grid.mode(k)) {
                *ui += c * m;
            }
        }
    }
    Ok(u)
}

/// Per-mode generators of the linear semi-discrete system on
/// `(theta_k, phi_k, v_k)`:
///
/// ```text
/// theta' = -a1 theta - eta v
/// phi'   = v
/// l v'   = b2 theta - (a2 + s) phi - b1 v
/// ```
///
/// where `a1, a2, b1, b2, l` are the operator symbols at the mode's
/// eigenvalue and `s` is the slope of the linear lower-order term.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalSystem {
    pub mu: Vec<f64>,
    pub generators: Vec<Mat3>,
}

impl ModalSystem {
    pub fn new(bundle: &OperatorBundle, nonlin: &NonlinearitySpec) -> Result<Self> {
        if !nonlin.beta_is_zero() {
            return Err(Error::NonlinearProblem("beta must vanish".into()));
        }
        let s = nonlin
            .linear_slope()
            .ok_or_else(|| Error::NonlinearProblem("lower-order term must be linear".into()))?;
        let grid = &bundle.grid;
        let mut mu = Vec::with_capacity(grid.n());
        let mut generators = Vec::with_capacity(grid.n());
        for k in grid.mode_range() {
            let m = grid.laplacian_eigenvalue(k);
            let sym = |op: &crate::operators::DiscreteOperator, name: &str| {
                op.symbol(m).ok_or_else(|| {
                    Error::NonlinearProblem(format!("operator {name} is not diagonal in the Laplacian eigenbasis"))
                })
            };
            let l = sym(&bundle.l, "L")?;
            let a1 = sym(&bundle.a1, "A1")?;
            let a2 = sym(&bundle.a2, "A2")?;
            let b1 = sym(&bundle.b1, "B1")?;
            let b2 = sym(&bundle.b2, "B2")?;
            mu.push(m);
            generators.push([
                [-a1, 0.0, -bundle.eta],
                [0.0, 0.0, 1.0],
                [b2 / l, -(a2 + s) / l, -b1 / l],
            ]);
        }
        Ok(Self { mu, generators })
    }

    pub fn propagator(&self, k_index: usize, t: f64) -> Mat3 {
        expm(&self.generators[k_index].map(|r| r.map(|x| x * t)))
    }
}

/// Exact solution of the linear semi-discrete system at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceState {
    pub t: f64,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub v: Vec<f64>,
}

/// Initial data in modal form together with the per-mode generators.
#[derive(Clone, Debug)]
pub struct ModalOracle {
    system: ModalSystem,
    grid: Grid1D,
    coeffs0: Vec<[f64; 3]>,
    initial: InitialData,
}

impl ModalOracle {
    pub fn new(initial: &InitialData, bundle: &OperatorBundle, nonlin: &NonlinearitySpec) -> Result<Self> {
        let system = ModalSystem::new(bundle, nonlin)?;
        let grid = bundle.grid;
        let th = modal_transform(&initial.theta, &grid)?;
        let ph = modal_transform(&initial.phi, &grid)?;
        let v = modal_transform(&initial.v, &grid)?;
        let coeffs0 = (0..grid.n()).map(|i| [th[i], ph[i], v[i]]).collect();
        Ok(Self {
            system,
            grid,
            coeffs0,
            initial: initial.clone(),
        })
    }

    pub fn system(&self) -> &ModalSystem {
        &self.system
    }

    pub fn at(&self, t: f64) -> Result<ReferenceState> {
        if t == 0.0 {
            return Ok(ReferenceState {
                t,
                theta: self.initial.theta.clone(),
                phi: self.initial.phi.clone(),
                v: self.initial.v.clone(),
            });
        }
        let n = self.grid.n();
        let (mut th, mut ph, mut v) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for (i, c0) in self.coeffs0.iter().enumerate() {
            if c0.iter().all(|c| *c == 0.0) {
                continue;
            }
            let c = matvec(&self.system.propagator(i, t), c0);
            th[i] = c[0];
            ph[i] = c[1];
            v[i] = c[2];
        }
        Ok(ReferenceState {
            t,
            theta: inverse_modal_transform(&th, &self.grid)?,
            phi: inverse_modal_transform(&ph, &self.grid)?,
            v: inverse_modal_transform(&v, &self.grid)?,
        })
    }
}

/// Exact solution of a linear problem at time `t`.
pub fn exact_linear_solution(
    initial: &InitialData,
    bundle: &OperatorBundle,
    nonlin: &NonlinearitySpec,
    t: f64,
) -> Result<ReferenceState> {
    if t == 0.0 {
        ModalSystem::new(bundle, nonlin)?;
        return Ok(ReferenceState {
            t,
            theta: initial.theta.clone(),
            phi: initial.phi.clone(),
            v: initial.v.clone(),
        });
    }
    ModalOracle::new(initial, bundle, nonlin)?.at(t)
}
