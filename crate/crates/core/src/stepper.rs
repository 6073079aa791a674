//! One step of the backward-difference scheme.
//!
//! Given `(theta_n, phi_n, v_n)` the step solves the nonlinear elliptic
//! problem
//!
//! ```text
//! L phi + h B1 phi + h^2 A2 phi + h^2 Phi(phi) + h^2 pi(phi)
//!       + eta h^2 B2 (I + h A1)^{-1} phi = g
//! g = L phi_n + h L v_n + h B1 phi_n + h^2 B2 (I + h A1)^{-1} (eta phi_n + theta_n)
//! ```
//!
//! for `phi_{n+1}` and recovers `theta_{n+1}` by one resolvent solve. The
//! velocity and acceleration follow from difference quotients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{energy, EnergyRecord};
use crate::error::{check_dim, Error, Result};
use crate::nonlinearity::{NonlinearitySpec, YosidaParam};
use crate::operators::{DiscreteOperator, Grid1D, OperatorBundle};

/// Grid vectors at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub v: Vec<f64>,
    pub z: Vec<f64>,
    pub t_index: usize,
    pub h: f64,
}

impl State {
    /// Initial state; `z` is a placeholder until the first step backfills it.
    pub fn initial(theta: Vec<f64>, phi: Vec<f64>, v: Vec<f64>, h: f64) -> Result<Self> {
        check_dim(theta.len(), phi.len())?;
        check_dim(theta.len(), v.len())?;
        if !(h > 0.0) {
            return Err(Error::InvalidParameter {
                field: "h",
                reason: format!("must be positive, got {h}"),
            });
        }
        if theta.iter().chain(&phi).chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter {
                field: "initial",
                reason: "initial data must be finite".into(),
            });
        }
        let n = theta.len();
        Ok(Self {
            theta,
            phi,
            v,
            z: vec![0.0; n],
            t_index: 0,
            h,
        })
    }

    pub fn zeros(n: usize, h: f64) -> Self {
        Self {
            theta: vec![0.0; n],
            phi: vec![0.0; n],
            v: vec![0.0; n],
            z: vec![0.0; n],
            t_index: 0,
            h,
        }
    }

    pub fn time(&self) -> f64 {
        self.t_index as f64 * self.h
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolvePath {
    /// Newton on the coupled `(phi, (I + h A1)^{-1} phi)` block system with
    /// the exact `beta`.
    CoupledDirect,
    /// Newton with `beta` replaced by its Yosida approximation, continued
    /// along a decreasing `lambda` schedule with warm starts.
    YosidaRegularized { schedule: Vec<f64> },
}

impl SolvePath {
    pub fn default_yosida() -> Self {
        Self::YosidaRegularized {
            schedule: vec![1e-2, 1e-4, 1e-6, 1e-8, 1e-10],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepConfig {
    pub h: f64,
    /// Relative Newton tolerance: stop once `|F(phi)|_H <= newton_tol (1 + |g|_H)`.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub solve_path: SolvePath,
}

impl StepConfig {
    pub fn new(h: f64) -> Self {
        Self {
            h,
            newton_tol: 1e-12,
            newton_max_iter: 25,
            solve_path: SolvePath::CoupledDirect,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::InvalidParameter {
                field: "h",
                reason: format!("must be positive, got {}", self.h),
            });
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::InvalidParameter {
                field: "newton_tol",
                reason: format!("must be positive, got {}", self.newton_tol),
            });
        }
        if self.newton_max_iter == 0 {
            return Err(Error::InvalidParameter {
                field: "newton_max_iter",
                reason: "must be at least 1".into(),
            });
        }
        if let SolvePath::YosidaRegularized { schedule } = &self.solve_path {
            if schedule.is_empty() {
                return Err(Error::InvalidParameter {
                    field: "solve_path.schedule",
                    reason: "empty lambda schedule".into(),
                });
            }
            for l in schedule {
                YosidaParam::new(*l)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub newton_iters: usize,
    /// `|F(phi_{n+1})|_H` of the elliptic problem.
    pub final_residual: f64,
    /// `|g|_H`
    pub g_norm: f64,
    /// H-norm of `delta theta + eta delta phi + A1 theta_{n+1}`.
    pub theta_residual: f64,
    /// H-norm of `L z + B1 v + A2 phi + Phi phi + pi(phi) - B2 theta` at `n+1`.
    pub phi_residual: f64,
    pub energy_snapshot: EnergyRecord,
}

impl StepReport {
    /// First equation multiplied by `h`, second by `h^2`: the scaling in
    /// which the equations are solved, comparable with `1 + |g|`.
    pub fn scaled_residuals(&self, h: f64) -> (f64, f64) {
        (h * self.theta_residual, h * h * self.phi_residual)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhiSolve {
    pub phi: Vec<f64>,
    pub iters: usize,
    pub residual: f64,
}

/// Right-hand side `g` of the per-step elliptic problem.
pub fn phi_equation_rhs(state: &State, bundle: &OperatorBundle, h: f64) -> Result<Vec<f64>> {
    let n = bundle.dim();
    check_dim(n, state.dim())?;
    let eta = bundle.eta;
    let src: Vec<f64> = state
        .phi
        .iter()
        .zip(&state.theta)
        .map(|(p, t)| eta * p + t)
        .collect();
    let w = bundle.a1.resolvent_solve(h, &src)?;
    let b2w = bundle.b2.apply(&w)?;
    let lphi = bundle.l.apply(&state.phi)?;
    let lv = bundle.l.apply(&state.v)?;
    let b1phi = bundle.b1.apply(&state.phi)?;
    Ok((0..n)
        .map(|i| lphi[i] + h * lv[i] + h * b1phi[i] + h * h * b2w[i])
        .collect())
}

/// Pointwise monotone term used by a solve: exact `beta` or a Yosida approximation.
#[derive(Clone, Copy)]
enum Monotone {
    Exact,
    Yosida(YosidaParam),
}

struct Elliptic<'a> {
    bundle: &'a OperatorBundle,
    nonlin: &'a NonlinearitySpec,
    h: f64,
    g: &'a [f64],
    // L + h B1 + h^2 A2
    base_diag: Vec<f64>,
    base_off: Vec<f64>,
}

impl<'a> Elliptic<'a> {
    fn new(bundle: &'a OperatorBundle, nonlin: &'a NonlinearitySpec, h: f64, g: &'a [f64]) -> Self {
        let n = bundle.dim();
        let h2 = h * h;
        let (l, b1, a2) = (&bundle.l, &bundle.b1, &bundle.a2);
        let base_diag = (0..n)
            .map(|i| l.diag()[i] + h * b1.diag()[i] + h2 * a2.diag()[i])
            .collect();
        let base_off = (0..n.saturating_sub(1))
            .map(|i| l.offdiag()[i] + h * b1.offdiag()[i] + h2 * a2.offdiag()[i])
            .collect();
        Self {
            bundle,
            nonlin,
            h,
            g,
            base_diag,
            base_off,
        }
    }

    fn monotone(&self, mode: Monotone, r: f64) -> Result<(f64, f64)> {
        match mode {
            Monotone::Exact => Ok((self.nonlin.beta(r), self.nonlin.beta_prime(r))),
            Monotone::Yosida(lam) => self.nonlin.yosida_with_derivative(lam, r),
        }
    }

    /// `F(phi)` together with the pointwise derivative of the nonlinear terms.
    fn residual(&self, phi: &[f64], mode: Monotone) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = phi.len();
        let h2 = self.h * self.h;
        let mut f = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.base_diag[i] * phi[i];
            if i > 0 {
                acc += self.base_off[i - 1] * phi[i - 1];
            }
            if i + 1 < n {
                acc += self.base_off[i] * phi[i + 1];
            }
            f[i] = acc;
        }
        let psi = self.bundle.a1.resolvent_solve(self.h, phi)?;
        let b2psi = self.bundle.b2.apply(&psi)?;
        let mut dnl = vec![0.0; n];
        let eh2 = self.bundle.eta * h2;
        for i in 0..n {
            let (b, db) = self.monotone(mode, phi[i])?;
            f[i] += h2 * (b + self.nonlin.pi(phi[i])) + eh2 * b2psi[i] - self.g[i];
            dnl[i] = db + self.nonlin.pi_prime(phi[i]);
        }
        Ok((f, dnl))
    }

    /// Newton correction `J(phi)^{-1} (-F)`.
    fn direction(&self, f: &[f64], dnl: &[f64]) -> Result<Vec<f64>> {
        let h2 = self.h * self.h;
        let jac_diag: Vec<f64> = self.base_diag.iter().zip(dnl).map(|(d, q)| d + h2 * q).collect();
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        solve_coupled_jacobian(
            &jac_diag,
            &self.base_off,
            &self.bundle.b2,
            self.bundle.eta * h2,
            &self.bundle.a1,
            self.h,
            &rhs,
        )
    }

    fn newton(&self, guess: Vec<f64>, mode: Monotone, tol: f64, max_iter: usize) -> Result<PhiSolve> {
        let grid = &self.bundle.grid;
        let target = tol * (1.0 + grid.h_norm(self.g)?);
        let mut phi = guess;
        let (mut f, mut dnl) = self.residual(&phi, mode)?;
        let mut fnorm = grid.h_norm(&f)?;
        let mut iters = 0;
        while fnorm > target {
            if iters == max_iter || !fnorm.is_finite() {
                return Err(Error::NewtonDiverged {
                    iters,
                    residual: fnorm,
                    target,
                });
            }
            iters += 1;
            let delta = self.direction(&f, &dnl)?;
            // backtracking on |F|
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = phi.iter().zip(&delta).map(|(p, d)| p + t * d).collect();
                let (tf, tdnl) = self.residual(&trial, mode)?;
                let tnorm = grid.h_norm(&tf)?;
                if tnorm <= (1.0 - 1e-4 * t) * fnorm || t < 1e-8 {
                    phi = trial;
                    f = tf;
                    dnl = tdnl;
                    fnorm = tnorm;
                    break;
                }
                t *= 0.5;
            }
        }
        // One extra full step once the tolerance is met: Newton converges
        // quadratically here, so this takes |F| to rounding level, which the
        // unscaled second equation (|F| / h^2) needs.
        if !self.nonlin.is_linear() && fnorm > 0.0 && iters < max_iter {
            let delta = self.direction(&f, &dnl)?;
            let trial: Vec<f64> = phi.iter().zip(&delta).map(|(p, d)| p + d).collect();
            let tnorm = grid.h_norm(&self.residual(&trial, mode)?.0)?;
            if tnorm < fnorm {
                phi = trial;
                fnorm = tnorm;
                iters += 1;
            }
        }
        Ok(PhiSolve {
            phi,
            iters,
            residual: fnorm,
        })
    }
}

/// Solves the per-step nonlinear elliptic problem for `phi`.
///
/// `guess` defaults to zero; [`step`] passes the linear prediction
/// `phi_n + h v_n`.
pub fn solve_phi(
    g: &[f64],
    bundle: &OperatorBundle,
    nonlin: &NonlinearitySpec,
    cfg: &StepConfig,
    guess: Option<&[f64]>,
) -> Result<PhiSolve> {
    let n = bundle.dim();
    check_dim(n, g.len())?;
    let guess = match guess {
        Some(x) => {
            check_dim(n, x.len())?;
            x.to_vec()
        }
        None => vec![0.0; n],
    };
    let problem = Elliptic::new(bundle, nonlin, cfg.h, g);
    match &cfg.solve_path {
        SolvePath::CoupledDirect => {
            problem.newton(guess, Monotone::Exact, cfg.newton_tol, cfg.newton_max_iter)
        }
        SolvePath::YosidaRegularized { schedule } => {
            let mut phi = guess;
            let mut total = 0;
            let mut residual = f64::NAN;
            for &lam in schedule {
                let mode = Monotone::Yosida(YosidaParam::new(lam)?);
                let sol = problem.newton(phi, mode, cfg.newton_tol, cfg.newton_max_iter)?;
                phi = sol.phi;
                total += sol.iters;
                residual = sol.residual;
            }
            Ok(PhiSolve {
                phi,
                iters: total,
                residual,
            })
        }
    }
}

/// Solves the Newton system
///
/// ```text
/// [ J    c B2     ] [d_phi]   [rhs]
/// [ -I   I + h A1 ] [d_psi] = [ 0 ]
/// ```
///
/// with `J` tridiagonal, by interleaving the unknowns into a 2x2
/// block-tridiagonal system. Returns `d_phi`, which solves
/// `(J + c B2 (I + h A1)^{-1}) d_phi = rhs`.
fn solve_coupled_jacobian(
    j_diag: &[f64],
    j_off: &[f64],
    b2: &DiscreteOperator,
    c: f64,
    a1: &DiscreteOperator,
    h: f64,
    rhs: &[f64],
) -> Result<Vec<f64>> {
    type M2 = [[f64; 2]; 2];
    let n = j_diag.len();
    let (r_diag, r_off) = a1.shifted(h);
    let diag_block = |i: usize| -> M2 { [[j_diag[i], c * b2.diag()[i]], [-1.0, r_diag[i]]] };
    // coupling between rows i and i+1 (symmetric operators)
    let off_block = |i: usize| -> M2 { [[j_off[i], c * b2.offdiag()[i]], [0.0, r_off[i]]] };
    let inv = |m: &M2, row: usize| -> Result<M2> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::SingularSystem { row, pivot: det });
        }
        Ok([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
    };
    let mul = |a: &M2, b: &M2| -> M2 {
        [
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ]
    };
    let mulv = |a: &M2, x: [f64; 2]| -> [f64; 2] {
        [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
    };

    let mut pivots_inv: Vec<M2> = Vec::with_capacity(n);
    let mut y: Vec<[f64; 2]> = Vec::with_capacity(n);
    let d0 = diag_block(0);
    pivots_inv.push(inv(&d0, 0)?);
    y.push([rhs[0], 0.0]);
    for i in 1..n {
        let lower = off_block(i - 1); // row i, column i-1
        let w = mul(&lower, &pivots_inv[i - 1]);
        let upper = off_block(i - 1); // row i-1, column i
        let wu = mul(&w, &upper);
        let d = diag_block(i);
        let p = [
            [d[0][0] - wu[0][0], d[0][1] - wu[0][1]],
            [d[1][0] - wu[1][0], d[1][1] - wu[1][1]],
        ];
        pivots_inv.push(inv(&p, i)?);
        let wy = mulv(&w, y[i - 1]);
        y.push([rhs[i] - wy[0], -wy[1]]);
    }
    let mut x = vec![[0.0; 2]; n];
    x[n - 1] = mulv(&pivots_inv[n - 1], y[n - 1]);
    for i in (0..n - 1).rev() {
        let ux = mulv(&off_block(i), x[i + 1]);
        x[i] = mulv(&pivots_inv[i], [y[i][0] - ux[0], y[i][1] - ux[1]]);
    }
    Ok(x.into_iter().map(|b| b[0]).collect())
}

/// Natural-form residuals of both scheme equations at the new level.
fn scheme_residuals(
    prev: &State,
    next: &State,
    bundle: &OperatorBundle,
    nonlin: &NonlinearitySpec,
    mode: Monotone,
) -> Result<(f64, f64)> {
    let n = bundle.dim();
    let h = next.h;
    let a1t = bundle.a1.apply(&next.theta)?;
    let r1: Vec<f64> = (0..n)
        .map(|i| {
            (next.theta[i] - prev.theta[i]) / h
                + bundle.eta * (next.phi[i] - prev.phi[i]) / h
                + a1t[i]
        })
        .collect();
    let lz = bundle.l.apply(&next.z)?;
    let b1v = bundle.b1.apply(&next.v)?;
    let a2p = bundle.a2.apply(&next.phi)?;
    let b2t = bundle.b2.apply(&next.theta)?;
    let mut r2 = vec![0.0; n];
    for i in 0..n {
        let p = next.phi[i];
        let b = match mode {
            Monotone::Exact => nonlin.beta(p),
            Monotone::Yosida(lam) => nonlin.yosida(lam, p)?,
        };
        r2[i] = lz[i] + b1v[i] + a2p[i] + b + nonlin.pi(p) - b2t[i];
    }
    Ok((bundle.grid.h_norm(&r1)?, bundle.grid.h_norm(&r2)?))
}

/// Advances one step.
pub fn step(
    state: &State,
    bundle: &OperatorBundle,
    nonlin: &NonlinearitySpec,
    cfg: &StepConfig,
) -> Result<(State, StepReport)> {
    cfg.validate()?;
    let n = bundle.dim();
    check_dim(n, state.dim())?;
    let h = cfg.h;
    let g = phi_equation_rhs(state, bundle, h)?;
    let guess: Vec<f64> = state.phi.iter().zip(&state.v).map(|(p, v)| p + h * v).collect();
    let sol = solve_phi(&g, bundle, nonlin, cfg, Some(&guess))?;
    let phi = sol.phi;
    let src: Vec<f64> = (0..n)
        .map(|i| state.theta[i] + bundle.eta * (state.phi[i] - phi[i]))
        .collect();
    let theta = bundle.a1.resolvent_solve(h, &src)?;
    let v: Vec<f64> = (0..n).map(|i| (phi[i] - state.phi[i]) / h).collect();
    let z: Vec<f64> = (0..n).map(|i| (v[i] - state.v[i]) / h).collect();
    let next = State {
        theta,
        phi,
        v,
        z,
        t_index: state.t_index + 1,
        h,
    };
    let mode = match &cfg.solve_path {
        SolvePath::CoupledDirect => Monotone::Exact,
        SolvePath::YosidaRegularized { schedule } => {
            Monotone::Yosida(YosidaParam::new(*schedule.last().expect("validated"))?)
        }
    };
    let (theta_residual, phi_residual) = scheme_residuals(state, &next, bundle, nonlin, mode)?;
    let g_norm = bundle.grid.h_norm(&g)?;
    let bound = 10.0 * cfg.newton_tol * (1.0 + g_norm);
    if h * h * phi_residual > bound {
        log::warn!(
            "step {}: scheme residual {:e} exceeds audit bound {:e}",
            next.t_index,
            h * h * phi_residual,
            bound
        );
    }
    let report = StepReport {
        newton_iters: sol.iters,
        final_residual: sol.residual,
        g_norm,
        theta_residual,
        phi_residual,
        energy_snapshot: energy(&next, bundle, nonlin)?,
    };
    Ok((next, report))
}

/// Initial data `(theta_0, phi_0, v_0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialData {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub v: Vec<f64>,
}

impl InitialData {
    pub fn zeros(n: usize) -> Self {
        Self {
            theta: vec![0.0; n],
            phi: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    /// `amplitudes * grid.mode(k)` for `(theta, phi, v)`.
    pub fn single_mode(grid: &Grid1D, k: usize, amplitudes: [f64; 3]) -> Result<Self> {
        if !grid.mode_range().contains(&k) {
            return Err(Error::InvalidParameter {
                field: "initial.k",
                reason: format!("mode {k} not in {:?}", grid.mode_range()),
            });
        }
        let m = grid.mode(k);
        let f = |a: f64| m.iter().map(|x| a * x).collect();
        Ok(Self {
            theta: f(amplitudes[0]),
            phi: f(amplitudes[1]),
            v: f(amplitudes[2]),
        })
    }

    /// Random modal expansion with coefficients uniform in `[-1, 1]` times
    /// `max(k, 1)^-decay`; fields are drawn in the order theta, phi, v.
    pub fn random_smooth(grid: &Grid1D, seed: u64, decay: f64) -> Result<Self> {
        if !(decay >= 0.0) || !decay.is_finite() {
            return Err(Error::InvalidParameter {
                field: "initial.decay",
                reason: format!("must be a nonnegative number, got {decay}"),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes: Vec<(f64, Vec<f64>)> = grid
            .mode_range()
            .map(|k| ((k.max(1) as f64).powf(-decay), grid.mode(k)))
            .collect();
        let mut field = || {
            let mut u = vec![0.0; grid.n()];
            for (w, m) in &modes {
                let a = w * rng.gen_range(-1.0..=1.0);
                u.iter_mut().zip(m).for_each(|(ui, mi)| *ui += a * mi);
            }
            u
        };
        let theta = field();
        let phi = field();
        let v = field();
        Ok(Self { theta, phi, v })
    }
}

#[derive(Debug)]
pub struct StepFailure {
    /// Index of the step that failed (the state it started from).
    pub index: usize,
    pub error: Error,
}

/// A (possibly partial) trajectory.
#[derive(Debug)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub reports: Vec<StepReport>,
    pub failure: Option<StepFailure>,
    pub h: f64,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }
}

/// Number of steps `T / h`, which must be a positive integer.
pub fn step_count(t_final: f64, h: f64) -> Result<usize> {
    let ratio = t_final / h;
    let n = ratio.round();
    if !(n >= 1.0) || (ratio - n).abs() > 1e-9 * n || !ratio.is_finite() {
        return Err(Error::TimeGrid { ratio });
    }
    Ok(n as usize)
}

/// Runs the scheme on `[0, T]`.
///
/// On a failed step the trajectory up to that point is returned together with
/// the failure; input validation errors are returned as `Err`.
pub fn run(
    initial: &InitialData,
    bundle: &OperatorBundle,
    nonlin: &NonlinearitySpec,
    t_final: f64,
    cfg: &StepConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    nonlin.validate()?;
    let steps = step_count(t_final, cfg.h)?;
    let n = bundle.dim();
    check_dim(n, initial.theta.len())?;
    let h_tilde = bundle.estimate_structural_constants(nonlin.c_lip())?.h_tilde;
    if cfg.h >= h_tilde {
        log::warn!(
            "h = {} is not below the solvability threshold {h_tilde}; attempting anyway",
            cfg.h
        );
    }
    let s0 = State::initial(
        initial.theta.clone(),
        initial.phi.clone(),
        initial.v.clone(),
        cfg.h,
    )?;
    let mut states = Vec::with_capacity(steps + 1);
    let mut reports = Vec::with_capacity(steps);
    states.push(s0);
    let mut failure = None;
    for k in 0..steps {
        match step(&states[k], bundle, nonlin, cfg) {
            Ok((next, report)) => {
                if k == 0 {
                    // z_0 = z_1
                    states[0].z = next.z.clone();
                }
                states.push(next);
                reports.push(report);
            }
            Err(error) => {
                failure = Some(StepFailure { index: k, error });
                break;
            }
        }
    }
    Ok(Trajectory {
        states,
        reports,
        failure,
        h: cfg.h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{build_bundle, Bc, Grid1D, Preset, ProblemPreset};

    fn bundle(preset: Preset, n: usize) -> OperatorBundle {
        let g = Grid1D::dirichlet(n).unwrap();
        build_bundle(&ProblemPreset::with_defaults(preset, Bc::Dirichlet), &g).unwrap()
    }

    #[test]
    fn zero_state_gives_zero_rhs() {
        let b = bundle(Preset::P2, 10);
        let g = phi_equation_rhs(&State::zeros(10, 0.1), &b, 0.1).unwrap();
        assert!(g.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn rhs_tends_to_l_phi() {
        let b = bundle(Preset::P3, 10);
        let mut s = State::zeros(10, 1.0);
        s.phi = (0..10).map(|i| (i as f64).sin()).collect();
        s.v = vec![1.0; 10];
        s.theta = vec![-2.0; 10];
        let g = phi_equation_rhs(&s, &b, 1e-9).unwrap();
        for i in 0..10 {
            assert!((g[i] - s.phi[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_rhs_linear_gives_zero_solution() {
        let b = bundle(Preset::P1, 16);
        let sol = solve_phi(&[0.0; 16], &b, &NonlinearitySpec::linear(), &StepConfig::new(0.01), None).unwrap();
        assert_eq!(sol.iters, 0);
        assert!(sol.phi.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn linear_step_is_single_newton_iteration() {
        let b = bundle(Preset::P4, 32);
        let g: Vec<f64> = (0..32).map(|i| ((i * 7 % 5) as f64) - 2.0).collect();
        let sol = solve_phi(&g, &b, &NonlinearitySpec::linear(), &StepConfig::new(0.01), None).unwrap();
        assert_eq!(sol.iters, 1);
    }

    #[test]
    fn kinematic_identities_hold_bitwise() {
        let b = bundle(Preset::P2, 16);
        let mut s = State::zeros(16, 0.01);
        s.phi = b.grid.mode(2);
        s.v = b.grid.mode(3);
        s.theta = b.grid.mode(1);
        let cfg = StepConfig::new(0.01);
        let (next, _) = step(&s, &b, &NonlinearitySpec::cubic(1.0), &cfg).unwrap();
        for i in 0..16 {
            assert_eq!(next.v[i], (next.phi[i] - s.phi[i]) / 0.01);
            assert_eq!(next.z[i], (next.v[i] - s.v[i]) / 0.01);
        }
        assert_eq!(next.t_index, 1);
    }

    #[test]
    fn run_rejects_fractional_step_count() {
        let b = bundle(Preset::P1, 8);
        let init = InitialData::zeros(8);
        let err = run(&init, &b, &NonlinearitySpec::linear(), 1.0, &StepConfig::new(0.3)).unwrap_err();
        assert!(matches!(err, Error::TimeGrid { .. }));
        let traj = run(&init, &b, &NonlinearitySpec::linear(), 1.0, &StepConfig::new(0.25)).unwrap();
        assert_eq!(traj.states.len(), 5);
        for (k, s) in traj.states.iter().enumerate() {
            assert_eq!(s.t_index, k);
            assert!(s.theta.iter().chain(&s.phi).chain(&s.v).chain(&s.z).all(|x| *x == 0.0));
        }
        assert!(traj.reports.iter().all(|r| r.newton_iters == 0));
    }

    #[test]
    fn first_state_acceleration_is_backfilled() {
        let b = bundle(Preset::P2, 12);
        let init = InitialData {
            theta: b.grid.mode(1),
            phi: b.grid.mode(1),
            v: vec![0.0; 12],
        };
        let traj = run(&init, &b, &NonlinearitySpec::cubic(1.0), 0.1, &StepConfig::new(0.05)).unwrap();
        assert_eq!(traj.states[0].z, traj.states[1].z);
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = StepConfig::new(0.1);
        cfg.solve_path = SolvePath::YosidaRegularized { schedule: vec![] };
        assert!(cfg.validate().is_err());
        cfg.solve_path = SolvePath::YosidaRegularized { schedule: vec![1e-2, -1.0] };
        assert!(cfg.validate().is_err());
        assert!(StepConfig::new(0.0).validate().is_err());
    }
}
