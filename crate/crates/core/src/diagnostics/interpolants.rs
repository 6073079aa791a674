use crate::error::{Error, Result};
use crate::operators::Grid1D;
use crate::stepper::{State, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Theta,
    Phi,
    V,
    Z,
}

/// Piecewise-linear (`hat`) and piecewise-constant (`bar`) time interpolants
/// of one field. On interval `n`, i.e. `(nh, (n+1)h]`, the hat interpolant
/// runs linearly from `y_n` to `y_{n+1}` and the bar interpolant equals
/// `y_{n+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolantPair {
    pub field: Field,
    pub h: f64,
    nodes: Vec<Vec<f64>>,
}

impl InterpolantPair {
    pub fn new(field: Field, h: f64, nodes: Vec<Vec<f64>>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidParameter {
                field: "trajectory",
                reason: "need at least one step".into(),
            });
        }
        Ok(Self { field, h, nodes })
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn node(&self, n: usize) -> &[f64] {
        &self.nodes[n]
    }

    /// Hat interpolant at `t = (n + s) h`, `s` in `[0, 1]`.
    pub fn hat_local(&self, n: usize, s: f64) -> Vec<f64> {
        self.nodes[n]
            .iter()
            .zip(&self.nodes[n + 1])
            .map(|(a, b)| (1.0 - s) * a + s * b)
            .collect()
    }

    /// Bar interpolant on interval `n`.
    pub fn bar_local(&self, n: usize) -> &[f64] {
        &self.nodes[n + 1]
    }

    /// Time derivative of the hat interpolant on interval `n`.
    pub fn slope(&self, n: usize) -> Vec<f64> {
        self.nodes[n]
            .iter()
            .zip(&self.nodes[n + 1])
            .map(|(a, b)| (b - a) / self.h)
            .collect()
    }

    /// Interval index and local fraction of `t`, with `t = nh` assigned to
    /// interval `n - 1` (left-closed at 0).
    fn locate(&self, t: f64) -> (usize, f64) {
        let last = self.intervals();
        let r = (t / self.h).clamp(0.0, last as f64);
        let mut n = r.ceil() as usize;
        n = n.clamp(1, last) - 1;
        (n, (r - n as f64).clamp(0.0, 1.0))
    }

    pub fn hat(&self, t: f64) -> Vec<f64> {
        let (n, s) = self.locate(t);
        self.hat_local(n, s)
    }

    pub fn bar(&self, t: f64) -> Vec<f64> {
        self.bar_local(self.locate(t).0).to_vec()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterpolantSet {
    pub theta: InterpolantPair,
    pub phi: InterpolantPair,
    pub v: InterpolantPair,
    pub z: InterpolantPair,
}

pub fn build_interpolants(traj: &Trajectory) -> Result<InterpolantSet> {
    if !traj.is_complete() {
        return Err(Error::InvalidParameter {
            field: "trajectory",
            reason: "interpolants need a complete trajectory".into(),
        });
    }
    interpolants_from_states(&traj.states, traj.h)
}

pub fn interpolants_from_states(states: &[State], h: f64) -> Result<InterpolantSet> {
    let collect = |f: fn(&State) -> &Vec<f64>| states.iter().map(|s| f(s).clone()).collect();
    Ok(InterpolantSet {
        theta: InterpolantPair::new(Field::Theta, h, collect(|s| &s.theta))?,
        phi: InterpolantPair::new(Field::Phi, h, collect(|s| &s.phi))?,
        v: InterpolantPair::new(Field::V, h, collect(|s| &s.v))?,
        z: InterpolantPair::new(Field::Z, h, collect(|s| &s.z))?,
    })
}

/// Space norm used inside a time norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceNorm {
    H,
    V,
}

impl SpaceNorm {
    pub fn sq(self, grid: &Grid1D, u: &[f64]) -> Result<f64> {
        match self {
            SpaceNorm::H => grid.h_inner(u, u),
            SpaceNorm::V => grid.v_norm_sq(u),
        }
    }
}

/// Sup over intervals of `f(n, s)` at `s = 0, 1/2, 1`.
pub fn sup_nodes_midpoints<F>(intervals: usize, mut f: F) -> Result<f64>
where
    F: FnMut(usize, f64) -> Result<f64>,
{
    let mut m: f64 = 0.0;
    for n in 0..intervals {
        for s in [0.0, 0.5, 1.0] {
            m = m.max(f(n, s)?);
        }
    }
    Ok(m)
}

/// `int_0^T q(t) dt` for `q` quadratic on each interval, by Simpson's rule
/// (exact for quadratics). `q(n, s)` evaluates on interval `n` at fraction `s`.
pub fn integrate_quadratic<F>(intervals: usize, h: f64, mut q: F) -> Result<f64>
where
    F: FnMut(usize, f64) -> Result<f64>,
{
    let mut acc = 0.0;
    for n in 0..intervals {
        acc += h / 6.0 * (q(n, 0.0)? + 4.0 * q(n, 0.5)? + q(n, 1.0)?);
    }
    Ok(acc)
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn rel_dev(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Relative deviations of the six interpolation identities, in order:
///
/// 1. `sup |phi_hat|_V = max(|phi_0|_V, sup |phi_bar|_V)`
/// 2. the same for `v` and 3. for `theta`
/// 4. `sup |phi_bar - phi_hat|_V = h sup |phi_hat'|_V = h sup |v_bar|_V`
/// 5. `sup |v_bar - v_hat|_H = h sup |v_hat'|_H = h sup |z_bar|_H`
/// 6. `|theta_bar - theta_hat|^2_{L2 V} = h^2/3 |theta_hat'|^2_{L2 V}`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityDeviations {
    pub deviations: [f64; 6],
}

impl IdentityDeviations {
    pub fn max(&self) -> f64 {
        self.deviations.iter().copied().fold(0.0, f64::max)
    }
}

pub fn interpolation_identities_check(set: &InterpolantSet, grid: &Grid1D) -> Result<IdentityDeviations> {
    let mut dev = [0.0; 6];
    let h = set.phi.h;
    let n_int = set.phi.intervals();

    for (slot, pair) in [&set.phi, &set.v, &set.theta].into_iter().enumerate() {
        let lhs = sup_nodes_midpoints(n_int, |n, s| SpaceNorm::V.sq(grid, &pair.hat_local(n, s)))?.sqrt();
        let mut rhs = grid.v_norm(pair.node(0))?;
        for n in 0..n_int {
            rhs = rhs.max(grid.v_norm(pair.bar_local(n))?);
        }
        dev[slot] = rel_dev(lhs, rhs);
    }

    // `bar - hat` vanishes at the right end of each interval and is largest
    // at its (open) left end, where the hat value is the previous node.
    let gap = |pair: &InterpolantPair, rate: &InterpolantPair, norm: SpaceNorm| -> Result<f64> {
        let lhs = sup_nodes_midpoints(n_int, |n, s| {
            norm.sq(grid, &sub(pair.bar_local(n), &pair.hat_local(n, s)))
        })?
        .sqrt();
        let mut mid: f64 = 0.0;
        let mut rhs: f64 = 0.0;
        for n in 0..n_int {
            mid = mid.max(norm.sq(grid, &pair.slope(n))?);
            rhs = rhs.max(norm.sq(grid, rate.bar_local(n))?);
        }
        let (mid, rhs) = (h * mid.sqrt(), h * rhs.sqrt());
        Ok(rel_dev(lhs, mid).max(rel_dev(mid, rhs)))
    };
    dev[3] = gap(&set.phi, &set.v, SpaceNorm::V)?;
    dev[4] = gap(&set.v, &set.z, SpaceNorm::H)?;

    let th = &set.theta;
    let lhs = integrate_quadratic(n_int, h, |n, s| {
        SpaceNorm::V.sq(grid, &sub(th.bar_local(n), &th.hat_local(n, s)))
    })?;
    let mut rate = 0.0;
    for n in 0..n_int {
        rate += h * SpaceNorm::V.sq(grid, &th.slope(n))?;
    }
    dev[5] = rel_dev(lhs, h * h / 3.0 * rate);
    Ok(IdentityDeviations { deviations: dev })
}
