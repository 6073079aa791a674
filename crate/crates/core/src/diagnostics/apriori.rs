use crate::error::{Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::operators::OperatorBundle;
use crate::stepper::{State, Trajectory};

use super::interpolants::{integrate_quadratic, sup_nodes_midpoints, SpaceNorm};

/// Which group of uniform bounds a monitored quantity belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundGroup {
    /// Basic energy bound.
    Energy,
    /// Bounds on the first step.
    FirstStep,
    /// Bounds on the discrete acceleration.
    Acceleration,
    /// Bound on the monotone nonlinearity.
    Nonlinear,
    /// Bounds on the temperature rate in H.
    HeatRate,
    /// Bounds on the temperature rate in V and on `A1 theta`.
    HeatRegularity,
    /// Strong bounds on `B2 theta`, `B1 v`, `A2 phi`.
    Strong,
    /// Bounds on the piecewise-linear interpolants.
    Interpolant,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Quantity {
    pub group: BoundGroup,
    pub name: &'static str,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub h: f64,
    pub quantities: Vec<Quantity>,
}

impl BoundReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.quantities.iter().find(|q| q.name == name).map(|q| q.value)
    }
}

fn apply(op: &crate::operators::DiscreteOperator, u: &[f64]) -> Vec<f64> {
    op.apply(u).expect("dimension checked")
}

/// Evaluates every monitored norm of the interpolants of `traj`. Squared
/// norms are reported as squares, as they appear in the bounds.
pub fn apriori_monitor(traj: &Trajectory, bundle: &OperatorBundle, nonlin: &NonlinearitySpec) -> Result<BoundReport> {
    if !traj.is_complete() || traj.states.len() < 2 {
        return Err(Error::InvalidParameter {
            field: "trajectory",
            reason: "a-priori monitor needs a complete trajectory".into(),
        });
    }
    let st: &[State] = &traj.states;
    let h = traj.h;
    let big_n = st.len() - 1;
    let grid = &bundle.grid;
    let eta = bundle.eta;
    for s in st {
        crate::error::check_dim(bundle.dim(), s.dim())?;
    }
    let hn = |u: &[f64]| SpaceNorm::H.sq(grid, u);
    let vn = |u: &[f64]| SpaceNorm::V.sq(grid, u);
    let form = |op: &crate::operators::DiscreteOperator, u: &[f64]| bundle.h_form(op, u, u);
    let rate = |n: usize, f: fn(&State) -> &Vec<f64>| -> Vec<f64> {
        f(&st[n + 1]).iter().zip(f(&st[n])).map(|(b, a)| (b - a) / h).collect()
    };
    // L-infinity over the bar interpolant: levels 1..=N.
    let sup_bar = |g: &dyn Fn(&State) -> Result<f64>| -> Result<f64> {
        let mut m: f64 = 0.0;
        for s in &st[1..] {
            m = m.max(g(s)?);
        }
        Ok(m)
    };
    // L2 over the bar interpolant.
    let l2_bar = |g: &dyn Fn(&State) -> Result<f64>| -> Result<f64> {
        let mut acc = 0.0;
        for s in &st[1..] {
            acc += h * g(s)?;
        }
        Ok(acc)
    };
    // L2 of the slope of a hat interpolant.
    let l2_rate = |f: fn(&State) -> &Vec<f64>, g: &dyn Fn(&[f64]) -> Result<f64>| -> Result<f64> {
        let mut acc = 0.0;
        for n in 0..big_n {
            acc += h * g(&rate(n, f))?;
        }
        Ok(acc)
    };
    let hat_at = |n: usize, s: f64, f: fn(&State) -> &Vec<f64>| -> Vec<f64> {
        f(&st[n]).iter().zip(f(&st[n + 1])).map(|(a, b)| (1.0 - s) * a + s * b).collect()
    };

    let mut q = Vec::new();
    let mut push = |group, name, value: f64| q.push(Quantity { group, name, value });
    use BoundGroup::*;

    push(Energy, "v_bar_linf_h_sq", sup_bar(&|s| hn(&s.v))?);
    push(Energy, "h_z_bar_l2_h_sq", h * l2_bar(&|s| hn(&s.z))?);
    push(Energy, "b1_v_bar_l2_sq", l2_bar(&|s| form(&bundle.b1, &s.v))?);
    push(Energy, "phi_bar_linf_v_sq", sup_bar(&|s| vn(&s.phi))?);
    push(Energy, "h_v_bar_l2_v_sq", h * l2_bar(&|s| vn(&s.v))?);
    push(Energy, "b2_theta_bar_linf_sq", sup_bar(&|s| form(&bundle.b2, &s.theta))?);
    push(Energy, "h_b2_theta_rate_l2_sq", h * l2_rate(|s| &s.theta, &|u| form(&bundle.b2, u))?);

    let s1 = &st[1];
    let w: Vec<f64> = s1
        .v
        .iter()
        .zip(apply(&bundle.a1, &s1.theta))
        .map(|(v, a)| eta * v + a)
        .collect();
    push(FirstStep, "z1_h_sq", hn(&s1.z)?);
    push(FirstStep, "h_b1_z1_sq", h * form(&bundle.b1, &s1.z)?);
    push(FirstStep, "v1_v_sq", vn(&s1.v)?);
    push(FirstStep, "h2_z1_v_sq", h * h * vn(&s1.z)?);
    push(FirstStep, "b2_first_step_form", form(&bundle.b2, &w)?);

    push(Acceleration, "z_bar_linf_h_sq", sup_bar(&|s| hn(&s.z))?);
    push(Acceleration, "b1_z_bar_l2_sq", l2_bar(&|s| form(&bundle.b1, &s.z))?);
    push(Acceleration, "v_bar_linf_v_sq", sup_bar(&|s| vn(&s.v))?);
    push(Acceleration, "h_z_bar_l2_v_sq", h * l2_bar(&|s| vn(&s.z))?);

    push(
        Nonlinear,
        "beta_phi_bar_linf_h",
        sup_bar(&|s| {
            let b: Vec<f64> = s.phi.iter().map(|r| nonlin.beta(*r)).collect();
            hn(&b)
        })?
        .sqrt(),
    );

    push(HeatRate, "theta_rate_l2_h_sq", l2_rate(|s| &s.theta, &|u| hn(u))?);
    push(HeatRate, "h_theta_rate_l2_v_sq", h * l2_rate(|s| &s.theta, &|u| vn(u))?);
    push(HeatRate, "theta_bar_linf_v_sq", sup_bar(&|s| vn(&s.theta))?);

    push(HeatRegularity, "theta_rate_l2_v_sq", l2_rate(|s| &s.theta, &|u| vn(u))?);
    push(HeatRegularity, "a1_theta_bar_linf_h_sq", sup_bar(&|s| hn(&apply(&bundle.a1, &s.theta)))?);

    push(Strong, "b2_theta_bar_linf_h_sq", sup_bar(&|s| hn(&apply(&bundle.b2, &s.theta)))?);
    push(Strong, "b1_v_bar_l2_h_sq", l2_bar(&|s| hn(&apply(&bundle.b1, &s.v)))?);
    push(Strong, "a2_phi_bar_l2_h_sq", l2_bar(&|s| hn(&apply(&bundle.a2, &s.phi)))?);

    let sup_hat = |f: fn(&State) -> &Vec<f64>, norm: SpaceNorm| {
        sup_nodes_midpoints(big_n, |n, s| norm.sq(grid, &hat_at(n, s, f))).map(f64::sqrt)
    };
    let phi_w1inf = sup_hat(|s| &s.phi, SpaceNorm::V)? + sup_bar(&|s| vn(&s.v))?.sqrt();
    let v_w1inf = sup_hat(|s| &s.v, SpaceNorm::H)? + sup_bar(&|s| hn(&s.z))?.sqrt();
    let theta_l2v = integrate_quadratic(big_n, h, |n, s| vn(&hat_at(n, s, |x| &x.theta)))?;
    let theta_h1v = (theta_l2v + l2_rate(|s| &s.theta, &|u| vn(u))?).sqrt();
    push(Interpolant, "phi_hat_w1inf_v", phi_w1inf);
    push(Interpolant, "v_hat_w1inf_h", v_w1inf);
    push(Interpolant, "v_hat_linf_v", sup_hat(|s| &s.v, SpaceNorm::V)?);
    push(Interpolant, "theta_hat_h1_v", theta_h1v);
    push(Interpolant, "theta_hat_linf_v", sup_hat(|s| &s.theta, SpaceNorm::V)?);

    Ok(BoundReport { h, quantities: q })
}

/// A monitored quantity whose maximum over an h-sweep exceeds `factor`
/// times its value at the largest `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundViolation {
    pub name: &'static str,
    pub reference: f64,
    pub max: f64,
}

/// Compares the reports of an h-sweep against the report at the largest `h`.
/// A quantity passes if `max <= factor * reference + 1e-12 (1 + reference)`,
/// so identically vanishing quantities pass.
pub fn uniform_bound_check(reports: &[BoundReport], factor: f64) -> Vec<BoundViolation> {
    let Some(coarse) = reports.iter().max_by(|a, b| a.h.total_cmp(&b.h)) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for q in &coarse.quantities {
        let max = reports
            .iter()
            .filter_map(|r| r.get(q.name))
            .fold(f64::NEG_INFINITY, f64::max);
        if !(max <= factor * q.value + 1e-12 * (1.0 + q.value.abs())) {
            out.push(BoundViolation {
                name: q.name,
                reference: q.value,
                max,
            });
        }
    }
    out
}
