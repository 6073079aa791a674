//! Error norms against a reference solution, h-sweeps and order fits.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{apriori_monitor, difference_energy, BoundReport};
use crate::error::{check_dim, Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::operators::OperatorBundle;
use crate::oracle::{fine_reference, ModalOracle, ReferenceState};
use crate::stepper::{run, InitialData, StepConfig, Trajectory};

/// Time-continuous reference `(theta, phi, v)`.
pub trait Reference: Sync {
    fn sample(&self, t: f64) -> Result<ReferenceState>;
}

impl Reference for ModalOracle {
    fn sample(&self, t: f64) -> Result<ReferenceState> {
        self.at(t)
    }
}

/// Piecewise-linear interpolation of a (fine) trajectory.
pub struct TrajectoryReference<'a> {
    pub traj: &'a Trajectory,
}

impl Reference for TrajectoryReference<'_> {
    fn sample(&self, t: f64) -> Result<ReferenceState> {
        let st = &self.traj.states;
        let r = t / self.traj.h;
        let last = (st.len() - 1) as f64;
        if !(r >= -1e-9 && r <= last + 1e-9 * last.max(1.0)) {
            return Err(Error::ReferenceMismatch(format!("t = {t} outside the reference interval")));
        }
        let k = r.round();
        let lerp = |f: fn(&crate::stepper::State) -> &Vec<f64>| -> Vec<f64> {
            if (r - k).abs() <= 1e-9 * k.max(1.0) {
                return f(&st[k as usize]).clone();
            }
            let n = (r.floor() as usize).min(st.len() - 2);
            let s = r - n as f64;
            f(&st[n]).iter().zip(f(&st[n + 1])).map(|(a, b)| (1.0 - s) * a + s * b).collect()
        };
        Ok(ReferenceState {
            t,
            theta: lerp(|s| &s.theta),
            phi: lerp(|s| &s.phi),
            v: lerp(|s| &s.v),
        })
    }
}

/// The seven error quantities, plus the step size.
///
/// `e1 = |L^{1/2}(v_hat - v)|_{Linf H}`, `e2 = |B1^{1/2}(v_bar - v)|_{L2 H}`,
/// `e3 = |phi_hat - phi|_{Linf V}`, `e4 = |theta_hat - theta|_{Linf H}`,
/// `e5 = |theta_bar - theta|_{L2 V}`, `e6 = |B2^{1/2}(theta_hat - theta)|_{Linf H}`,
/// `e7 = int (B2 (theta_bar - theta), A1 (theta_bar - theta)) dt` (not square rooted).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ErrorReport {
    pub h: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
    pub e5: f64,
    pub e6: f64,
    pub e7: f64,
}

impl ErrorReport {
    pub fn values(&self) -> [f64; 7] {
        [self.e1, self.e2, self.e3, self.e4, self.e5, self.e6, self.e7]
    }

    pub fn total(&self) -> f64 {
        self.values().iter().sum()
    }
}

/// Points at which `L^inf` norms in time are sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupConvention {
    Nodes,
    NodesAndMidpoints,
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn avg(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
}

/// Error norms of `traj` against `reference`, sampled at the nodes and
/// interval midpoints of `traj`. Between samples the reference is taken as
/// linear, so every time integral is of a piecewise quadratic and is
/// evaluated exactly.
pub fn error_norms(
    traj: &Trajectory,
    reference: &dyn Reference,
    bundle: &OperatorBundle,
    sup: SupConvention,
) -> Result<ErrorReport> {
    if !traj.is_complete() {
        return Err(Error::ReferenceMismatch("trajectory is incomplete".into()));
    }
    let st = &traj.states;
    let h = traj.h;
    let big_n = st.len() - 1;
    let grid = &bundle.grid;
    let refs: Vec<ReferenceState> = (0..=2 * big_n)
        .map(|k| reference.sample(k as f64 * 0.5 * h))
        .collect::<Result<_>>()?;
    for r in &refs {
        check_dim(bundle.dim(), r.theta.len())?;
    }
    let form = |op: &crate::operators::DiscreteOperator, u: &[f64]| bundle.h_form(op, u, u);
    let hat = |n: usize, s: f64, f: fn(&crate::stepper::State) -> &Vec<f64>| -> Vec<f64> {
        f(&st[n]).iter().zip(f(&st[n + 1])).map(|(a, b)| (1.0 - s) * a + s * b).collect()
    };

    let mut rep = ErrorReport {
        h,
        ..Default::default()
    };
    let (mut s1, mut s3, mut s4, mut s6) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let fractions: &[f64] = match sup {
        SupConvention::Nodes => &[0.0, 1.0],
        SupConvention::NodesAndMidpoints => &[0.0, 0.5, 1.0],
    };
    for n in 0..big_n {
        for &s in fractions {
            let r = &refs[2 * n + (2.0 * s) as usize];
            let dv = sub(&hat(n, s, |x| &x.v), &r.v);
            let dphi = sub(&hat(n, s, |x| &x.phi), &r.phi);
            let dth = sub(&hat(n, s, |x| &x.theta), &r.theta);
            s1 = s1.max(form(&bundle.l, &dv)?);
            s3 = s3.max(grid.v_norm_sq(&dphi)?);
            s4 = s4.max(grid.h_inner(&dth, &dth)?);
            s6 = s6.max(form(&bundle.b2, &dth)?);
        }
    }
    rep.e1 = s1.sqrt();
    rep.e3 = s3.sqrt();
    rep.e4 = s4.sqrt();
    rep.e6 = s6.sqrt();

    // Bar interpolant minus the linear reference on each half interval:
    // Simpson with the quarter point, exact for the quadratic integrands.
    let (mut i2, mut i5, mut i7) = (0.0, 0.0, 0.0);
    let hh = 0.5 * h;
    for n in 0..big_n {
        let bar = &st[n + 1];
        for half in 0..2 {
            let (ra, rb) = (&refs[2 * n + half], &refs[2 * n + half + 1]);
            let pts = [
                (ra.v.clone(), ra.theta.clone()),
                (avg(&ra.v, &rb.v), avg(&ra.theta, &rb.theta)),
                (rb.v.clone(), rb.theta.clone()),
            ];
            for (w, (rv, rt)) in [1.0, 4.0, 1.0].iter().zip(&pts) {
                let dv = sub(&bar.v, rv);
                let dth = sub(&bar.theta, rt);
                let a1d = bundle.a1.apply(&dth)?;
                i2 += w * hh / 6.0 * form(&bundle.b1, &dv)?;
                i5 += w * hh / 6.0 * grid.v_norm_sq(&dth)?;
                i7 += w * hh / 6.0 * bundle.h_form(&bundle.b2, &dth, &a1d)?;
            }
        }
    }
    rep.e2 = i2.max(0.0).sqrt();
    rep.e5 = i5.sqrt();
    rep.e7 = i7;
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepFailure {
    pub h: f64,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub reports: Vec<ErrorReport>,
    /// Least-squares slope of `ln(total)` against `ln(h)`.
    pub fitted_order: f64,
    /// `max total / sqrt(h)` over the sweep.
    #[serde(rename = "fitted_M")]
    pub fitted_m: f64,
    pub failures: Vec<SweepFailure>,
}

/// Minimum fitted order accepted by [`SweepResult::rate_ok`].
pub const ORDER_FLOOR: f64 = 0.45;

impl SweepResult {
    pub fn rate_ok(&self) -> bool {
        self.fitted_order >= ORDER_FLOOR && self.fitted_m.is_finite()
    }
}

/// `(order, M)` for a set of reports; `order` is NaN with fewer than two
/// positive totals.
pub fn fit(reports: &[ErrorReport]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .filter(|r| r.total() > 0.0)
        .map(|r| (r.h.ln(), r.total().ln()))
        .collect();
    let m = reports
        .iter()
        .map(|r| r.total() / r.h.sqrt())
        .fold(0.0, f64::max);
    if pts.len() < 2 {
        return (f64::NAN, m);
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxy / sxx, m)
}

/// Checks that `h_list` is strictly decreasing by exact halving.
pub fn validate_h_list(h_list: &[f64]) -> Result<()> {
    if h_list.is_empty() || h_list.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::InvalidParameter {
            field: "h_list",
            reason: "need positive step sizes".into(),
        });
    }
    for w in h_list.windows(2) {
        if (w[0] / w[1] - 2.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                field: "h_list",
                reason: format!("{} -> {} is not a halving", w[0], w[1]),
            });
        }
    }
    Ok(())
}

/// Ratio between the finest sweep step and the fine reference step.
pub const REFERENCE_REFINEMENT: f64 = 32.0;

/// Runs the scheme for every `h` in `h_list` (concurrently) and compares
/// with the modal oracle for linear problems, otherwise with a fine-step
/// reference at `min(h_list) / 32`. Failed members are reported in
/// `failures` and left out of the fit.
pub fn sweep(
    initial: &InitialData,
    bundle: &OperatorBundle,
    nonlin: &NonlinearitySpec,
    t_final: f64,
    h_list: &[f64],
    template: &StepConfig,
) -> Result<SweepResult> {
    validate_h_list(h_list)?;
    let h_tilde = bundle.estimate_structural_constants(nonlin.c_lip())?.h_tilde;
    if let Some(h) = h_list.iter().find(|h| **h >= h_tilde) {
        return Err(Error::InvalidParameter {
            field: "h_list",
            reason: format!("h = {h} is not below the solvability threshold {h_tilde}"),
        });
    }
    let oracle = ModalOracle::new(initial, bundle, nonlin).ok();
    let fine;
    let fine_ref;
    let reference: &dyn Reference = match &oracle {
        Some(o) => o,
        None => {
            let h_min = h_list.iter().copied().fold(f64::INFINITY, f64::min);
            fine = fine_reference(
                initial,
                bundle,
                nonlin,
                t_final,
                h_min / REFERENCE_REFINEMENT,
                template.solve_path.clone(),
            )?;
            if let Some(f) = &fine.failure {
                return Err(Error::ReferenceMismatch(format!(
                    "fine reference failed at step {}: {}",
                    f.index, f.error
                )));
            }
            fine_ref = TrajectoryReference { traj: &fine };
            &fine_ref
        }
    };
    let outcomes: Vec<std::result::Result<ErrorReport, SweepFailure>> = h_list
        .par_iter()
        .map(|&h| {
            let cfg = StepConfig { h, ..template.clone() };
            let fail = |e: Error| SweepFailure { h, message: e.to_string() };
            let traj = run(initial, bundle, nonlin, t_final, &cfg).map_err(fail)?;
            if let Some(f) = traj.failure {
                return Err(SweepFailure {
                    h,
                    message: format!("step {}: {}", f.index, f.error),
                });
            }
            error_norms(&traj, reference, bundle, SupConvention::NodesAndMidpoints).map_err(fail)
        })
        .collect();
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => reports.push(r),
            Err(f) => failures.push(f),
        }
    }
    let (fitted_order, fitted_m) = fit(&reports);
    Ok(SweepResult {
        reports,
        fitted_order,
        fitted_m,
        failures,
    })
}

/// A-priori bound reports for every `h` of a sweep.
pub fn bound_sweep(
    initial: &InitialData,
    bundle: &OperatorBundle,
    nonlin: &NonlinearitySpec,
    t_final: f64,
    h_list: &[f64],
    template: &StepConfig,
) -> Result<Vec<BoundReport>> {
    validate_h_list(h_list)?;
    h_list
        .par_iter()
        .map(|&h| {
            let cfg = StepConfig { h, ..template.clone() };
            let traj = run(initial, bundle, nonlin, t_final, &cfg)?;
            if let Some(f) = traj.failure {
                return Err(f.error);
            }
            apriori_monitor(&traj, bundle, nonlin)
        })
        .collect()
}

pub const SWEEP_CSV_COLUMNS: &str = "h,e1,e2,e3,e4,e5,e6,e7,total";

pub fn write_sweep_csv<W: Write + ?Sized>(out: &mut W, header: &[String], result: &SweepResult) -> Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{SWEEP_CSV_COLUMNS}")?;
    for r in &result.reports {
        write!(out, "{}", r.h)?;
        for e in r.values() {
            write!(out, ",{e}")?;
        }
        writeln!(out, ",{}", r.total())?;
    }
    Ok(())
}

/// Growth of a small perturbation of the initial data, measured in the
/// square root of [`difference_energy`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StabilityEcho {
    pub delta: f64,
    pub initial_norm: f64,
    pub max_norm: f64,
    /// `max_norm / initial_norm`
    pub growth: f64,
    /// `max_norm / delta`
    pub growth_vs_delta: f64,
}

/// Runs `initial` and `initial + delta w` (each field perturbed by the
/// H-normalized first mode) and tracks the energy norm of the difference.
pub fn stability_echo(
    initial: &InitialData,
    bundle: &OperatorBundle,
    nonlin: &NonlinearitySpec,
    t_final: f64,
    delta: f64,
    cfg: &StepConfig,
) -> Result<StabilityEcho> {
    let grid = &bundle.grid;
    let k = grid.mode_range().find(|k| *k > 0).unwrap_or(1);
    let mut w = grid.mode(k);
    let nw = grid.h_norm(&w)?;
    w.iter_mut().for_each(|x| *x *= delta / nw);
    let bump = |u: &[f64]| -> Vec<f64> { u.iter().zip(&w).map(|(a, b)| a + b).collect() };
    let perturbed = InitialData {
        theta: bump(&initial.theta),
        phi: bump(&initial.phi),
        v: bump(&initial.v),
    };
    let (a, b) = rayon::join(
        || run(initial, bundle, nonlin, t_final, cfg),
        || run(&perturbed, bundle, nonlin, t_final, cfg),
    );
    let (a, b) = (a?, b?);
    for t in [&a, &b] {
        if let Some(f) = &t.failure {
            return Err(Error::ReferenceMismatch(format!("run failed at step {}: {}", f.index, f.error)));
        }
    }
    let mut max_norm: f64 = 0.0;
    let mut initial_norm = 0.0;
    for (i, (sa, sb)) in a.states.iter().zip(&b.states).enumerate() {
        let e = difference_energy(sa, sb, bundle)?.sqrt();
        if i == 0 {
            initial_norm = e;
        }
        max_norm = max_norm.max(e);
    }
    Ok(StabilityEcho {
        delta,
        initial_norm,
        max_norm,
        growth: max_norm / initial_norm,
        growth_vs_delta: max_norm / delta,
    })
}
