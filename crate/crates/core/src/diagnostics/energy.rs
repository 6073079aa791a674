use std::io::Write;

use crate::error::{check_dim, Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::operators::OperatorBundle;
use crate::stepper::State;

/// Energy and dissipation of one time level. Square-root norms are taken
/// as quadratic forms, e.g. `|L^{1/2} v|^2 = (L v, v)_H`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyRecord {
    /// `1/2 (L v, v)`
    pub kinetic: f64,
    /// `1/2 (A2 phi, phi)`
    pub elastic: f64,
    /// `1/(2 eta) (B2 theta, theta)`
    pub thermal: f64,
    /// `i(phi)`, the convex potential of `beta`.
    pub potential: f64,
    /// `h (B1 v, v)`
    pub dissipation_b1: f64,
    /// `(h/eta) (B2 theta, A1 theta)`
    pub dissipation_cross: f64,
}

impl EnergyRecord {
    /// `kinetic + elastic + thermal`
    pub fn total(&self) -> f64 {
        self.kinetic + self.elastic + self.thermal
    }

    /// `total + potential`
    pub fn lyapunov(&self) -> f64 {
        self.total() + self.potential
    }
}

pub fn energy(state: &State, bundle: &OperatorBundle, nonlin: &NonlinearitySpec) -> Result<EnergyRecord> {
    check_dim(bundle.dim(), state.dim())?;
    let (h, eta) = (state.h, bundle.eta);
    let a1t = bundle.a1.apply(&state.theta)?;
    Ok(EnergyRecord {
        kinetic: 0.5 * bundle.h_form(&bundle.l, &state.v, &state.v)?,
        elastic: 0.5 * bundle.h_form(&bundle.a2, &state.phi, &state.phi)?,
        thermal: bundle.h_form(&bundle.b2, &state.theta, &state.theta)? / (2.0 * eta),
        potential: nonlin.potential_total(&bundle.grid, &state.phi)?,
        dissipation_b1: h * bundle.h_form(&bundle.b1, &state.v, &state.v)?,
        dissipation_cross: h / eta * bundle.h_form(&bundle.b2, &state.theta, &a1t)?,
    })
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Absolute defect of the discrete energy balance between two consecutive
/// levels:
///
/// ```text
/// E(n+1) - E(n) + 1/2 |L^{1/2} dv|^2 + 1/2 (A2 dphi, dphi) + 1/(2 eta) |B2^{1/2} dtheta|^2
///   + h |B1^{1/2} v_{n+1}|^2 + (h/eta) (B2 theta_{n+1}, A1 theta_{n+1})
///   + (Phi phi_{n+1}, dphi) + h (pi(phi_{n+1}), v_{n+1}) = 0
/// ```
///
/// with `E = kinetic + elastic + thermal` and `d` the forward difference.
pub fn step_identity_residual(
    prev: &State,
    next: &State,
    bundle: &OperatorBundle,
    nonlin: &NonlinearitySpec,
) -> Result<f64> {
    Ok(identity_terms(prev, next, bundle, nonlin)?.iter().sum::<f64>().abs())
}

fn identity_terms(
    prev: &State,
    next: &State,
    bundle: &OperatorBundle,
    nonlin: &NonlinearitySpec,
) -> Result<[f64; 8]> {
    let n = bundle.dim();
    check_dim(n, prev.dim())?;
    check_dim(n, next.dim())?;
    let (h, eta) = (next.h, bundle.eta);
    let e0 = energy(prev, bundle, nonlin)?;
    let e1 = energy(next, bundle, nonlin)?;
    let dv = diff(&next.v, &prev.v);
    let dphi = diff(&next.phi, &prev.phi);
    let dtheta = diff(&next.theta, &prev.theta);
    let beta: Vec<f64> = next.phi.iter().map(|r| nonlin.beta(*r)).collect();
    let pi: Vec<f64> = next.phi.iter().map(|r| nonlin.pi(*r)).collect();
    let grid = &bundle.grid;
    Ok([
        e1.total() - e0.total(),
        0.5 * bundle.h_form(&bundle.l, &dv, &dv)?,
        0.5 * bundle.h_form(&bundle.a2, &dphi, &dphi)?,
        bundle.h_form(&bundle.b2, &dtheta, &dtheta)? / (2.0 * eta),
        e1.dissipation_b1,
        e1.dissipation_cross,
        grid.h_inner(&beta, &dphi)?,
        h * grid.h_inner(&pi, &next.v)?,
    ])
}

/// Checks that `E + i(phi)` does not increase along the trajectory, up to
/// `1e-10 (1 + E(n))`. Returns `(n, excess)` for every step `n -> n+1`
/// that violates it. Only meaningful without the Lipschitz term.
pub fn lyapunov_check(
    states: &[State],
    bundle: &OperatorBundle,
    nonlin: &NonlinearitySpec,
) -> Result<Vec<(usize, f64)>> {
    if !nonlin.pi_is_zero() {
        let mut worst: f64 = 0.0;
        for s in states {
            let pi: Vec<f64> = s.phi.iter().map(|r| nonlin.pi(*r)).collect();
            worst = worst.max(bundle.grid.h_norm(&pi)?);
        }
        log::info!("lyapunov check skipped: source term magnitude up to {worst:e}");
        return Err(Error::SourceTermsPresent);
    }
    let mut out = Vec::new();
    let mut prev = energy(&states[0], bundle, nonlin)?;
    for (k, s) in states.iter().enumerate().skip(1) {
        let cur = energy(s, bundle, nonlin)?;
        let excess = cur.lyapunov() - prev.lyapunov() - 1e-10 * (1.0 + prev.total());
        if excess > 0.0 {
            out.push((k - 1, excess));
        }
        prev = cur;
    }
    Ok(out)
}

/// Energy of a difference of two solutions, in the norm used for the
/// continuous-dependence estimate:
/// `1/2 |L^{1/2} dv|^2 + 1/2 ((A2 dphi, dphi) + |dphi|^2) + 1/(2 eta) |B2^{1/2} dtheta|^2`.
pub fn difference_energy(a: &State, b: &State, bundle: &OperatorBundle) -> Result<f64> {
    let dv = diff(&a.v, &b.v);
    let dphi = diff(&a.phi, &b.phi);
    let dtheta = diff(&a.theta, &b.theta);
    Ok(0.5 * bundle.h_form(&bundle.l, &dv, &dv)?
        + 0.5 * (bundle.h_form(&bundle.a2, &dphi, &dphi)? + bundle.grid.h_inner(&dphi, &dphi)?)
        + bundle.h_form(&bundle.b2, &dtheta, &dtheta)? / (2.0 * bundle.eta))
}

/// One row of the energy CSV.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyRow {
    pub n: usize,
    pub t: f64,
    pub record: EnergyRecord,
    /// Defect of the step ending at `n`; zero for `n = 0`.
    pub identity_residual: f64,
}

pub fn energy_rows(
    states: &[State],
    bundle: &OperatorBundle,
    nonlin: &NonlinearitySpec,
) -> Result<Vec<EnergyRow>> {
    let mut rows = Vec::with_capacity(states.len());
    for (k, s) in states.iter().enumerate() {
        let identity_residual = if k == 0 {
            0.0
        } else {
            step_identity_residual(&states[k - 1], s, bundle, nonlin)?
        };
        rows.push(EnergyRow {
            n: s.t_index,
            t: s.time(),
            record: energy(s, bundle, nonlin)?,
            identity_residual,
        });
    }
    Ok(rows)
}

pub const ENERGY_CSV_COLUMNS: &str =
    "n,t,kinetic,elastic,thermal,potential,dissipation_b1,dissipation_cross,identity_residual";

/// Writes the energy table; `header` lines are emitted first, each prefixed by `# `.
pub fn write_energy_csv<W: Write + ?Sized>(out: &mut W, header: &[String], rows: &[EnergyRow]) -> Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{ENERGY_CSV_COLUMNS}")?;
    for r in rows {
        let e = &r.record;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            r.t,
            e.kinetic,
            e.elastic,
            e.thermal,
            e.potential,
            e.dissipation_b1,
            e.dissipation_cross,
            r.identity_residual
        )?;
    }
    Ok(())
}
