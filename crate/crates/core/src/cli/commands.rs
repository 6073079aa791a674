//! The four subcommands. Each takes a validated [`Problem`] and an output
//! directory and returns the process exit code.

use std::path::Path;

use rayon::prelude::*;
use serde_json::json;

use super::config::Problem;
use super::output::{csv_row, write_csv, write_file, write_json, Header};
use crate::convergence::{bound_sweep, sweep, write_sweep_csv};
use crate::diagnostics::{energy_rows, lyapunov_check, write_energy_csv, BoundGroup};
use crate::error::{Error, Result};
use crate::oracle::ModalOracle;
use crate::stepper::{run, step_count, Trajectory};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_STEP_FAILURE: i32 = 2;

const STEPS_CSV_COLUMNS: &str = "n,t,newton_iters,final_residual,g_norm,theta_residual,phi_residual";
const SNAPSHOT_CSV_COLUMNS: &str = "n,t,x,theta,phi,v,z";
const ORACLE_CSV_COLUMNS: &str = "n,t,dev_theta,dev_phi,dev_v,dev_max";
const BOUNDS_CSV_COLUMNS: &str = "h,group,name,value";

fn failure_json(traj: &Trajectory) -> serde_json::Value {
    match &traj.failure {
        None => serde_json::Value::Null,
        Some(f) => json!({
            "index": f.index,
            "newton_diverged": matches!(f.error, Error::NewtonDiverged { .. }),
            "message": f.error.to_string(),
        }),
    }
}

fn exit_code(traj: &Trajectory) -> i32 {
    match &traj.failure {
        None => EXIT_OK,
        Some(f) => {
            log::error!("step {} failed: {}", f.index, f.error);
            EXIT_STEP_FAILURE
        }
    }
}

fn write_energy(p: &Problem, header: &Header, traj: &Trajectory, out: &Path) -> Result<Vec<crate::diagnostics::EnergyRow>> {
    let rows = energy_rows(&traj.states, &p.bundle, &p.nonlin)?;
    let lines = header.lines()?;
    write_file(out, "energy.csv", |w| write_energy_csv(&mut *w, &lines, &rows))?;
    Ok(rows)
}

/// Runs the trajectory and writes `energy.csv`, `steps.csv`,
/// `summary.json` and, with a stride, `snapshots.csv`.
pub fn cmd_run(p: &Problem, out: &Path, snapshot_stride: Option<usize>) -> Result<i32> {
    let header = Header::new(p);
    let traj = run(&p.initial, &p.bundle, &p.nonlin, p.t_final, &p.step)?;
    let h = traj.h;
    write_energy(p, &header, &traj, out)?;
    let steps: Vec<String> = traj
        .reports
        .iter()
        .enumerate()
        .map(|(k, r)| {
            format!(
                "{},{},{},{}",
                k + 1,
                (k + 1) as f64 * h,
                r.newton_iters,
                csv_row(&[r.final_residual, r.g_norm, r.theta_residual, r.phi_residual])
            )
        })
        .collect();
    write_csv(out, "steps.csv", &header, STEPS_CSV_COLUMNS, &steps)?;
    if let Some(stride) = snapshot_stride {
        let last = traj.states.len() - 1;
        let grid = &p.bundle.grid;
        let mut rows = Vec::new();
        for (k, s) in traj.states.iter().enumerate() {
            if k % stride != 0 && k != last {
                continue;
            }
            for i in 0..grid.n() {
                rows.push(format!(
                    "{},{}",
                    s.t_index,
                    csv_row(&[s.time(), grid.x(i), s.theta[i], s.phi[i], s.v[i], s.z[i]])
                ));
            }
        }
        write_csv(out, "snapshots.csv", &header, SNAPSHOT_CSV_COLUMNS, &rows)?;
    }
    write_json(
        out,
        "summary.json",
        &header,
        json!({
            "steps_requested": step_count(p.t_final, h)?,
            "steps_completed": traj.steps(),
            "complete": traj.is_complete(),
            "max_newton_iters": traj.reports.iter().map(|r| r.newton_iters).max().unwrap_or(0),
            "failure": failure_json(&traj),
        }),
    )?;
    Ok(exit_code(&traj))
}

/// Convergence sweep over `h_list`: `sweep.csv`, `sweep.json` and the
/// a-priori quantities of every member in `bounds.csv`.
pub fn cmd_sweep(p: &Problem, out: &Path) -> Result<i32> {
    let header = Header::new(p);
    let h_list = p.config.h_list();
    let res = sweep(&p.initial, &p.bundle, &p.nonlin, p.t_final, &h_list, &p.step)?;
    let lines = header.lines()?;
    write_file(out, "sweep.csv", |w| write_sweep_csv(&mut *w, &lines, &res))?;
    let bounds = if res.failures.is_empty() {
        let reports = bound_sweep(&p.initial, &p.bundle, &p.nonlin, p.t_final, &h_list, &p.step)?;
        let rows: Vec<String> = reports
            .iter()
            .flat_map(|r| {
                r.quantities
                    .iter()
                    .map(move |q| format!("{},{},{},{}", r.h, group_name(q.group), q.name, q.value))
            })
            .collect();
        write_csv(out, "bounds.csv", &header, BOUNDS_CSV_COLUMNS, &rows)?;
        true
    } else {
        false
    };
    write_json(
        out,
        "sweep.json",
        &header,
        json!({
            "fitted_order": res.fitted_order,
            "fitted_M": res.fitted_m,
            "rate_ok": res.rate_ok(),
            "reports": res.reports,
            "failures": res.failures,
            "bounds_written": bounds,
        }),
    )?;
    for f in &res.failures {
        log::error!("sweep member h = {} failed: {}", f.h, f.message);
    }
    Ok(if res.failures.is_empty() { EXIT_OK } else { EXIT_STEP_FAILURE })
}

fn group_name(g: BoundGroup) -> &'static str {
    match g {
        BoundGroup::Energy => "energy",
        BoundGroup::FirstStep => "first_step",
        BoundGroup::Acceleration => "acceleration",
        BoundGroup::Nonlinear => "nonlinear",
        BoundGroup::HeatRate => "heat_rate",
        BoundGroup::HeatRegularity => "heat_regularity",
        BoundGroup::Strong => "strong",
        BoundGroup::Interpolant => "interpolant",
    }
}

/// Per-step energy balance defects (`energy.csv`) and the Lyapunov check
/// (`audit.json`); the check is skipped when `pi` is present.
pub fn cmd_energy_audit(p: &Problem, out: &Path) -> Result<i32> {
    let header = Header::new(p);
    let traj = run(&p.initial, &p.bundle, &p.nonlin, p.t_final, &p.step)?;
    let rows = write_energy(p, &header, &traj, out)?;
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    for w in rows.windows(2) {
        max_abs = max_abs.max(w[1].identity_residual);
        max_rel = max_rel.max(w[1].identity_residual / (1.0 + w[0].record.total()));
    }
    let lyapunov = match lyapunov_check(&traj.states, &p.bundle, &p.nonlin) {
        Ok(v) => json!({
            "checked": true,
            "violations": v.iter().map(|(n, e)| json!({"step": n, "excess": e})).collect::<Vec<_>>(),
        }),
        Err(Error::SourceTermsPresent) => json!({
            "checked": false,
            "reason": Error::SourceTermsPresent.to_string(),
            "violations": [],
        }),
        Err(e) => return Err(e),
    };
    write_json(
        out,
        "audit.json",
        &header,
        json!({
            "steps_completed": traj.steps(),
            "max_identity_residual": max_abs,
            "max_relative_identity_residual": max_rel,
            "lyapunov": lyapunov,
            "failure": failure_json(&traj),
        }),
    )?;
    Ok(exit_code(&traj))
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Sup-norm deviation of the stepper from the exact modal solution at every
/// step (`oracle.csv`, `oracle.json`). Linear problems only.
pub fn cmd_oracle_check(p: &Problem, out: &Path) -> Result<i32> {
    let header = Header::new(p);
    let oracle = ModalOracle::new(&p.initial, &p.bundle, &p.nonlin)?;
    let traj = run(&p.initial, &p.bundle, &p.nonlin, p.t_final, &p.step)?;
    let devs: Vec<[f64; 3]> = traj
        .states
        .par_iter()
        .map(|s| {
            let r = oracle.at(s.time())?;
            Ok([sup_diff(&s.theta, &r.theta), sup_diff(&s.phi, &r.phi), sup_diff(&s.v, &r.v)])
        })
        .collect::<Result<_>>()?;
    let max_of = |d: &[f64; 3]| d.iter().copied().fold(0.0, f64::max);
    let rows: Vec<String> = traj
        .states
        .iter()
        .zip(&devs)
        .map(|(s, d)| format!("{},{}", s.t_index, csv_row(&[s.time(), d[0], d[1], d[2], max_of(d)])))
        .collect();
    write_csv(out, "oracle.csv", &header, ORACLE_CSV_COLUMNS, &rows)?;
    let last = devs.last().copied().unwrap_or([0.0; 3]);
    write_json(
        out,
        "oracle.json",
        &header,
        json!({
            "steps_completed": traj.steps(),
            "max_deviation": devs.iter().map(max_of).fold(0.0, f64::max),
            "final_deviation": {"theta": last[0], "phi": last[1], "v": last[2]},
            "failure": failure_json(&traj),
        }),
    )?;
    Ok(exit_code(&traj))
}
