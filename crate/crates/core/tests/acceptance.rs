//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line
//! (visible with `--nocapture`) and asserts the verdict.

mod common;

use common::*;
use soundheat::convergence::{bound_sweep, stability_echo, sweep};
use soundheat::diagnostics::{
    build_interpolants, energy, interpolation_identities_check, lyapunov_check, step_identity_residual,
    uniform_bound_check,
};
use soundheat::operators::{h_tilde, Bc, Preset};
use soundheat::oracle::exact_linear_solution;
use soundheat::stepper::{run, InitialData, StepConfig};

const N: usize = 64;
const SWEEP_H: [f64; 5] = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0, 1.0 / 512.0];

#[test]
fn criterion_1_scheme_residuals() {
    let h = 1.0 / 256.0;
    let mut worst_scaled: f64 = 0.0;
    let mut worst_natural: f64 = 0.0;
    let mut complete = true;
    for preset in PRESETS {
        for bc in BCS {
            let s = setup(preset, bc, N);
            let init = smooth_data(&s.bundle, 1);
            let traj = run(&init, &s.bundle, &s.nonlin, 0.5, &StepConfig::new(h)).unwrap();
            complete &= traj.is_complete();
            for r in &traj.reports {
                let (a, b) = r.scaled_residuals(h);
                let scale = 1.0 + r.g_norm;
                worst_scaled = worst_scaled.max(a.max(b) / scale);
                worst_natural = worst_natural.max(r.theta_residual.max(r.phi_residual) / scale);
            }
        }
    }
    let ok = complete && worst_scaled <= 1e-9 && worst_natural <= 1e-9;
    let detail = format!(
        "max residual / (1 + |g|): {worst_scaled:.3e} (as solved, scaled by h and h^2), {worst_natural:.3e} (unscaled)"
    );
    assert!(verdict(1, ok, &detail), "{detail}");
}

#[test]
fn criterion_2_energy_identity() {
    let h = 1.0 / 256.0;
    let mut worst: f64 = 0.0;
    for preset in PRESETS {
        for bc in BCS {
            let s = setup(preset, bc, N);
            let init = smooth_data(&s.bundle, 2);
            let traj = run(&init, &s.bundle, &s.nonlin, 0.5, &StepConfig::new(h)).unwrap();
            assert!(traj.is_complete());
            for w in traj.states.windows(2) {
                let e = energy(&w[0], &s.bundle, &s.nonlin).unwrap().total();
                let r = step_identity_residual(&w[0], &w[1], &s.bundle, &s.nonlin).unwrap();
                worst = worst.max(r / (1.0 + e));
            }
        }
    }
    let detail = format!("max residual / (1 + E): {worst:.3e}");
    assert!(verdict(2, worst <= 1e-10, &detail), "{detail}");
}

#[test]
fn criterion_3_lyapunov_decay() {
    let h = 1.0 / 256.0;
    let mut violations = 0;
    let mut cases = 0;
    for preset in [Preset::P1, Preset::P2, Preset::P4, Preset::P5] {
        for bc in BCS {
            let s = setup(preset, bc, N);
            assert!(s.nonlin.pi_is_zero());
            let init = smooth_data(&s.bundle, 3);
            let traj = run(&init, &s.bundle, &s.nonlin, 1000.0 * h, &StepConfig::new(h)).unwrap();
            assert!(traj.is_complete());
            assert_eq!(traj.steps(), 1000);
            violations += lyapunov_check(&traj.states, &s.bundle, &s.nonlin).unwrap().len();
            cases += 1;
        }
    }
    let detail = format!("{violations} violations over {cases} runs of 1000 steps");
    assert!(verdict(3, violations == 0, &detail), "{detail}");
}

fn oracle_error(h: f64) -> f64 {
    let s = setup(Preset::P1, Bc::Dirichlet, N);
    let init = first_mode(&s.bundle, [1.0, 1.0, 0.0]);
    let t = 0.1;
    let traj = run(&init, &s.bundle, &s.nonlin, t, &StepConfig::new(h)).unwrap();
    let last = traj.states.last().unwrap();
    let exact = exact_linear_solution(&init, &s.bundle, &s.nonlin, t).unwrap();
    sup_diff(&last.theta, &exact.theta)
        .max(sup_diff(&last.phi, &exact.phi))
        .max(sup_diff(&last.v, &exact.v))
}

#[test]
fn criterion_4_oracle_equivalence() {
    let e1 = oracle_error(1e-4);
    let e2 = oracle_error(5e-5);
    let ratio = e1 / e2;
    let ok = e1 <= 1e-3 && (ratio - 2.0).abs() <= 0.4;
    let detail = format!("sup error {e1:.3e} at h=1e-4, {e2:.3e} at h=5e-5, ratio {ratio:.3}");
    assert!(verdict(4, ok, &detail), "{detail}");
}

#[test]
fn criterion_5_convergence_rate() {
    let mut ok = true;
    let mut detail = String::new();
    for preset in [Preset::P1, Preset::P2] {
        let s = setup(preset, Bc::Dirichlet, N);
        let init = first_mode(&s.bundle, [1.0, 1.0, 0.0]);
        let res = sweep(&init, &s.bundle, &s.nonlin, 0.5, &SWEEP_H, &StepConfig::new(SWEEP_H[0])).unwrap();
        ok &= res.failures.is_empty() && res.reports.len() == SWEEP_H.len() && res.rate_ok();
        detail += &format!(
            "{preset:?}: order {:.3}, M {:.3e}; ",
            res.fitted_order, res.fitted_m
        );
    }
    assert!(verdict(5, ok, &detail), "{detail}");
}

#[test]
fn criterion_6_uniform_bounds() {
    let mut ok = true;
    let mut detail = String::new();
    for preset in [Preset::P1, Preset::P2] {
        let s = setup(preset, Bc::Dirichlet, N);
        let init = first_mode(&s.bundle, [1.0, 1.0, 0.0]);
        let reports = bound_sweep(&init, &s.bundle, &s.nonlin, 0.5, &SWEEP_H, &StepConfig::new(SWEEP_H[0])).unwrap();
        let bad = uniform_bound_check(&reports, 2.0);
        let coarse = &reports[0];
        let worst = coarse
            .quantities
            .iter()
            .filter(|q| q.value > 0.0)
            .map(|q| {
                let m = reports.iter().filter_map(|r| r.get(q.name)).fold(0.0, f64::max);
                (m / q.value, q.name)
            })
            .fold((0.0, ""), |a, b| if b.0 > a.0 { b } else { a });
        ok &= bad.is_empty();
        detail += &format!(
            "{preset:?}: {} quantities, {} violations, worst ratio {:.3} ({}); ",
            coarse.quantities.len(),
            bad.len(),
            worst.0,
            worst.1
        );
    }
    assert!(verdict(6, ok, &detail), "{detail}");
}

#[test]
fn criterion_7_interpolation_identities() {
    let mut worst: f64 = 0.0;
    for (i, preset) in PRESETS.into_iter().enumerate() {
        for bc in BCS {
            let s = setup(preset, bc, 32);
            let init = InitialData::random_smooth(&s.bundle.grid, 70 + i as u64, 0.0).unwrap();
            let traj = run(&init, &s.bundle, &s.nonlin, 0.25, &StepConfig::new(1.0 / 64.0)).unwrap();
            let set = build_interpolants(&traj).unwrap();
            let d = interpolation_identities_check(&set, &s.bundle.grid).unwrap();
            worst = worst.max(d.max());
        }
    }
    let detail = format!("max relative deviation {worst:.3e}");
    assert!(verdict(7, worst <= 1e-12, &detail), "{detail}");
}

#[test]
fn criterion_8_stability_echo() {
    let s = setup(Preset::P2, Bc::Dirichlet, N);
    let init = first_mode(&s.bundle, [1.0, 1.0, 0.0]);
    let echo = stability_echo(&init, &s.bundle, &s.nonlin, 1.0, 1e-8, &StepConfig::new(1.0 / 256.0)).unwrap();
    let ok = echo.growth <= 1e3;
    let detail = format!(
        "growth {:.3} of the difference energy norm (initial {:.3e}, max {:.3e})",
        echo.growth, echo.initial_norm, echo.max_norm
    );
    assert!(verdict(8, ok, &detail), "{detail}");
}

#[test]
fn criterion_9_h_tilde_and_newton() {
    let ht = h_tilde(1.0, 0.0, 1.0, 1.0).unwrap();
    let want = 0.625f64.sqrt() - 0.25;
    let formula_ok = (ht - want).abs() <= 1e-12;
    let mut max_iters = 0;
    let mut complete = true;
    for (i, preset) in PRESETS.into_iter().enumerate() {
        for bc in BCS {
            let s = setup(preset, bc, N);
            let ht = s.bundle.estimate_structural_constants(s.nonlin.c_lip()).unwrap().h_tilde;
            let init = InitialData::random_smooth(&s.bundle.grid, 90 + i as u64, 0.0).unwrap();
            for div in [2.0, 4.0, 16.0, 64.0] {
                let h = ht / div;
                let traj = run(&init, &s.bundle, &s.nonlin, 10.0 * h, &StepConfig::new(h)).unwrap();
                complete &= traj.is_complete();
                max_iters = max_iters.max(traj.reports.iter().map(|r| r.newton_iters).max().unwrap_or(0));
            }
        }
    }
    let ok = formula_ok && complete && max_iters <= 8;
    let detail = format!("h~ = {ht:.15} (expected {want:.15}); max Newton iterations {max_iters}");
    assert!(verdict(9, ok, &detail), "{detail}");
}
