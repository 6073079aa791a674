use crate::error::Result;
use crate::nonlinearity::NonlinearitySpec;
use crate::operators::OperatorBundle;
use crate::stepper::{run, InitialData, SolvePath, StepConfig, Trajectory};

/// Newton tolerance used for reference runs.
pub const REFERENCE_NEWTON_TOL: f64 = 1e-13;

/// Self-reference for problems without a closed form: a run at the fine
/// step `h_ref` with a tightened Newton tolerance.
pub fn fine_reference(
    initial: &InitialData,
    bundle: &OperatorBundle,
    nonlin: &NonlinearitySpec,
    t_final: f64,
    h_ref: f64,
    solve_path: SolvePath,
) -> Result<Trajectory> {
    let cfg = StepConfig {
        h: h_ref,
        newton_tol: REFERENCE_NEWTON_TOL,
        newton_max_iter: 50,
        solve_path,
    };
    run(initial, bundle, nonlin, t_final, &cfg)
}
