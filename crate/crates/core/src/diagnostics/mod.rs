//! Energy functionals, the per-step energy balance, interpolants in time and
//! monitors for the uniform a-priori bounds.

mod apriori;
mod energy;
mod interpolants;

pub use apriori::{apriori_monitor, uniform_bound_check, BoundGroup, BoundReport, BoundViolation, Quantity};
pub use energy::{
    difference_energy, energy, energy_rows, lyapunov_check, step_identity_residual, write_energy_csv,
    EnergyRecord, EnergyRow, ENERGY_CSV_COLUMNS,
};
pub use interpolants::{
    build_interpolants, integrate_quadratic, interpolants_from_states, interpolation_identities_check,
    sup_nodes_midpoints, Field, IdentityDeviations, InterpolantPair, InterpolantSet, SpaceNorm,
};
