//! Grids, discrete elliptic operators and the operator bundles of the five
//! model problems.

mod bundle;
mod grid;
mod matrix;

pub use bundle::{
    build_bundle, h_tilde, BundleAudit, OperatorBundle, Preset, PresetParams, ProblemPreset,
    StructuralConstants,
};
pub use grid::{Bc, Grid1D};
pub use matrix::{assemble_laplacian, solve_symmetric_tridiagonal, DiscreteOperator, OperatorKind};
