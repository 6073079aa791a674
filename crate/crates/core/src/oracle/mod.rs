//! Reference solutions: exact per-mode exponentials of the linear
//! semi-discrete system and fine-step self-references.

pub mod expm;
mod modal;
mod reference;

pub use modal::{
    exact_linear_solution, inverse_modal_transform, modal_transform, ModalOracle, ModalSystem, ReferenceState,
};
pub use reference::{fine_reference, REFERENCE_NEWTON_TOL};
