//! Implicit time discretization of a coupled parabolic-hyperbolic system
//!
//! ```text
//! theta' + eta phi' + A1 theta = 0
//! L phi'' + B1 phi' + A2 phi + Phi(phi) + Lip(phi) = B2 theta
//! ```
//!
//! on one-dimensional finite-difference grids, with energy diagnostics,
//! exact modal reference solutions and a convergence harness.

pub mod error;
pub mod operators;
pub mod nonlinearity;
pub mod stepper;
pub mod diagnostics;
pub mod oracle;
pub mod convergence;
pub mod cli;

pub use error::{Error, Result};
