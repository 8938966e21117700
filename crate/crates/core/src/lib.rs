//! Numerical toolkit for the continuity of Stinespring dilations.
//!
//! The crate computes channel distances (diamond norm, operational fidelity,
//! Bures distance), builds optimal environment unitaries for pairs of
//! Stinespring isometries, brackets `min_U ‖V₁ − (1 ⊗ U)V₂‖∞` over the
//! environment unitary group, and runs randomized checks of the related
//! inequalities.

pub mod channels;
pub mod cli;
pub mod dilation;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod sdp;

pub use error::{Error, Result};
