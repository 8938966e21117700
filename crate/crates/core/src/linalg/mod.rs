//! Dense complex linear algebra kernel.
//!
//! Tensor convention used throughout the crate: C^k ⊗ C^m has composite
//! index `a * m + i`, so the second (environment) factor runs fastest and
//! `1_k ⊗ U` is block diagonal with k copies of U.

mod decomp;
mod eig;
mod json;
mod matrix;
pub mod random;
mod tensor;

pub use decomp::{
    clamp_to_contraction, cholesky, inverse, lower_triangular_inverse, operator_norm, polar_unitary,
    psd_pinv, psd_sqrt, qr, solve, svd, trace_norm, Svd,
};
pub use eig::{herm_eig, herm_eigvals, HermEig};
pub use matrix::{ComplexMatrix, C64, I, ONE, ZERO};
pub use random::{haar_isometry, haar_unitary, RngStream};
pub use tensor::{apply_id_kron, id_kron, partial_trace_env, partial_trace_first};

/// Smallest eigenvalue of a Hermitian matrix.
pub fn lambda_min(a: &ComplexMatrix) -> crate::error::Result<f64> {
    Ok(herm_eig(a)?.min())
}
