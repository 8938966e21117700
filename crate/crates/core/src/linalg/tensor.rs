//! Bipartite tensor helpers on C^k ⊗ C^m with composite index `a * m + i`.

use super::matrix::{ComplexMatrix, ZERO};
use crate::error::{Error, Result};

/// Traces out the second (environment) factor of a (k·m)×(k·m) matrix.
pub fn partial_trace_env(x: &ComplexMatrix, k: usize, m: usize) -> Result<ComplexMatrix> {
    if x.rows() != k * m || x.cols() != k * m {
        return Err(Error::DimensionMismatch(format!(
            "partial trace over {k}x{m} needs a {}x{} matrix, got {}x{}",
            k * m,
            k * m,
            x.rows(),
            x.cols()
        )));
    }
    let mut out = ComplexMatrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            let mut s = ZERO;
            for i in 0..m {
                s += x[(a * m + i, b * m + i)];
            }
            out[(a, b)] = s;
        }
    }
    Ok(out)
}

/// Traces out the first factor of a (k·m)×(k·m) matrix.
pub fn partial_trace_first(x: &ComplexMatrix, k: usize, m: usize) -> Result<ComplexMatrix> {
    if x.rows() != k * m || x.cols() != k * m {
        return Err(Error::DimensionMismatch(format!(
            "partial trace over {k}x{m} needs a {}x{} matrix, got {}x{}",
            k * m,
            k * m,
            x.rows(),
            x.cols()
        )));
    }
    let mut out = ComplexMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let mut s = ZERO;
            for a in 0..k {
                s += x[(a * m + i, a * m + j)];
            }
            out[(i, j)] = s;
        }
    }
    Ok(out)
}

/// `1_k ⊗ u`: k diagonal copies of `u`.
pub fn id_kron(k: usize, u: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::identity(k).kron(u)
}

/// Applies `1_k ⊗ u` to a (k·m)×c matrix without forming the Kronecker product.
pub fn apply_id_kron(u: &ComplexMatrix, v: &ComplexMatrix, k: usize) -> ComplexMatrix {
    let (mo, mi) = u.shape();
    assert_eq!(v.rows(), k * mi, "apply_id_kron: row mismatch");
    let c = v.cols();
    let mut out = ComplexMatrix::zeros(k * mo, c);
    for a in 0..k {
        for i in 0..mo {
            for j in 0..mi {
                let uij = u[(i, j)];
                if uij == ZERO {
                    continue;
                }
                for col in 0..c {
                    out[(a * mo + i, col)] += uij * v[(a * mi + j, col)];
                }
            }
        }
    }
    out
}
