//! Cyclic Jacobi eigensolver for dense complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq` with a diagonal
//! unitary and then applies the real symmetric Jacobi rotation, so the
//! combined 2×2 transform is unitary and annihilates `a_pq` exactly.

use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

const OFF_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 60;

/// Eigen-decomposition `A = Q diag(λ) Q*` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns.
    pub eigenvectors: ComplexMatrix,
}

impl HermEig {
    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.eigenvectors.col(i)
    }

    /// Rebuilds `Q f(Λ) Q*`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let q = &self.eigenvectors;
        let n = q.rows();
        let vals: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for r in 0..n {
            for c in r..n {
                let mut acc = ZERO;
                for (k, &v) in vals.iter().enumerate() {
                    if v != 0.0 {
                        acc += q[(r, k)] * q[(c, k)].conj() * v;
                    }
                }
                out[(r, c)] = acc;
                out[(c, r)] = acc.conj();
            }
            out[(r, r)] = C64::new(out[(r, r)].re, 0.0);
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|l| l)
    }
}

/// Hermitian eigendecomposition. The input is symmetrized before iterating;
/// inputs further than `1e-8 * max(1, ‖A‖)` from Hermitian are rejected.
pub fn herm_eig(a: &ComplexMatrix) -> Result<HermEig> {
    let n = a.require_square()?;
    a.check_finite()?;
    let scale = a.max_abs().max(1.0);
    if a.hermiticity_defect() > 1e-8 * scale {
        return Err(Error::InvalidArgument(format!(
            "matrix is not Hermitian (defect {:e})",
            a.hermiticity_defect()
        )));
    }
    let mut m = a.hermitian_part();
    let mut q = ComplexMatrix::identity(n);

    let total = m.fro_norm();
    let target = OFF_TOL * total.max(f64::MIN_POSITIVE);
    for _sweep in 0..MAX_SWEEPS {
        if off_diagonal_norm(&m) <= target {
            break;
        }
        for p in 0..n {
            for qi in (p + 1)..n {
                rotate(&mut m, &mut q, p, qi);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| q[(r, order[c])]);
    Ok(HermEig { eigenvalues, eigenvectors })
}

/// Eigenvalues only, ascending.
pub fn herm_eigvals(a: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(herm_eig(a)?.eigenvalues)
}

fn off_diagonal_norm(m: &ComplexMatrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                s += m[(r, c)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn rotate(m: &mut ComplexMatrix, q: &mut ComplexMatrix, p: usize, r: usize) {
    let apq = m[(p, r)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let arr = m[(r, r)].re;
    let phase = apq / g;
    let tau = (arr - app) / (2.0 * g);
    let t = if tau == 0.0 {
        1.0
    } else {
        tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // J = D R with D = diag(1, conj(phase)) on (p, r) and real rotation R.
    let jpp = C64::new(c, 0.0);
    let jpr = C64::new(s, 0.0);
    let jrp = phase.conj() * (-s);
    let jrr = phase.conj() * c;

    let n = m.rows();
    // A <- A J (columns p, r)
    for k in 0..n {
        let akp = m[(k, p)];
        let akr = m[(k, r)];
        m[(k, p)] = akp * jpp + akr * jrp;
        m[(k, r)] = akp * jpr + akr * jrr;
    }
    // A <- J* A (rows p, r)
    for k in 0..n {
        let apk = m[(p, k)];
        let ark = m[(r, k)];
        m[(p, k)] = jpp.conj() * apk + jrp.conj() * ark;
        m[(r, k)] = jpr.conj() * apk + jrr.conj() * ark;
    }
    m[(p, r)] = ZERO;
    m[(r, p)] = ZERO;
    m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
    m[(r, r)] = C64::new(m[(r, r)].re, 0.0);
    // Q <- Q J
    for k in 0..n {
        let qkp = q[(k, p)];
        let qkr = q[(k, r)];
        q[(k, p)] = qkp * jpp + qkr * jrp;
        q[(k, r)] = qkp * jpr + qkr * jrr;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::{random_hermitian, RngStream};
    use crate::linalg::operator_norm;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let e = herm_eig(&ComplexMatrix::identity(2)).unwrap();
        assert!(close(&e.eigenvalues, &[1.0, 1.0], 1e-15));
    }

    #[test]
    fn diagonal_is_sorted() {
        let e = herm_eig(&ComplexMatrix::diag_real(&[3.0, -1.0])).unwrap();
        assert!(close(&e.eigenvalues, &[-1.0, 3.0], 1e-15));
    }

    #[test]
    fn pauli_x_eigenvalues() {
        let x = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let e = herm_eig(&x).unwrap();
        assert!(close(&e.eigenvalues, &[-1.0, 1.0], 1e-14));
    }

    #[test]
    fn complex_pauli_y_eigenvalues() {
        let y = ComplexMatrix::from_vec(2, 2, vec![ZERO, -crate::linalg::I, crate::linalg::I, ZERO])
            .unwrap();
        let e = herm_eig(&y).unwrap();
        assert!(close(&e.eigenvalues, &[-1.0, 1.0], 1e-14));
        assert!(e.reconstruct().approx_eq(&y, 1e-14));
    }

    #[test]
    fn rejects_non_square_and_nan() {
        assert!(herm_eig(&ComplexMatrix::zeros(2, 3)).is_err());
        let mut m = ComplexMatrix::identity(2);
        m[(0, 0)] = C64::new(f64::NAN, 0.0);
        assert!(herm_eig(&m).is_err());
    }

    #[test]
    fn reconstruction_and_orthonormality_on_random_inputs() {
        let mut rng = RngStream::new(11).rng();
        for trial in 0..100 {
            let n = 1 + trial % 24;
            let a = random_hermitian(n, &mut rng);
            let e = herm_eig(&a).unwrap();
            let scale = operator_norm(&a).unwrap().max(1.0);
            let err = operator_norm(&(&e.reconstruct() - &a)).unwrap();
            assert!(err <= 1e-10 * scale, "n={n} err={err}");
            let qq = e.eigenvectors.adjoint_mul(&e.eigenvectors);
            assert!(qq.approx_eq(&ComplexMatrix::identity(n), 1e-10));
            assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
