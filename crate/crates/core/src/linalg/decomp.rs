//! Decompositions and norms built on the Hermitian eigensolver.

use super::eig::herm_eig;
use super::matrix::{ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Thin singular value decomposition `A = U diag(σ) V*`, σ descending.
///
/// `u` is rows×p and `v` is cols×p with p = min(rows, cols); left factors
/// belonging to zero singular values are completed to an orthonormal set.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

/// SVD through the eigendecomposition of the smaller Gram matrix.
pub fn svd(a: &ComplexMatrix) -> Result<Svd> {
    a.check_finite()?;
    let (rows, cols) = a.shape();
    if rows < cols {
        let t = svd(&a.adjoint())?;
        return Ok(Svd { u: t.v, singular_values: t.singular_values, v: t.u });
    }
    let gram = a.adjoint_mul(a);
    let eig = herm_eig(&gram)?;
    let p = cols;
    let mut singular_values = Vec::with_capacity(p);
    let mut v = ComplexMatrix::zeros(cols, p);
    for (j, idx) in (0..p).rev().enumerate() {
        singular_values.push(eig.eigenvalues[idx].max(0.0).sqrt());
        v.set_col(j, &eig.eigenvectors.col(idx));
    }
    let smax = singular_values.first().copied().unwrap_or(0.0);
    let cutoff = 1e-13 * smax.max(1e-300) * (rows.max(cols) as f64);
    let av = a.matmul(&v);
    let mut u_cols: Vec<Vec<C64>> = Vec::with_capacity(p);
    for (j, &s) in singular_values.iter().enumerate() {
        if s > cutoff {
            let mut col: Vec<C64> = av.col(j).iter().map(|z| z / s).collect();
            // tiny σ carry rounding noise; keep the column only if it
            // survives re-orthogonalization against the earlier ones
            orthogonalize_against(&mut col, &u_cols);
            orthogonalize_against(&mut col, &u_cols);
            if normalize(&mut col) > 0.5 {
                u_cols.push(col);
                continue;
            }
        }
        u_cols.push(next_orthonormal(rows, &u_cols));
    }
    let mut u = ComplexMatrix::zeros(rows, p);
    for (j, col) in u_cols.iter().enumerate() {
        u.set_col(j, col);
    }
    Ok(Svd { u, singular_values, v })
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn normalize(v: &mut [C64]) -> f64 {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        for z in v.iter_mut() {
            *z /= n;
        }
    }
    n
}

fn orthogonalize_against(v: &mut [C64], basis: &[Vec<C64>]) {
    for b in basis {
        let c = dot(b, v);
        for (x, y) in v.iter_mut().zip(b) {
            *x -= c * y;
        }
    }
}

/// Smallest-index unit vector direction orthogonal to `basis`.
fn next_orthonormal(dim: usize, basis: &[Vec<C64>]) -> Vec<C64> {
    let mut best: Option<(f64, Vec<C64>)> = None;
    for e in 0..dim {
        let mut v = vec![ZERO; dim];
        v[e] = ONE;
        orthogonalize_against(&mut v, basis);
        orthogonalize_against(&mut v, basis);
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 0.5 {
            normalize(&mut v);
            return v;
        }
        if best.as_ref().map_or(true, |(bn, _)| n > *bn) {
            best = Some((n, v));
        }
    }
    let (_, mut v) = best.expect("dimension must be positive");
    normalize(&mut v);
    v
}

/// Largest singular value.
pub fn operator_norm(a: &ComplexMatrix) -> Result<f64> {
    a.check_finite()?;
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return Ok(0.0);
    }
    let gram = if r >= c { a.adjoint_mul(a) } else { a.matmul(&a.adjoint()) };
    let e = herm_eig(&gram)?;
    Ok(e.max().max(0.0).sqrt())
}

/// Sum of singular values. Hermitian inputs use |eigenvalues| directly.
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    a.check_finite()?;
    if a.is_square() && a.hermiticity_defect() <= 1e-14 * a.max_abs().max(1.0) {
        let e = herm_eig(a)?;
        return Ok(e.eigenvalues.iter().map(|l| l.abs()).sum());
    }
    Ok(svd(a)?.singular_values.iter().sum())
}

/// Square root of a positive semidefinite matrix.
///
/// Eigenvalues down to `-1e-8 * max(1, ‖A‖)` are clamped to zero; anything
/// more negative is reported as [`Error::NotPsd`].
pub fn psd_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let e = herm_eig(a)?;
    let scale = e.eigenvalues.iter().fold(1.0_f64, |m, l| m.max(l.abs()));
    if e.min() < -1e-8 * scale {
        return Err(Error::NotPsd { min_eig: e.min() });
    }
    // eigenvalues at the rounding floor of the eigensolver are zeros
    let floor = 64.0 * f64::EPSILON * scale * e.eigenvalues.len() as f64;
    Ok(e.reconstruct_with(|l| if l <= floor { 0.0 } else { l.sqrt() }))
}

/// Thin QR by twice-iterated modified Gram-Schmidt. Requires rows >= cols.
pub fn qr(a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    a.check_finite()?;
    let (rows, cols) = a.shape();
    if rows < cols {
        return Err(Error::DimensionMismatch(format!("qr needs rows >= cols, got {rows}x{cols}")));
    }
    let mut q_cols: Vec<Vec<C64>> = Vec::with_capacity(cols);
    let mut r = ComplexMatrix::zeros(cols, cols);
    for j in 0..cols {
        let mut v = a.col(j);
        for _pass in 0..2 {
            for (i, qi) in q_cols.iter().enumerate() {
                let c = dot(qi, &v);
                r[(i, j)] += c;
                for (x, y) in v.iter_mut().zip(qi) {
                    *x -= c * y;
                }
            }
        }
        let n = normalize(&mut v);
        if n <= 1e-14 {
            v = next_orthonormal(rows, &q_cols);
        }
        r[(j, j)] = C64::new(n, 0.0);
        q_cols.push(v);
    }
    let mut q = ComplexMatrix::zeros(rows, cols);
    for (j, col) in q_cols.iter().enumerate() {
        q.set_col(j, col);
    }
    Ok((q, r))
}

/// Lower-triangular Cholesky factor `L` with `A = L L*`.
pub fn cholesky(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.require_square()?;
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPsd { min_eig: d });
        }
        let d = d.sqrt();
        l[(j, j)] = C64::new(d, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Inverse of a lower-triangular matrix.
pub fn lower_triangular_inverse(l: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = l.require_square()?;
    let mut inv = ComplexMatrix::zeros(n, n);
    for c in 0..n {
        for r in c..n {
            let mut s = if r == c { ONE } else { ZERO };
            for k in c..r {
                s -= l[(r, k)] * inv[(k, c)];
            }
            if l[(r, r)] == ZERO {
                return Err(Error::Singular);
            }
            inv[(r, c)] = s / l[(r, r)];
        }
    }
    Ok(inv)
}

/// Solves `A X = B` by LU with partial pivoting.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.require_square()?;
    if b.rows() != n {
        return Err(Error::DimensionMismatch(format!("solve: A is {n}x{n}, B has {} rows", b.rows())));
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| lu[(i, k)].norm().total_cmp(&lu[(j, k)].norm()))
            .unwrap();
        if lu[(piv, k)].norm() <= 1e-15 * scale {
            return Err(Error::Singular);
        }
        if piv != k {
            for c in 0..n {
                let t = lu[(k, c)];
                lu[(k, c)] = lu[(piv, c)];
                lu[(piv, c)] = t;
            }
            for c in 0..x.cols() {
                let t = x[(k, c)];
                x[(k, c)] = x[(piv, c)];
                x[(piv, c)] = t;
            }
        }
        let p = lu[(k, k)];
        for i in (k + 1)..n {
            let f = lu[(i, k)] / p;
            if f == ZERO {
                continue;
            }
            for c in k..n {
                let v = lu[(k, c)];
                lu[(i, c)] -= f * v;
            }
            for c in 0..x.cols() {
                let v = x[(k, c)];
                x[(i, c)] -= f * v;
            }
        }
    }
    for c in 0..x.cols() {
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in (i + 1)..n {
                s -= lu[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / lu[(i, i)];
        }
    }
    Ok(x)
}

pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.require_square()?;
    solve(a, &ComplexMatrix::identity(n))
}

/// Moore-Penrose pseudo-inverse of a Hermitian PSD matrix; eigenvalues
/// below `rel_tol * λ_max` are treated as zero.
pub fn psd_pinv(a: &ComplexMatrix, rel_tol: f64) -> Result<ComplexMatrix> {
    let e = herm_eig(a)?;
    let cut = rel_tol * e.max().abs().max(f64::MIN_POSITIVE);
    Ok(e.reconstruct_with(|l| if l > cut { 1.0 / l } else { 0.0 }))
}

/// Unitary factor of the polar decomposition `A = U P` (square A).
/// Rank-deficient inputs get a completion from the SVD bases.
pub fn polar_unitary(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let s = svd(a)?;
    Ok(s.u.matmul(&s.v.adjoint()))
}

/// Rescales singular values above one down to one.
pub fn clamp_to_contraction(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let s = svd(a)?;
    if s.singular_values.first().copied().unwrap_or(0.0) <= 1.0 {
        return Ok(a.clone());
    }
    let d: Vec<f64> = s.singular_values.iter().map(|&x| x.min(1.0)).collect();
    Ok(s.u.matmul(&ComplexMatrix::diag_real(&d)).matmul(&s.v.adjoint()))
}
