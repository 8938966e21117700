//! Infeasible primal-dual interior-point method with Nesterov–Todd scaling
//! and a Mehrotra predictor-corrector.
//!
//! Per block, with X = L L* and L* S L = Q Λ Q*, the scaling matrix
//! G = L Q Λ^{-1/4} maps both iterates to the same diagonal point
//! D = Λ^{1/2}: G⁻¹ X G⁻* = G* S G = D. Newton systems are formed in the
//! scaled space, where the symmetrized complementarity operator is diagonal.

use super::{BlockMatrix, SdpProblem, SdpSolution, SdpStatus, Sense, SolverOptions};
use crate::error::{Error, Result};
use crate::linalg::{herm_eig, ComplexMatrix, C64};

const STEP_FRACTION: f64 = 0.95;
const BLOWUP: f64 = 1e12;

pub fn solve(p: &SdpProblem) -> Result<SdpSolution> {
    solve_with(p, &SolverOptions::default())
}

pub fn solve_with(p: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    p.validate()?;
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let c = BlockMatrix { blocks: p.objective.blocks.iter().map(|b| b.scale_real(sign)).collect() };
    let dims = p.block_dims.clone();
    let nb = dims.len();
    let nc = p.constraints.len();
    let b: Vec<f64> = p.constraints.iter().map(|k| k.b).collect();
    let big_n: usize = dims.iter().sum();

    let b_norm = norm2(&b);
    let c_norm = c.fro_norm();
    let a_norm_max = p
        .constraints
        .iter()
        .map(|k| k.blocks.iter().flatten().map(|a| a.fro_norm().powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max);

    // starting point in the spirit of SDPT3
    let sq = (big_n as f64).sqrt();
    let mut xi: f64 = 10.0f64.max(sq);
    for k in &p.constraints {
        let an = k.blocks.iter().flatten().map(|a| a.fro_norm().powi(2)).sum::<f64>().sqrt();
        xi = xi.max(big_n as f64 * (1.0 + k.b.abs()) / (1.0 + an));
    }
    let eta = 10.0f64.max(sq).max(c_norm).max(a_norm_max);
    let mut x = BlockMatrix { blocks: dims.iter().map(|&d| ComplexMatrix::identity(d).scale_real(xi)).collect() };
    let mut s = BlockMatrix { blocks: dims.iter().map(|&d| ComplexMatrix::identity(d).scale_real(eta)).collect() };
    let mut y = vec![0.0; nc];

    let mut status = SdpStatus::MaxIter;
    let mut iterations = 0;
    let mut stalls = 0;

    loop {
        let rp: Vec<f64> = p.constraints.iter().map(|k| k.b - k.eval(&x)).collect();
        let rd = dual_residual(p, &c, &y, &s);
        let pobj = c.inner(&x);
        let dobj = dot(&b, &y);
        let pinf = norm2(&rp) / (1.0 + b_norm);
        let dinf = rd.fro_norm() / (1.0 + c_norm);
        let gap = (pobj - dobj).abs();
        if pinf <= opts.feas_tol && dinf <= opts.feas_tol && gap <= opts.gap_tol * pobj.abs().max(1.0) {
            status = SdpStatus::Optimal;
            break;
        }
        if x.fro_norm() > BLOWUP * (1.0 + b_norm) || s.fro_norm() > BLOWUP * (1.0 + c_norm) || norm2(&y) > BLOWUP {
            status = SdpStatus::Infeasible;
            break;
        }
        if iterations >= opts.max_iter || stalls >= 5 {
            break;
        }
        iterations += 1;

        // scaling
        let mut scal = Vec::with_capacity(nb);
        for j in 0..nb {
            scal.push(nt_scaling(&x.blocks[j], &s.blocks[j])?);
        }
        let mu = x.inner(&s) / big_n as f64;

        // scaled constraint matrices and Schur complement
        let at: Vec<Vec<Option<ComplexMatrix>>> = p
            .constraints
            .iter()
            .map(|k| {
                k.blocks
                    .iter()
                    .zip(&scal)
                    .map(|(a, sc)| a.as_ref().map(|a| congruence(&sc.g, a)))
                    .collect()
            })
            .collect();
        let mut schur = vec![0.0; nc * nc];
        for i in 0..nc {
            for jj in i..nc {
                let mut v = 0.0;
                for blk in 0..nb {
                    if let (Some(a), Some(bm)) = (&at[i][blk], &at[jj][blk]) {
                        v += a.inner(bm);
                    }
                }
                schur[i * nc + jj] = v;
                schur[jj * nc + i] = v;
            }
        }
        let chol = SymFactor::new(schur, nc)?;
        let rdt: Vec<ComplexMatrix> = rd.blocks.iter().zip(&scal).map(|(r, sc)| congruence(&sc.g, r)).collect();

        let direction = |rhs: &[ComplexMatrix]| -> Direction {
            let t: Vec<ComplexMatrix> = rhs
                .iter()
                .zip(&scal)
                .map(|(r, sc)| ComplexMatrix::from_fn(r.rows(), r.cols(), |i, j| r[(i, j)] * (2.0 / (sc.d[i] + sc.d[j]))))
                .collect();
            let mut h = rp.clone();
            for (i, hi) in h.iter_mut().enumerate() {
                for blk in 0..nb {
                    if let Some(a) = &at[i][blk] {
                        *hi += a.inner(&rdt[blk]) - a.inner(&t[blk]);
                    }
                }
            }
            let dy = chol.solve(&h);
            let mut dst = rdt.clone();
            for (i, &dyi) in dy.iter().enumerate() {
                for blk in 0..nb {
                    if let Some(a) = &at[i][blk] {
                        dst[blk].axpy(-dyi, a);
                    }
                }
            }
            let dxt: Vec<ComplexMatrix> = t.iter().zip(&dst).map(|(t, s)| (t - s).hermitian_part()).collect();
            Direction { dxt, dst, dy }
        };

        let step = |dir: &Direction| -> Result<(f64, f64)> {
            let mut ap = f64::INFINITY;
            let mut ad = f64::INFINITY;
            for (blk, sc) in scal.iter().enumerate() {
                ap = ap.min(max_step(&sc.d, &dir.dxt[blk])?);
                ad = ad.min(max_step(&sc.d, &dir.dst[blk])?);
            }
            Ok((ap, ad))
        };

        // predictor
        let rhs_aff: Vec<ComplexMatrix> = scal.iter().map(|sc| ComplexMatrix::diag_real(&sc.d.iter().map(|d| -d * d).collect::<Vec<_>>())).collect();
        let aff = direction(&rhs_aff);
        let (ap_a, ad_a) = step(&aff)?;
        let (ap_a, ad_a) = (ap_a.min(1.0), ad_a.min(1.0));
        let mut mu_aff = 0.0;
        for (blk, sc) in scal.iter().enumerate() {
            let dm = ComplexMatrix::diag_real(&sc.d);
            let mut xa = dm.clone();
            xa.axpy(ap_a, &aff.dxt[blk]);
            let mut sa = dm;
            sa.axpy(ad_a, &aff.dst[blk]);
            mu_aff += xa.inner(&sa);
        }
        mu_aff /= big_n as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let rhs: Vec<ComplexMatrix> = scal
            .iter()
            .enumerate()
            .map(|(blk, sc)| {
                let mut r = aff.dxt[blk].matmul(&aff.dst[blk]).hermitian_part().scale_real(-1.0);
                for (i, &d) in sc.d.iter().enumerate() {
                    r[(i, i)] += C64::new(sigma * mu - d * d, 0.0);
                }
                r
            })
            .collect();
        let dir = direction(&rhs);
        let (ap, ad) = step(&dir)?;
        let ap = (STEP_FRACTION * ap).min(1.0);
        let ad = (STEP_FRACTION * ad).min(1.0);
        if ap < 1e-8 && ad < 1e-8 {
            stalls += 1;
        } else {
            stalls = 0;
        }

        for (blk, sc) in scal.iter().enumerate() {
            let dx = sc.g.matmul(&dir.dxt[blk]).matmul(&sc.g.adjoint());
            x.blocks[blk].axpy(ap, &dx);
            x.blocks[blk] = x.blocks[blk].hermitian_part();
        }
        for (yi, dyi) in y.iter_mut().zip(&dir.dy) {
            *yi += ad * dyi;
        }
        // ΔS = Rd − 𝒜*(Δy), applied in unscaled form
        for blk in 0..nb {
            let mut ds = rd.blocks[blk].clone();
            for (i, k) in p.constraints.iter().enumerate() {
                if let Some(a) = &k.blocks[blk] {
                    ds.axpy(-dir.dy[i], a);
                }
            }
            s.blocks[blk].axpy(ad, &ds);
            s.blocks[blk] = s.blocks[blk].hermitian_part();
        }
    }

    let rp: Vec<f64> = p.constraints.iter().map(|k| k.b - k.eval(&x)).collect();
    let rd = dual_residual(p, &c, &y, &s);
    let pobj = c.inner(&x);
    let dobj = dot(&b, &y);
    let (primal_value, dual_value, y) = match p.sense {
        Sense::Minimize => (pobj, dobj, y),
        Sense::Maximize => (-pobj, -dobj, y.iter().map(|v| -v).collect()),
    };
    Ok(SdpSolution {
        x,
        s,
        y,
        primal_value,
        dual_value,
        gap: (primal_value - dual_value).abs(),
        primal_infeasibility: norm2(&rp),
        dual_infeasibility: rd.fro_norm(),
        status,
        iterations,
    })
}

struct Scaling {
    g: ComplexMatrix,
    d: Vec<f64>,
}

struct Direction {
    dxt: Vec<ComplexMatrix>,
    dst: Vec<ComplexMatrix>,
    dy: Vec<f64>,
}

fn nt_scaling(x: &ComplexMatrix, s: &ComplexMatrix) -> Result<Scaling> {
    let ex = herm_eig(x)?;
    let n = x.rows();
    let tiny = f64::MIN_POSITIVE.sqrt();
    let l = ComplexMatrix::from_fn(n, n, |i, j| ex.eigenvectors[(i, j)] * ex.eigenvalues[j].max(tiny).sqrt());
    let lsl = l.adjoint_mul(&s.matmul(&l)).hermitian_part();
    let e = herm_eig(&lsl)?;
    let lam: Vec<f64> = e.eigenvalues.iter().map(|&v| v.max(tiny)).collect();
    let d: Vec<f64> = lam.iter().map(|v| v.sqrt()).collect();
    let lq = l.matmul(&e.eigenvectors);
    let g = ComplexMatrix::from_fn(n, n, |i, j| lq[(i, j)] * lam[j].powf(-0.25));
    Ok(Scaling { g, d })
}

/// G* A G.
fn congruence(g: &ComplexMatrix, a: &ComplexMatrix) -> ComplexMatrix {
    g.adjoint_mul(&a.matmul(g)).hermitian_part()
}

/// Largest α ≤ 1/(−λ_min) keeping D + αΔ ⪰ 0, capped at a large value.
fn max_step(d: &[f64], delta: &ComplexMatrix) -> Result<f64> {
    let n = d.len();
    let m = ComplexMatrix::from_fn(n, n, |i, j| delta[(i, j)] / (d[i] * d[j]).sqrt());
    let lmin = herm_eig(&m)?.min();
    Ok(if lmin >= 0.0 { f64::INFINITY } else { -1.0 / lmin })
}

fn dual_residual(p: &SdpProblem, c: &BlockMatrix, y: &[f64], s: &BlockMatrix) -> BlockMatrix {
    let mut rd = c.clone();
    for (k, &yi) in p.constraints.iter().zip(y) {
        for (blk, a) in k.blocks.iter().enumerate() {
            if let Some(a) = a {
                rd.blocks[blk].axpy(-yi, a);
            }
        }
    }
    for (r, sb) in rd.blocks.iter_mut().zip(&s.blocks) {
        *r -= sb;
    }
    rd
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Real symmetric positive definite factorization with a diagonal shift
/// fallback for nearly singular Schur complements.
struct SymFactor {
    l: Vec<f64>,
    n: usize,
}

impl SymFactor {
    fn new(m: Vec<f64>, n: usize) -> Result<Self> {
        let scale = (0..n).map(|i| m[i * n + i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut shift = 0.0;
        for _ in 0..8 {
            if let Some(l) = cholesky_real(&m, n, shift) {
                return Ok(Self { l, n });
            }
            shift = if shift == 0.0 { 1e-14 * scale } else { shift * 100.0 };
        }
        Err(Error::Solver("Schur complement is not positive definite".into()))
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let l = &self.l;
        let mut z = b.to_vec();
        for i in 0..n {
            let mut v = z[i];
            for k in 0..i {
                v -= l[i * n + k] * z[k];
            }
            z[i] = v / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut v = z[i];
            for k in (i + 1)..n {
                v -= l[k * n + i] * z[k];
            }
            z[i] = v / l[i * n + i];
        }
        z
    }
}

fn cholesky_real(m: &[f64], n: usize, shift: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = m[j * n + j] + shift;
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let mut v = m[i * n + j];
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = v / d;
        }
    }
    Some(l)
}
