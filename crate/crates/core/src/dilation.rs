//! Environment unitaries: block dilations, connecting unitaries, the optimal
//! unitary for large environments, and a certified minimizer of
//! `‖V₁ − (1⊗U)V₂‖∞` over U(m).

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{canonical_kraus, kraus_rank, stinespring_from_kraus, vectorize_kraus, StinespringIsometry};
use crate::error::{Error, Result};
use crate::linalg::{
    apply_id_kron, clamp_to_contraction, haar_unitary, herm_eig, operator_norm, polar_unitary, psd_pinv, psd_sqrt, solve, svd,
    ComplexMatrix, RngStream, C64,
};
use crate::metrics::{env_distance, fidelity_sdp, gamma_mat, FidelityResult};

/// Sz.-Nagy unitary dilation `[[√(1−WW*), W], [W*, −√(1−W*W)]]` of a
/// contraction W (p×q), giving a (p+q)×(p+q) unitary.
pub fn sznagy_dilation(w12: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (p, q) = w12.shape();
    w12.check_finite()?;
    if p == 0 || q == 0 {
        let mut d = ComplexMatrix::identity(p + q);
        for i in p..p + q {
            d[(i, i)] = C64::new(-1.0, 0.0);
        }
        return Ok(d);
    }
    let s = svd(w12)?;
    let top = s.singular_values[0];
    if top > 1.0 + 1e-6 {
        return Err(Error::InvalidArgument(format!("block has norm {top} > 1")));
    }
    let w = if top > 1.0 { clamp_to_contraction(w12)? } else { w12.clone() };
    let defect_left = &ComplexMatrix::identity(p) - &w.matmul(&w.adjoint());
    let defect_right = &ComplexMatrix::identity(q) - &w.adjoint_mul(&w);
    let dl = psd_sqrt(&defect_left.hermitian_part())?;
    let dr = psd_sqrt(&defect_right.hermitian_part())?;
    Ok(ComplexMatrix::block2(&dl, &w, &w.adjoint(), &dr.scale_real(-1.0)))
}

/// Unitary U with `Va = (1⊗U) Vb` for two dilations of the same channel.
///
/// Solves the Kraus alignment `K^a_i = Σ_l U_il K^b_l` in the least-squares
/// sense through the Gram system, then projects onto the unitaries. Kernel
/// freedom in the Gram system is absorbed by the polar completion.
pub fn connecting_unitary(va: &StinespringIsometry, vb: &StinespringIsometry) -> Result<ComplexMatrix> {
    if va.dims() != vb.dims() {
        return Err(Error::DimensionMismatch("isometries have different dimensions".into()));
    }
    let m = va.dim_env();
    let stack = |v: &StinespringIsometry| {
        let cols: Vec<Vec<C64>> = (0..m).map(|e| vectorize_kraus(&v.kraus_op(e))).collect();
        ComplexMatrix::from_fn(cols[0].len(), m, |r, c| cols[c][r])
    };
    let ba = stack(va);
    let bb = stack(vb);
    // Ba = Bb Uᵀ
    let ut = psd_pinv(&bb.adjoint_mul(&bb), 1e-10)?.matmul(&bb.adjoint_mul(&ba));
    let u = polar_unitary(&ut)?.transpose();
    let residual = env_distance(va, vb, &u)?;
    if residual > 1e-6 {
        return Err(Error::Precondition(format!(
            "isometries do not dilate the same channel (residual {residual:e})"
        )));
    }
    Ok(u)
}

#[derive(Debug, Clone)]
pub struct OptimalUnitary {
    pub u: ComplexMatrix,
    /// ‖V₁ − (1⊗U)V₂‖∞ at the returned U.
    pub dist: f64,
    pub fidelity: FidelityResult,
}

/// Environment unitary attaining √(2(1−F)) when m ≥ r₁ + r₂.
///
/// Builds Kraus-rank-sized dilations in orthogonal environment slots
/// (offsets 0 and r₁), takes the r₁×(m−r₁) corner of the optimal contraction,
/// dilates it to a unitary W₀ and conjugates back with the connecting
/// unitaries of each channel.
pub fn optimal_env_unitary(v1: &StinespringIsometry, v2: &StinespringIsometry) -> Result<OptimalUnitary> {
    if v1.dims() != v2.dims() {
        return Err(Error::DimensionMismatch("isometries have different dimensions".into()));
    }
    let m = v1.dim_env();
    let c1 = canonical_kraus(&v1.to_channel())?;
    let c2 = canonical_kraus(&v2.to_channel())?;
    let (r1, r2) = (c1.num_ops(), c2.num_ops());
    if m < r1 + r2 {
        return Err(Error::Precondition(format!(
            "environment dimension {m} is below the Kraus rank sum {r1}+{r2}"
        )));
    }
    let t1 = stinespring_from_kraus(&c1, m, 0)?;
    let t2 = stinespring_from_kraus(&c2, m, r1)?;
    let fid = fidelity_sdp(&t1, &t2)?;
    let w12 = fid.w.submatrix(0, r1, r1, m - r1);
    let w0 = sznagy_dilation(&w12)?;
    let u1 = connecting_unitary(&t1, v1)?;
    let u2 = connecting_unitary(&t2, v2)?;
    let mut u = polar_unitary(&u1.adjoint_mul(&w0).matmul(&u2))?;
    let mut dist = env_distance(v1, v2, &u)?;
    // equal channels: the direct alignment is exact, the SDP corner only
    // accurate to the square root of its gap
    if let Ok(c) = connecting_unitary(v1, v2) {
        let d = env_distance(v1, v2, &c)?;
        if d < dist {
            (u, dist) = (c, d);
        }
    }
    Ok(OptimalUnitary { u, dist, fidelity: fid })
}

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    pub restarts: usize,
    pub max_iter: usize,
    /// Interval width regarded as closed.
    pub tol: f64,
    pub stream: RngStream,
    pub parallel: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { restarts: 32, max_iter: 500, tol: 1e-6, stream: RngStream::new(0), parallel: true }
    }
}

/// Certified bracket for `min_{U∈U(m)} ‖V₁ − (1⊗U)V₂‖∞`.
#[derive(Debug, Clone, Serialize)]
pub struct MinimizationResult {
    pub lower: f64,
    pub upper: f64,
    pub u_opt: ComplexMatrix,
    pub restarts_used: usize,
    pub converged: bool,
    /// Certified upper bound on 2F used for `lower`.
    pub two_f_upper: f64,
    /// Γ(u_opt) = 2 − upper².
    pub gamma_opt: f64,
}

/// Brackets the minimum distance over environment unitaries.
///
/// `lower` comes from the contraction relaxation (and, for m = 1, from a
/// Lipschitz branch-and-bound over the phase); `upper` is the distance at
/// the best unitary found by seeded and random Riemannian ascents on Γ.
pub fn minimize_over_env(
    v1: &StinespringIsometry,
    v2: &StinespringIsometry,
    opts: &MinimizeOptions,
) -> Result<MinimizationResult> {
    if v1.dims() != v2.dims() {
        return Err(Error::DimensionMismatch("isometries have different dimensions".into()));
    }
    let fid = fidelity_sdp(v1, v2)?;
    minimize_over_env_with(v1, v2, &fid, opts)
}

/// [`minimize_over_env`] reusing an already solved fidelity program.
pub fn minimize_over_env_with(
    v1: &StinespringIsometry,
    v2: &StinespringIsometry,
    fid: &FidelityResult,
    opts: &MinimizeOptions,
) -> Result<MinimizationResult> {
    let m = v1.dim_env();
    let two_f_upper = fid.two_f_upper.min(2.0);

    if m == 1 {
        return minimize_phase(v1, v2, two_f_upper);
    }

    let mut seeds: Vec<ComplexMatrix> = vec![ComplexMatrix::identity(m), polar_unitary(&fid.w)?];
    let r1 = kraus_rank(&v1.to_channel());
    let r2 = kraus_rank(&v2.to_channel());
    if m >= r1 + r2 {
        if let Ok(opt) = optimal_env_unitary(v1, v2) {
            seeds.push(opt.u);
        }
    }
    if let Ok(c) = connecting_unitary(v1, v2) {
        seeds.push(c);
    }
    if r1 == 1 {
        if let Some(u) = rank_one_candidate(v1, &fid.w)? {
            seeds.push(u);
        }
    }
    if r2 == 1 {
        if let Some(u) = rank_one_candidate(v2, &fid.w.adjoint())? {
            seeds.push(u.adjoint());
        }
    }
    let n_seeded = seeds.len();
    let total = n_seeded + opts.restarts;
    let run = |i: usize| -> Result<Ascent> {
        let u0 = if i < n_seeded {
            seeds[i].clone()
        } else {
            let mut rng = opts.stream.split(i as u64).rng();
            haar_unitary(m, &mut rng)
        };
        ascend(v1, v2, u0, opts.max_iter)
    };
    let results: Vec<Result<Ascent>> = if opts.parallel {
        (0..total).into_par_iter().map(run).collect()
    } else {
        (0..total).map(run).collect()
    };
    let mut best: Option<(usize, Ascent)> = None;
    for (i, r) in results.into_iter().enumerate() {
        let r = r?;
        let better = match &best {
            None => true,
            Some((_, b)) => r.gamma > b.gamma,
        };
        if better {
            best = Some((i, r));
        }
    }
    let (_, best) = best.expect("at least one start");
    let mut u_opt = polar_unitary(&best.u)?;
    // the smoothed ascent can drift off an exact nonsmooth optimum
    let mut g_opt = gamma_mat(v1, v2, &u_opt)?;
    for s in &seeds {
        let g = gamma_mat(v1, v2, s)?;
        if g > g_opt {
            (u_opt, g_opt) = (s.clone(), g);
        }
    }
    let upper = env_distance(v1, v2, &u_opt)?;
    let lower = (2.0 - two_f_upper).max(0.0).sqrt().min(upper);
    let gamma_opt = g_opt;
    Ok(MinimizationResult {
        lower,
        upper,
        u_opt,
        restarts_used: total,
        converged: best.stationary || upper - lower <= opts.tol,
        two_f_upper,
        gamma_opt,
    })
}

/// For V₁ = U⊗|φ⟩: the unitary W with W·ψ̂ = φ, ψ̂ ∝ W_c*φ for the optimal
/// contraction W_c, attains the contraction bound whenever F > 0.
fn rank_one_candidate(v1: &StinespringIsometry, wc: &ComplexMatrix) -> Result<Option<ComplexMatrix>> {
    let m = v1.dim_env();
    let ops: Vec<Vec<C64>> = (0..m).map(|e| vectorize_kraus(&v1.kraus_op(e))).collect();
    let gram = ComplexMatrix::from_fn(m, m, |e, f| ops[e].iter().zip(&ops[f]).map(|(a, b)| a.conj() * b).sum());
    let eg = herm_eig(&gram)?;
    if eg.eigenvalues.len() >= 2 && eg.eigenvalues[m - 2] > 1e-10 * eg.max() {
        return Ok(None);
    }
    // G_ef = n·conj(φ_e)φ_f, so the top eigenvector is conj(φ) up to phase
    let phi: Vec<C64> = eg.vector(m - 1).iter().map(|z| z.conj()).collect();
    let psi: Vec<C64> = (0..m).map(|e| (0..m).map(|f| wc[(f, e)].conj() * phi[f]).sum()).collect();
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Ok(None);
    }
    let psi_hat: Vec<C64> = psi.iter().map(|z| z / norm).collect();
    Ok(Some(vector_rotation(&psi_hat, &phi)?))
}

/// A unitary mapping the unit vector `from` to the unit vector `to`.
fn vector_rotation(from: &[C64], to: &[C64]) -> Result<ComplexMatrix> {
    let m = from.len();
    let complete = |v: &[C64]| -> Result<ComplexMatrix> {
        // unitary whose first column is v
        let mut a = ComplexMatrix::identity(m);
        a.set_col(0, v);
        let (q, r) = crate::linalg::qr(&a)?;
        let mut q = q;
        let phase = r[(0, 0)] / r[(0, 0)].norm();
        for row in 0..m {
            q[(row, 0)] *= phase;
        }
        Ok(q)
    };
    let f = complete(from)?;
    let t = complete(to)?;
    Ok(t.matmul(&f.adjoint()))
}

struct Ascent {
    u: ComplexMatrix,
    gamma: f64,
    stationary: bool,
}

const TAUS: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

/// Riemannian ascent on the softmin surrogate of Γ(U) with a Cayley
/// retraction; returns the iterate with the best true Γ.
fn ascend(v1: &StinespringIsometry, v2: &StinespringIsometry, u0: ComplexMatrix, max_iter: usize) -> Result<Ascent> {
    let m = v1.dim_env();
    let per_stage = (max_iter / TAUS.len()).max(1);
    let mut u = u0;
    let mut best_u = u.clone();
    let mut best_gamma = gamma_mat(v1, v2, &u)?;
    let mut stationary = false;
    for &tau in &TAUS {
        let mut t = 1.0;
        let mut cur = SoftEval::new(v1, v2, &u, tau)?;
        for _ in 0..per_stage {
            let omega = skew(&u.adjoint_mul(&cur.grad));
            let g2 = omega.fro_norm().powi(2);
            if g2.sqrt() < 1e-10 {
                stationary = true;
                break;
            }
            let mut accepted = None;
            for _ in 0..40 {
                let cand = u.matmul(&cayley(&omega, t)?);
                let ev = SoftEval::new(v1, v2, &cand, tau)?;
                if ev.value >= cur.value + 1e-4 * t * g2 {
                    accepted = Some((cand, ev));
                    break;
                }
                t *= 0.5;
            }
            let Some((cand, ev)) = accepted else {
                stationary = true;
                break;
            };
            u = cand;
            cur = ev;
            if cur.lambda_min > best_gamma {
                best_gamma = cur.lambda_min;
                best_u = u.clone();
            }
            t = (t * 2.0).min(1e3);
        }
        // retract drift back onto U(m) between stages
        u = polar_unitary(&u)?;
        debug_assert_eq!(u.rows(), m);
    }
    Ok(Ascent { u: best_u, gamma: best_gamma, stationary })
}

struct SoftEval {
    value: f64,
    lambda_min: f64,
    grad: ComplexMatrix,
}

impl SoftEval {
    /// Softmin −τ log Σ exp(−λ_i/τ) of the spectrum of V₁*(1⊗U)V₂ + h.c.
    /// and its Euclidean gradient in U.
    fn new(v1: &StinespringIsometry, v2: &StinespringIsometry, u: &ComplexMatrix, tau: f64) -> Result<Self> {
        let (_, k, m) = v1.dims();
        let half = v1.matrix().adjoint_mul(&apply_id_kron(u, v2.matrix(), k));
        let e = herm_eig(&(&half + &half.adjoint()).hermitian_part())?;
        let lmin = e.min();
        let weights: Vec<f64> = e.eigenvalues.iter().map(|&l| (-(l - lmin) / tau).exp()).collect();
        let z: f64 = weights.iter().sum();
        let value = lmin - tau * z.ln();
        let mut grad = ComplexMatrix::zeros(m, m);
        for (i, &w) in weights.iter().enumerate() {
            let w = w / z;
            if w < 1e-16 {
                continue;
            }
            let vi = ComplexMatrix::column(&e.vector(i));
            let a = v1.matrix().matmul(&vi);
            let b = v2.matrix().matmul(&vi);
            // dλ = 2 Re Σ_ef dU_ef (AᴴB)_ef with A, B the k×m reshapes
            for p in 0..m {
                for q in 0..m {
                    let mut g = C64::new(0.0, 0.0);
                    for r in 0..k {
                        g += a[(r * m + p, 0)].conj() * b[(r * m + q, 0)];
                    }
                    grad[(p, q)] += g.conj() * (2.0 * w);
                }
            }
        }
        Ok(Self { value, lambda_min: lmin, grad })
    }
}

fn skew(x: &ComplexMatrix) -> ComplexMatrix {
    (x - &x.adjoint()).scale_real(0.5)
}

/// (1 − tΩ/2)⁻¹(1 + tΩ/2), unitary for skew-Hermitian Ω.
fn cayley(omega: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let m = omega.rows();
    let h = omega.scale_real(0.5 * t);
    let id = ComplexMatrix::identity(m);
    solve(&(&id - &h), &(&id + &h))
}

/// m = 1: Γ(θ) = λ_min(e^{iθ}A + e^{−iθ}A*) with A = V₁*V₂ is
/// 2‖A‖-Lipschitz in θ, so branch-and-bound over [0, 2π) yields a certified
/// upper bound on max Γ alongside the best phase.
fn minimize_phase(v1: &StinespringIsometry, v2: &StinespringIsometry, two_f_upper: f64) -> Result<MinimizationResult> {
    let a = v1.matrix().adjoint_mul(v2.matrix());
    let lip = 2.0 * operator_norm(&a)? + 1e-12;
    let gamma = |theta: f64| -> Result<f64> {
        let z = C64::from_polar(1.0, theta);
        let m = (&a.scale(z) + &a.adjoint().scale(z.conj())).hermitian_part();
        Ok(herm_eig(&m)?.min())
    };
    let two_pi = std::f64::consts::TAU;
    let n0 = 64;
    let h0 = two_pi / n0 as f64;
    let mut best_theta = 0.0;
    let mut best = f64::NEG_INFINITY;
    let mut cells: Vec<(f64, f64, f64)> = Vec::new(); // (centre, half width, value)
    for i in 0..n0 {
        let c = (i as f64 + 0.5) * h0;
        let v = gamma(c)?;
        if v > best {
            best = v;
            best_theta = c;
        }
        cells.push((c, 0.5 * h0, v));
    }
    let target = 1e-11;
    let mut evals = 0usize;
    let mut bound = f64::NEG_INFINITY;
    while let Some((c, h, v)) = cells.pop() {
        let ub = v + lip * h;
        if ub <= best + target {
            bound = bound.max(ub.min(best + target));
            continue;
        }
        if evals > 400_000 {
            bound = bound.max(ub);
            continue;
        }
        for c2 in [c - 0.5 * h, c + 0.5 * h] {
            let v2 = gamma(c2)?;
            evals += 1;
            if v2 > best {
                best = v2;
                best_theta = c2;
            }
            cells.push((c2, 0.5 * h, v2));
        }
    }
    // refine the best phase by golden-section on a small bracket
    let (t, g) = golden_max(&gamma, best_theta - 1e-3, best_theta + 1e-3, 1e-13)?;
    if g > best {
        best = g;
        best_theta = t;
    }
    let max_upper = bound.max(best).min(two_f_upper.max(best));
    let u_opt = ComplexMatrix::diag(&[C64::from_polar(1.0, best_theta)]);
    let upper = env_distance(v1, v2, &u_opt)?;
    let lower = (2.0 - max_upper).max(0.0).sqrt().min(upper);
    Ok(MinimizationResult {
        lower,
        upper,
        u_opt,
        restarts_used: 1,
        converged: true,
        two_f_upper,
        gamma_opt: best,
    })
}

fn golden_max(f: &impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1)?;
        }
    }
    let x = 0.5 * (lo + hi);
    Ok((x, f(x)?))
}

/// Golden-section maximum of a scalar function on [lo, hi] after a coarse
/// grid scan with `grid` points.
pub fn maximize_scalar(f: impl Fn(f64) -> f64, lo: f64, hi: f64, grid: usize) -> (f64, f64) {
    let g = |x: f64| -> Result<f64> { Ok(f(x)) };
    let step = (hi - lo) / grid as f64;
    let mut best = (lo, f(lo));
    for i in 0..=grid {
        let x = lo + i as f64 * step;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let a = (best.0 - step).max(lo);
    let b = (best.0 + step).min(hi);
    let (x, v) = golden_max(&g, a, b, 1e-12).expect("infallible objective");
    if v > best.1 {
        (x, v)
    } else {
        best
    }
}

/// Closed form of the minimal phase distance between id and the n-th root
/// of unity rotation, with the diamond distance 2 (both 0 for n = 1).
pub fn example1_closed_form(n: usize) -> (f64, f64) {
    if n <= 1 {
        return (0.0, 0.0);
    }
    let nf = n as f64;
    (2.0 * (std::f64::consts::PI * (nf - 1.0) / (2.0 * nf)).sin(), 2.0)
}
