//! Problem builders for the operational fidelity and the diamond norm.

use super::{SdpProblem, SdpSolution, Sense};
use crate::channels::{unvectorize_kraus, StinespringIsometry};
use crate::error::{Error, Result};
use crate::linalg::{apply_id_kron, herm_eig, ComplexMatrix, C64};

/// Fidelity program together with the layout needed to read W back.
#[derive(Debug, Clone)]
pub struct FidelitySdp {
    pub problem: SdpProblem,
    pub dim_env: usize,
}

impl FidelitySdp {
    /// The contraction W recovered from the dual vector.
    pub fn w(&self, sol: &SdpSolution) -> ComplexMatrix {
        let m = self.dim_env;
        ComplexMatrix::from_fn(m, m, |p, q| {
            let idx = 1 + 2 * (p * m + q);
            C64::new(sol.y[idx], sol.y[idx + 1])
        })
    }
}

/// `V₁*(1 ⊗ E_pq)V₂` for every matrix unit of the environment.
pub fn env_coupling(v1: &StinespringIsometry, v2: &StinespringIsometry, p: usize, q: usize) -> ComplexMatrix {
    let m = v1.dim_env();
    let e = ComplexMatrix::unit(m, m, p, q);
    v1.matrix().adjoint_mul(&apply_id_kron(&e, v2.matrix(), v1.dim_out()))
}

/// Program whose optimal value is 2F(Φ₁, Φ₂).
///
/// The dual reads `max 2t` subject to
/// `V₁*(1⊗W)V₂ + V₂*(1⊗W*)V₁ ⪰ 2t·1` and `[[1, W], [W*, 1]] ⪰ 0`,
/// with `y = (t, Re W₀₀, Im W₀₀, Re W₀₁, …)`. The primal has blocks of
/// dimension n and 2m and minimizes the trace of the second.
pub fn build_fidelity_sdp(v1: &StinespringIsometry, v2: &StinespringIsometry) -> Result<FidelitySdp> {
    if v1.dims() != v2.dims() {
        return Err(Error::DimensionMismatch(format!(
            "isometries have dims {:?} and {:?}",
            v1.dims(),
            v2.dims()
        )));
    }
    let (n, _, m) = v1.dims();
    let mut p = SdpProblem::new(vec![n, 2 * m], Sense::Minimize);
    p.objective.blocks[1] = ComplexMatrix::identity(2 * m);

    let mut ct = p.new_constraint(2.0);
    ct.add(0, ComplexMatrix::identity(n).scale_real(2.0));
    p.push(ct);

    for a in 0..m {
        for b in 0..m {
            let nab = env_coupling(v1, v2, a, b);
            let e = ComplexMatrix::unit(2 * m, 2 * m, a, m + b);
            let mut re = p.new_constraint(0.0);
            re.add_re_trace(0, &nab, -2.0).add_re_trace(1, &e, -2.0);
            p.push(re);
            let mut im = p.new_constraint(0.0);
            im.add_im_trace(0, &nab, 2.0).add_im_trace(1, &e, 2.0);
            p.push(im);
        }
    }
    Ok(FidelitySdp { problem: p, dim_env: m })
}

/// Diamond norm of the map with Choi matrix `j` (on C^n ⊗ C^k) in the
/// 2×2 super-block form
///
/// ```text
/// min ½(λ₀ + λ₁)  s.t. [[Y₀, −J], [−J*, Y₁]] ⪰ 0,  λⱼ·1 − tr_out Yⱼ ⪰ 0.
/// ```
///
/// Blocks: the super-block (2nk), two slacks (n each), λ₀ and λ₁ (1 each).
/// The constraint count grows like 2(nk)², so this is practical only for
/// small dimensions; [`build_diamond_sdp_reduced`] is the production form.
pub fn build_diamond_sdp(j: &ComplexMatrix, n: usize, k: usize) -> Result<SdpProblem> {
    check_choi(j, n, k)?;
    let d = n * k;
    let mut p = SdpProblem::new(vec![2 * d, n, n, 1, 1], Sense::Minimize);
    p.objective.blocks[3] = ComplexMatrix::identity(1).scale_real(0.5);
    p.objective.blocks[4] = ComplexMatrix::identity(1).scale_real(0.5);

    for a in 0..d {
        for b in 0..d {
            let mut re = p.new_constraint(-j[(a, b)].re);
            re.add_re_entry(0, 2 * d, a, d + b, 1.0);
            p.push(re);
            let mut im = p.new_constraint(-j[(a, b)].im);
            im.add_im_entry(0, 2 * d, a, d + b, 1.0);
            p.push(im);
        }
    }
    for side in 0..2 {
        let off = side * d;
        let slack = 1 + side;
        let lam = 3 + side;
        for r in 0..n {
            for c in r..n {
                let mut re = p.new_constraint(0.0);
                re.add_re_entry(slack, n, r, c, 1.0);
                for i in 0..k {
                    re.add_re_entry(0, 2 * d, off + r * k + i, off + c * k + i, 1.0);
                }
                if r == c {
                    re.add(lam, ComplexMatrix::identity(1).scale_real(-1.0));
                }
                p.push(re);
                if r != c {
                    let mut im = p.new_constraint(0.0);
                    im.add_im_entry(slack, n, r, c, 1.0);
                    for i in 0..k {
                        im.add_im_entry(0, 2 * d, off + r * k + i, off + c * k + i, 1.0);
                    }
                    p.push(im);
                }
            }
        }
    }
    Ok(p)
}

/// Diamond norm in factored form.
///
/// Splitting J = Σ_a s_a vec(K_a)vec(K_a)* by eigenvalue sign gives
/// Δ(X) = tr_E(A X B*) with A = Σ K_a ⊗ |a⟩ and B = Σ s_a K_a ⊗ |a⟩, and
///
/// ```text
/// ‖Δ‖◇ = max Re tr Z  s.t. [[P(ρ₀), Z], [Z*, Q(ρ₁)]] ⪰ 0,  ρ₀, ρ₁ states,
/// P(ρ)_ab = tr(ρ K_b* K_a),  Q(ρ)_ab = s_a s_b tr(ρ K_b* K_a).
/// ```
///
/// Returns `None` when J vanishes (the norm is 0). Blocks: the 2r×2r
/// super-block, ρ₀, ρ₁.
pub fn build_diamond_sdp_reduced(j: &ComplexMatrix, n: usize, k: usize) -> Result<Option<SdpProblem>> {
    check_choi(j, n, k)?;
    let e = herm_eig(j)?;
    let scale: f64 = e.eigenvalues.iter().map(|l| l.abs()).sum();
    if scale == 0.0 {
        return Ok(None);
    }
    let cut = 1e-12 * scale.max(1.0);
    let mut ops = Vec::new();
    let mut signs = Vec::new();
    for (idx, &l) in e.eigenvalues.iter().enumerate() {
        if l.abs() > cut {
            let v: Vec<C64> = e.vector(idx).iter().map(|z| z * l.abs().sqrt()).collect();
            ops.push(unvectorize_kraus(&v, n, k));
            signs.push(l.signum());
        }
    }
    let r = ops.len();
    if r == 0 {
        return Ok(None);
    }
    let mut p = SdpProblem::new(vec![2 * r, n, n], Sense::Maximize);
    let mut c = ComplexMatrix::zeros(2 * r, 2 * r);
    for a in 0..r {
        c[(a, r + a)] = C64::new(0.5, 0.0);
        c[(r + a, a)] = C64::new(0.5, 0.0);
    }
    p.objective.blocks[0] = c;

    for a in 0..r {
        for b in a..r {
            let g = ops[b].adjoint_mul(&ops[a]);
            for (side, blk) in [(0usize, 1usize), (1, 2)] {
                let off = side * r;
                let w = if side == 0 { 1.0 } else { signs[a] * signs[b] };
                let mut re = p.new_constraint(0.0);
                re.add_re_entry(0, 2 * r, off + a, off + b, 1.0).add_re_trace(blk, &g, -w);
                p.push(re);
                if a != b {
                    let mut im = p.new_constraint(0.0);
                    im.add_im_entry(0, 2 * r, off + a, off + b, 1.0).add_im_trace(blk, &g, -w);
                    p.push(im);
                }
            }
        }
    }
    for blk in [1, 2] {
        let mut t = p.new_constraint(1.0);
        t.add(blk, ComplexMatrix::identity(n));
        p.push(t);
    }
    Ok(Some(p))
}

fn check_choi(j: &ComplexMatrix, n: usize, k: usize) -> Result<()> {
    if j.shape() != (n * k, n * k) {
        return Err(Error::DimensionMismatch(format!(
            "Choi matrix is {}x{}, expected {1}x{1}",
            j.rows(),
            n * k
        )));
    }
    j.check_finite()?;
    if j.hermiticity_defect() > 1e-10 * j.max_abs().max(1.0) {
        return Err(Error::InvalidArgument("Choi difference is not Hermitian".into()));
    }
    Ok(())
}
