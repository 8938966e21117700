//! Channel distances and the Γ functionals.

use serde::{Deserialize, Serialize};

use crate::channels::{choi_from_kraus, DensityMatrix, KrausChannel, StinespringIsometry};
use crate::error::{Error, Result};
use crate::linalg::{
    apply_id_kron, clamp_to_contraction, herm_eig, lambda_min, operator_norm, psd_sqrt, trace_norm,
    ComplexMatrix, C64,
};
use crate::sdp::{build_diamond_sdp_reduced, build_fidelity_sdp, solve, SdpSolution};

/// Relative duality gap above which a stopped solve is rejected.
const USABLE_GAP: f64 = 1e-6;

/// A solver-backed value with its duality gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certified {
    pub value: f64,
    pub gap: f64,
}

impl Certified {
    pub fn exact(value: f64) -> Self {
        Self { value, gap: 0.0 }
    }

    pub fn lower(&self) -> f64 {
        self.value - self.gap
    }

    pub fn upper(&self) -> f64 {
        self.value + self.gap
    }
}

/// f(ρ, σ) = tr √(√ρ σ √ρ).
pub fn state_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch("states have different dimensions".into()));
    }
    Ok(fidelity_of_psd(rho.matrix(), sigma.matrix())?.clamp(0.0, 1.0))
}

/// tr √(√A B √A) for PSD A, B (not necessarily normalized).
pub fn fidelity_of_psd(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let ra = psd_sqrt(a)?;
    let m = ra.matmul(b).matmul(&ra).hermitian_part();
    Ok(herm_eig(&m)?.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).sum())
}

/// Operational fidelity from the contraction program, with the optimal W.
#[derive(Debug, Clone)]
pub struct FidelityResult {
    /// F(Φ₁, Φ₂).
    pub fidelity: Certified,
    /// Optimal contraction W (‖W‖∞ ≤ 1 after clamping).
    pub w: ComplexMatrix,
    /// λ_min(V₁*(1⊗W)V₂ + h.c.) at the returned W: a certified lower bound on 2F.
    pub two_f_lower: f64,
    /// Certified upper bound on 2F from the primal side.
    pub two_f_upper: f64,
    pub solution: SdpSolution,
}

pub fn fidelity_sdp(v1: &StinespringIsometry, v2: &StinespringIsometry) -> Result<FidelityResult> {
    let prog = build_fidelity_sdp(v1, v2)?;
    let sol = solve(&prog.problem)?;
    if !sol.usable(USABLE_GAP) {
        return Err(Error::Solver(format!("fidelity program ended with status {:?}", sol.status)));
    }
    let w = clamp_to_contraction(&prog.w(&sol))?;
    let two_f_lower = gamma_mat(v1, v2, &w)?;
    // primal residuals perturb the primal bound by at most ‖r_p‖·‖y‖
    let y_norm = sol.y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let two_f_upper = sol.upper() + sol.primal_infeasibility * (1.0 + y_norm);
    let value = 0.5 * sol.value();
    let gap = 0.5 * (two_f_upper - two_f_lower).max(sol.gap);
    Ok(FidelityResult {
        fidelity: Certified { value: value.clamp(0.0, 1.0), gap },
        w,
        two_f_lower,
        two_f_upper,
        solution: sol,
    })
}

/// F(Φ₁, Φ₂) = ½ max_{‖W‖∞≤1} λ_min(V₁*(1⊗W)V₂ + V₂*(1⊗W*)V₁).
pub fn operational_fidelity(v1: &StinespringIsometry, v2: &StinespringIsometry) -> Result<Certified> {
    Ok(fidelity_sdp(v1, v2)?.fidelity)
}

/// √(2(1 − F)).
pub fn bures_distance(v1: &StinespringIsometry, v2: &StinespringIsometry) -> Result<Certified> {
    let f = operational_fidelity(v1, v2)?;
    Ok(bures_from_fidelity(f))
}

pub fn bures_from_fidelity(f: Certified) -> Certified {
    let b = |x: f64| (2.0 * (1.0 - x.clamp(0.0, 1.0))).sqrt();
    let value = b(f.value);
    let gap = (b(f.lower()) - value).abs().max((value - b(f.upper())).abs());
    Certified { value, gap }
}

/// ‖Φ₁ − Φ₂‖◇.
pub fn diamond_distance(a: &KrausChannel, b: &KrausChannel) -> Result<Certified> {
    if (a.dim_in(), a.dim_out()) != (b.dim_in(), b.dim_out()) {
        return Err(Error::DimensionMismatch("channels have different dimensions".into()));
    }
    let j = choi_from_kraus(a).matrix() - choi_from_kraus(b).matrix();
    let Some(prog) = build_diamond_sdp_reduced(&j, a.dim_in(), a.dim_out())? else {
        return Ok(Certified::exact(0.0));
    };
    let sol = solve(&prog)?;
    if !sol.usable(USABLE_GAP) {
        return Err(Error::Solver(format!("diamond program ended with status {:?}", sol.status)));
    }
    Ok(Certified { value: sol.value().clamp(0.0, 2.0), gap: sol.gap + sol.dual_infeasibility })
}

/// Definitional lower bound ‖(id ⊗ (Φ₁ − Φ₂))(|ψ⟩⟨ψ|)‖₁ for ψ ∈ C^n ⊗ C^n.
pub fn diamond_witness(a: &KrausChannel, b: &KrausChannel, psi: &[C64]) -> Result<f64> {
    let n = a.dim_in();
    if psi.len() != n * n {
        return Err(Error::DimensionMismatch(format!("witness vector must have length {}", n * n)));
    }
    let rho = DensityMatrix::pure(psi)?;
    let d = &a.apply_extended(rho.matrix(), n)? - &b.apply_extended(rho.matrix(), n)?;
    trace_norm(&d.hermitian_part())
}

/// Definitional upper bound f((id⊗Φ₁)(ρ), (id⊗Φ₂)(ρ)) on F for ρ on C^n ⊗ C^n.
pub fn fidelity_witness(a: &KrausChannel, b: &KrausChannel, rho: &DensityMatrix) -> Result<f64> {
    let n = a.dim_in();
    if rho.dim() != n * n {
        return Err(Error::DimensionMismatch(format!("witness state must have dimension {}", n * n)));
    }
    let x = a.apply_extended(rho.matrix(), n)?;
    let y = b.apply_extended(rho.matrix(), n)?;
    fidelity_of_psd(&x, &y)
}

/// V₁*(1⊗X)V₂ + V₂*(1⊗X*)V₁.
pub fn coupling_matrix(v1: &StinespringIsometry, v2: &StinespringIsometry, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    if v1.dims() != v2.dims() {
        return Err(Error::DimensionMismatch("isometries have different dimensions".into()));
    }
    let m = v1.dim_env();
    if x.shape() != (m, m) {
        return Err(Error::DimensionMismatch(format!("environment operator must be {m}x{m}")));
    }
    let half = v1.matrix().adjoint_mul(&apply_id_kron(x, v2.matrix(), v1.dim_out()));
    Ok((&half + &half.adjoint()).hermitian_part())
}

/// Γ(X) = λ_min(V₁*(1⊗X)V₂ + V₂*(1⊗X*)V₁).
pub fn gamma_mat(v1: &StinespringIsometry, v2: &StinespringIsometry, x: &ComplexMatrix) -> Result<f64> {
    lambda_min(&coupling_matrix(v1, v2, x)?)
}

/// Γ(ψ) = λ_min((U*⊗⟨ψ|)V + V*(U⊗|ψ⟩)) for a k×n isometry U and ψ ∈ C^m.
pub fn gamma_vec(u: &ComplexMatrix, v: &StinespringIsometry, psi: &[C64]) -> Result<f64> {
    let (n, k, m) = v.dims();
    if u.shape() != (k, n) || psi.len() != m {
        return Err(Error::DimensionMismatch("gamma_vec operand shapes".into()));
    }
    let uk = ComplexMatrix::from_fn(k * m, n, |row, x| u[(row / m, x)] * psi[row % m]);
    let half = uk.adjoint_mul(v.matrix());
    lambda_min(&(&half + &half.adjoint()).hermitian_part())
}

/// Both sides of ‖V₁ − (1⊗U)V₂‖∞² = 2 − λ_min(V₁*(1⊗U)V₂ + V₂*(1⊗U*)V₁),
/// computed independently.
pub fn dist_sq_identity(v1: &StinespringIsometry, v2: &StinespringIsometry, u: &ComplexMatrix) -> Result<(f64, f64)> {
    check_unitary(u, v1.dim_env(), 1e-9)?;
    let lhs = env_distance(v1, v2, u)?.powi(2);
    let rhs = 2.0 - gamma_mat(v1, v2, u)?;
    Ok((lhs, rhs))
}

/// ‖V₁ − (1⊗U)V₂‖∞.
pub fn env_distance(v1: &StinespringIsometry, v2: &StinespringIsometry, u: &ComplexMatrix) -> Result<f64> {
    if v1.dims() != v2.dims() {
        return Err(Error::DimensionMismatch("isometries have different dimensions".into()));
    }
    let m = v1.dim_env();
    if u.shape() != (m, m) {
        return Err(Error::DimensionMismatch(format!("environment unitary must be {m}x{m}")));
    }
    operator_norm(&(v1.matrix() - &apply_id_kron(u, v2.matrix(), v1.dim_out())))
}

pub fn check_unitary(u: &ComplexMatrix, m: usize, tol: f64) -> Result<()> {
    if u.shape() != (m, m) {
        return Err(Error::DimensionMismatch(format!("expected a {m}x{m} unitary")));
    }
    let defect = (&u.adjoint_mul(u) - &ComplexMatrix::identity(m)).max_abs();
    if defect > tol {
        return Err(Error::InvalidArgument(format!("matrix is not unitary (defect {defect:e})")));
    }
    Ok(())
}

/// Summary of the distances between two dilated channels.
#[derive(Debug, Clone, Serialize)]
pub struct ChannelPairMetrics {
    pub fidelity: Certified,
    pub bures: Certified,
    pub diamond: Certified,
    pub min_dist_interval: Option<[f64; 2]>,
}

impl ChannelPairMetrics {
    pub fn compute(v1: &StinespringIsometry, v2: &StinespringIsometry) -> Result<Self> {
        let fidelity = operational_fidelity(v1, v2)?;
        let diamond = diamond_distance(&v1.to_channel(), &v2.to_channel())?;
        Ok(Self { fidelity, bures: bures_from_fidelity(fidelity), diamond, min_dist_interval: None })
    }

    /// 2(1 − F) ≤ ◇ up to the combined gaps and `tol`.
    pub fn fuchs_van_de_graaf_holds(&self, tol: f64) -> bool {
        2.0 * (1.0 - self.fidelity.upper()) <= self.diamond.upper() + tol
    }
}
