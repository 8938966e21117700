//! Dense block-diagonal semidefinite programming.
//!
//! Internal standard form:
//!
//! ```text
//! primal  min ⟨C, X⟩  s.t. ⟨A_i, X⟩ = b_i,  X ⪰ 0
//! dual    max bᵀy     s.t. S = C − Σ y_i A_i ⪰ 0
//! ```
//!
//! with ⟨A, X⟩ = Re tr(A X) over Hermitian blocks. Maximize-sense problems
//! are solved as `min ⟨−C, X⟩` and reported in the caller's sense.

mod builders;
mod solver;

pub use builders::{
    build_diamond_sdp, build_diamond_sdp_reduced, build_fidelity_sdp, env_coupling, FidelitySdp,
};
pub use solver::{solve, solve_with};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

/// Block-diagonal Hermitian matrix.
#[derive(Debug, Clone)]
pub struct BlockMatrix {
    pub blocks: Vec<ComplexMatrix>,
}

impl BlockMatrix {
    pub fn zeros(dims: &[usize]) -> Self {
        Self { blocks: dims.iter().map(|&d| ComplexMatrix::zeros(d, d)).collect() }
    }

    pub fn identity(dims: &[usize]) -> Self {
        Self { blocks: dims.iter().map(|&d| ComplexMatrix::identity(d)).collect() }
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.rows()).collect()
    }

    pub fn inner(&self, other: &Self) -> f64 {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.inner(b)).sum()
    }

    pub fn fro_norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.fro_norm().powi(2)).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace().re).sum()
    }
}

/// One linear constraint ⟨A, X⟩ = b with `None` for zero blocks.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub blocks: Vec<Option<ComplexMatrix>>,
    pub b: f64,
}

impl Constraint {
    pub fn new(num_blocks: usize, b: f64) -> Self {
        Self { blocks: vec![None; num_blocks], b }
    }

    /// Adds `a` (Hermitian) to block `k`.
    pub fn add(&mut self, k: usize, a: ComplexMatrix) -> &mut Self {
        match &mut self.blocks[k] {
            Some(cur) => *cur += &a,
            slot => *slot = Some(a),
        }
        self
    }

    /// Adds the functional X ↦ Re tr(X N) on block `k` of dimension d.
    pub fn add_re_trace(&mut self, k: usize, n: &ComplexMatrix, coef: f64) -> &mut Self {
        self.add(k, n.hermitian_part().scale_real(coef))
    }

    /// Adds the functional X ↦ Im tr(X N) on block `k`.
    pub fn add_im_trace(&mut self, k: usize, n: &ComplexMatrix, coef: f64) -> &mut Self {
        let a = (n - &n.adjoint()).scale(C64::new(0.0, -0.5 * coef));
        self.add(k, a)
    }

    /// Adds X ↦ Re X[p, q] on block `k` of dimension d.
    pub fn add_re_entry(&mut self, k: usize, d: usize, p: usize, q: usize, coef: f64) -> &mut Self {
        self.add_re_trace(k, &ComplexMatrix::unit(d, d, q, p), coef)
    }

    /// Adds X ↦ Im X[p, q] on block `k` of dimension d.
    pub fn add_im_entry(&mut self, k: usize, d: usize, p: usize, q: usize, coef: f64) -> &mut Self {
        self.add_im_trace(k, &ComplexMatrix::unit(d, d, q, p), coef)
    }

    pub fn eval(&self, x: &BlockMatrix) -> f64 {
        self.blocks
            .iter()
            .zip(&x.blocks)
            .map(|(a, xb)| a.as_ref().map_or(0.0, |a| a.inner(xb)))
            .sum()
    }
}

/// Standard-form SDP over Hermitian blocks.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub block_dims: Vec<usize>,
    pub objective: BlockMatrix,
    pub constraints: Vec<Constraint>,
    pub sense: Sense,
}

impl SdpProblem {
    pub fn new(block_dims: Vec<usize>, sense: Sense) -> Self {
        let objective = BlockMatrix::zeros(&block_dims);
        Self { block_dims, objective, constraints: Vec::new(), sense }
    }

    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }

    pub fn new_constraint(&self, b: f64) -> Constraint {
        Constraint::new(self.num_blocks(), b)
    }

    pub fn push(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn validate(&self) -> Result<()> {
        if self.constraints.is_empty() {
            return Err(Error::InvalidArgument("SDP needs at least one constraint".into()));
        }
        if self.block_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument("empty SDP block".into()));
        }
        check_blocks(&self.block_dims, self.objective.blocks.iter().map(Some), "objective")?;
        for (i, c) in self.constraints.iter().enumerate() {
            if c.blocks.len() != self.num_blocks() || !c.b.is_finite() {
                return Err(Error::DimensionMismatch(format!("constraint {i} malformed")));
            }
            check_blocks(&self.block_dims, c.blocks.iter().map(|b| b.as_ref()), &format!("constraint {i}"))?;
        }
        Ok(())
    }
}

fn check_blocks<'a>(
    dims: &[usize],
    blocks: impl Iterator<Item = Option<&'a ComplexMatrix>>,
    what: &str,
) -> Result<()> {
    let mut count = 0;
    for (k, b) in blocks.enumerate() {
        count += 1;
        let Some(b) = b else { continue };
        let d = *dims.get(k).ok_or_else(|| Error::DimensionMismatch(format!("{what}: too many blocks")))?;
        if b.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!("{what}: block {k} has wrong shape")));
        }
        b.check_finite()?;
        if b.hermiticity_defect() > 1e-12 * b.max_abs().max(1.0) {
            return Err(Error::InvalidArgument(format!("{what}: block {k} is not Hermitian")));
        }
    }
    if count != dims.len() {
        return Err(Error::DimensionMismatch(format!("{what}: expected {} blocks", dims.len())));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { gap_tol: 1e-8, feas_tol: 1e-8, max_iter: 200 }
    }
}

/// Result of [`solve`], reported in the problem's own sense.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: BlockMatrix,
    pub s: BlockMatrix,
    pub y: Vec<f64>,
    pub primal_value: f64,
    pub dual_value: f64,
    /// |primal_value − dual_value|.
    pub gap: f64,
    /// ‖b − 𝒜(X)‖₂.
    pub primal_infeasibility: f64,
    /// ‖C − 𝒜*(y) − S‖_F.
    pub dual_infeasibility: f64,
    pub status: SdpStatus,
    pub iterations: usize,
}

impl SdpSolution {
    /// Mid-point of the primal and dual values.
    pub fn value(&self) -> f64 {
        0.5 * (self.primal_value + self.dual_value)
    }

    /// Largest value consistent with both certificates.
    pub fn upper(&self) -> f64 {
        self.primal_value.max(self.dual_value)
    }

    pub fn lower(&self) -> f64 {
        self.primal_value.min(self.dual_value)
    }

    /// Optimal, or stopped with a duality gap still within `tol` relative.
    pub fn usable(&self, tol: f64) -> bool {
        match self.status {
            SdpStatus::Optimal => true,
            SdpStatus::MaxIter => self.gap <= tol * self.primal_value.abs().max(1.0),
            SdpStatus::Infeasible => false,
        }
    }
}
