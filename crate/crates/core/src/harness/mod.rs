//! Inequality checks, randomized trials and fixed reproductions.
//!
//! Verdicts are one-sided: a check passes when the computed upper bound of
//! its left side sits below its right side, and reports a violation only when
//! a certified lower bound exceeds a certified upper bound plus slack.
//! Anything in between is inconclusive.

pub mod data;
mod fuzz;
mod repro;

pub use fuzz::{count_violations, fuzz, fuzz_to_writer, sample_pair, FuzzConfig, FuzzSummary, Slice};
pub use repro::{
    repro_appendix_a, repro_appendix_b, repro_example1, repro_triangle_counterexample, Assertion, Relation, Report,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channels::{kraus_rank, ChannelFile, StinespringIsometry};
use crate::dilation::{minimize_over_env, minimize_over_env_with, MinimizationResult, MinimizeOptions};
use crate::error::Result;
use crate::metrics::{bures_from_fidelity, diamond_distance, fidelity_sdp, Certified, FidelityResult};

/// Default absolute slack for the inequality checks.
pub const CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    /// min_U ‖V₁ − (1⊗U)V₂‖∞ ≤ √(2‖Φ₁−Φ₂‖◇).
    ConjectureBound,
    /// ‖Φ₁−Φ₂‖◇ ≤ 2 min_U ‖V₁ − (1⊗U)V₂‖∞.
    ConverseBound,
    /// min² = 2(1 − F) when m ≥ r₁ + r₂.
    BuresEquality,
    /// min ≤ √‖Φ₁−Φ₂‖◇ when m ≥ r₁ + r₂.
    BuresDiamondBound,
    /// min² = 2(1 − F) for a Kraus-rank-one channel when min ≤ √2.
    RankOneBures,
    /// min ≤ √(2‖Φ₁−Φ₂‖◇) for a Kraus-rank-one channel.
    RankOneBound,
    /// 2(1 − F) ≤ ‖Φ₁−Φ₂‖◇.
    FvdgLower,
    /// 2·max_{‖W‖≤1} Γ(W) ≤ 2 + max_{U unitary} Γ(U).
    OutlookGamma,
    /// min over U(m) ≤ √2 · min over U(m′) after zero-padding the environment.
    EmbeddingProbe,
}

impl CheckName {
    pub const ALL: [CheckName; 9] = [
        CheckName::ConjectureBound,
        CheckName::ConverseBound,
        CheckName::BuresEquality,
        CheckName::BuresDiamondBound,
        CheckName::RankOneBures,
        CheckName::RankOneBound,
        CheckName::FvdgLower,
        CheckName::OutlookGamma,
        CheckName::EmbeddingProbe,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Violation,
    Inconclusive,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub lhs: f64,
    pub rhs: f64,
    /// rhs − lhs.
    pub slack: f64,
    /// Combined solver gap attached to the comparison.
    pub gap: f64,
    pub verdict: Verdict,
}

impl CheckResult {
    fn not_applicable() -> Self {
        Self { lhs: 0.0, rhs: 0.0, slack: 0.0, gap: 0.0, verdict: Verdict::NotApplicable }
    }

    /// `lhs ≤ rhs` where the true left side lies in [lhs_lower, lhs] and the
    /// true right side in [rhs − rhs_gap, rhs + rhs_gap].
    fn upper_bound(lhs: f64, lhs_lower: f64, rhs: f64, rhs_gap: f64, tol: f64) -> Self {
        let verdict = if lhs <= rhs + rhs_gap + tol {
            Verdict::Pass
        } else if lhs_lower > rhs + rhs_gap + tol {
            Verdict::Violation
        } else {
            Verdict::Inconclusive
        };
        Self { lhs, rhs, slack: rhs - lhs, gap: rhs_gap, verdict }
    }

    /// Numerical equality that can only be confirmed, never refuted.
    fn equality(lhs: f64, rhs: f64, gap: f64, tol: f64) -> Self {
        let verdict = if (lhs - rhs).abs() <= tol + gap { Verdict::Pass } else { Verdict::Inconclusive };
        Self { lhs, rhs, slack: rhs - lhs, gap, verdict }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub r1: usize,
    pub r2: usize,
}

/// One randomized trial, serialized as a single JSONL line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub slice: Slice,
    pub dims: Dims,
    pub v1: ChannelFile,
    pub v2: ChannelFile,
    pub fidelity: Option<Certified>,
    pub bures: Option<Certified>,
    pub diamond: Option<Certified>,
    pub min_interval: Option<[f64; 2]>,
    /// upper / √diamond, recorded to study the worst case of the
    /// Bures-diamond bound below the rank-sum threshold.
    pub ratio: Option<f64>,
    pub checks: BTreeMap<CheckName, CheckResult>,
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time: Option<f64>,
}

impl TrialRecord {
    pub fn violations(&self) -> Vec<CheckName> {
        self.checks.iter().filter(|(_, c)| c.verdict == Verdict::Violation).map(|(k, _)| *k).collect()
    }

    pub fn inconclusive(&self) -> bool {
        self.error.is_some()
    }
}

/// Everything computed for one pair of isometries.
#[derive(Debug, Clone)]
pub struct PairEvaluation {
    pub dims: Dims,
    pub fidelity: Certified,
    pub bures: Certified,
    pub diamond: Certified,
    pub minimization: MinimizationResult,
    pub checks: BTreeMap<CheckName, CheckResult>,
}

#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    pub minimize: MinimizeOptions,
    pub tol: f64,
    /// Also run the environment-embedding probe (a second minimization).
    pub embedding: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { minimize: MinimizeOptions::default(), tol: CHECK_TOL, embedding: false }
    }
}

/// Computes all distances for a pair and evaluates every applicable check.
pub fn check_conjecture(v1: &StinespringIsometry, v2: &StinespringIsometry, opts: &CheckOptions) -> Result<PairEvaluation> {
    let (n, k, m) = v1.dims();
    let ch1 = v1.to_channel();
    let ch2 = v2.to_channel();
    let dims = Dims { n, k, m, r1: kraus_rank(&ch1), r2: kraus_rank(&ch2) };
    let fid = fidelity_sdp(v1, v2)?;
    let fidelity = fid.fidelity;
    let diamond = diamond_distance(&ch1, &ch2)?;
    let min = minimize_over_env_with(v1, v2, &fid, &opts.minimize)?;
    let tol = opts.tol;
    let (lo, up) = (min.lower, min.upper);
    let one_minus_f = 2.0 * (1.0 - fidelity.value);

    let mut checks = BTreeMap::new();
    let conj_rhs = (2.0 * diamond.value).sqrt();
    let conj_gap = (2.0 * diamond.upper()).sqrt() - conj_rhs;
    checks.insert(CheckName::ConjectureBound, CheckResult::upper_bound(up, lo, conj_rhs, conj_gap, tol));
    // the true minimum is ≤ up, so a diamond value above 2·up is certified
    checks.insert(
        CheckName::ConverseBound,
        CheckResult::upper_bound(diamond.value, diamond.lower(), 2.0 * up, 0.0, tol),
    );
    let rank_sum = m >= dims.r1 + dims.r2;
    if rank_sum {
        checks.insert(CheckName::BuresEquality, CheckResult::equality(up * up, one_minus_f, 2.0 * fidelity.gap, 1e-5));
        let rhs = diamond.value.sqrt();
        let gap = diamond.upper().sqrt() - rhs;
        checks.insert(CheckName::BuresDiamondBound, CheckResult::upper_bound(up, lo, rhs, gap, tol));
    } else {
        checks.insert(CheckName::BuresEquality, CheckResult::not_applicable());
        checks.insert(CheckName::BuresDiamondBound, CheckResult::not_applicable());
    }
    let rank_one = dims.r1 == 1 || dims.r2 == 1;
    if rank_one {
        checks.insert(CheckName::RankOneBound, CheckResult::upper_bound(up, lo, conj_rhs, conj_gap, 1e-5));
        if up <= 2f64.sqrt() + 1e-9 {
            checks.insert(CheckName::RankOneBures, CheckResult::equality(up * up, one_minus_f, 2.0 * fidelity.gap, 1e-5));
        } else {
            checks.insert(CheckName::RankOneBures, CheckResult::not_applicable());
        }
    } else {
        checks.insert(CheckName::RankOneBound, CheckResult::not_applicable());
        checks.insert(CheckName::RankOneBures, CheckResult::not_applicable());
    }
    checks.insert(
        CheckName::FvdgLower,
        CheckResult::upper_bound(one_minus_f, 2.0 * (1.0 - fidelity.upper()), diamond.value, diamond.gap, tol),
    );
    let outlook = probe_outlook_from(&two_f(&fid), &min, tol);
    checks.insert(CheckName::OutlookGamma, outlook);
    if opts.embedding {
        checks.insert(CheckName::EmbeddingProbe, probe_embedding_from(v1, v2, &min, m + 1, &opts.minimize, tol)?);
    } else {
        checks.insert(CheckName::EmbeddingProbe, CheckResult::not_applicable());
    }
    Ok(PairEvaluation { dims, fidelity, bures: bures_from_fidelity(fidelity), diamond, minimization: min, checks })
}

fn two_f(fid: &FidelityResult) -> Certified {
    Certified { value: fid.solution.value(), gap: fid.solution.gap }
}

fn probe_outlook_from(two_f: &Certified, min: &MinimizationResult, tol: f64) -> CheckResult {
    let lhs = 2.0 * two_f.value;
    let rhs = 2.0 + min.gamma_opt;
    let verdict = if lhs <= rhs + 2.0 * two_f.gap + tol { Verdict::Pass } else { Verdict::Inconclusive };
    CheckResult { lhs, rhs, slack: rhs - lhs, gap: 2.0 * two_f.gap, verdict }
}

/// 2·(2F) against 2 + Γ(u) for the best unitary found. Never reports a
/// violation since the unitary maximum is only bounded from below.
pub fn probe_outlook_gamma(v1: &StinespringIsometry, v2: &StinespringIsometry, opts: &MinimizeOptions) -> Result<CheckResult> {
    let fid = fidelity_sdp(v1, v2)?;
    let min = minimize_over_env_with(v1, v2, &fid, opts)?;
    Ok(probe_outlook_from(&two_f(&fid), &min, CHECK_TOL))
}

fn probe_embedding_from(
    v1: &StinespringIsometry,
    v2: &StinespringIsometry,
    at_m: &MinimizationResult,
    m_prime: usize,
    opts: &MinimizeOptions,
    tol: f64,
) -> Result<CheckResult> {
    let e1 = v1.embed_env(m_prime)?;
    let e2 = v2.embed_env(m_prime)?;
    let at_mp = minimize_over_env(&e1, &e2, opts)?;
    let rhs = 2f64.sqrt() * at_mp.upper;
    Ok(CheckResult::upper_bound(at_m.upper, at_m.lower, rhs, 0.0, tol))
}

/// min over U(m) against √2 · min over U(m′) with both environments
/// zero-padded to m′ ≥ m.
pub fn probe_embedding(
    v1: &StinespringIsometry,
    v2: &StinespringIsometry,
    m_prime: usize,
    opts: &MinimizeOptions,
) -> Result<CheckResult> {
    let at_m = minimize_over_env(v1, v2, opts)?;
    probe_embedding_from(v1, v2, &at_m, m_prime, opts, CHECK_TOL)
}
