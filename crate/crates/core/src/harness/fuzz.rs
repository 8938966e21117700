use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_conjecture, CheckOptions, CheckName, Dims, TrialRecord, Verdict};
use crate::channels::{random_channel, random_dilation, ChannelFile, StinespringIsometry};
use crate::dilation::MinimizeOptions;
use crate::error::{Error, Result};
use crate::linalg::RngStream;

/// Hypothesis class a trial is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Slice {
    /// Ranks and m ≥ max(r₁, r₂) unconstrained.
    #[default]
    Any,
    /// Φ₁ is isometric (Kraus rank one).
    Rank1,
    /// m = r₁ + r₂.
    Prop1,
    /// m = max(r₁, r₂).
    Tight,
}

impl Slice {
    pub const ALL: [Slice; 4] = [Slice::Any, Slice::Rank1, Slice::Prop1, Slice::Tight];

    pub fn name(self) -> &'static str {
        match self {
            Slice::Any => "any",
            Slice::Rank1 => "rank1",
            Slice::Prop1 => "prop1",
            Slice::Tight => "tight",
        }
    }
}

impl std::str::FromStr for Slice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Slice::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown slice '{s}'")))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FuzzConfig {
    pub trials: u64,
    pub seed: u64,
    pub n_max: usize,
    pub k_max: usize,
    pub m_max: usize,
    pub slice: Slice,
    /// Random restarts per minimization.
    pub restarts: usize,
    pub tol: f64,
    /// Run the environment-embedding probe at m + 1.
    pub embedding: bool,
    /// Store wall-clock time per trial (breaks byte-identical reruns).
    pub record_time: bool,
    /// Index of the first trial; records are numbered from here.
    pub first_trial: u64,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        Self {
            trials: 10,
            seed: 0,
            n_max: 3,
            k_max: 3,
            m_max: 6,
            slice: Slice::Any,
            restarts: 16,
            tol: super::CHECK_TOL,
            embedding: false,
            record_time: false,
            first_trial: 0,
        }
    }
}

impl FuzzConfig {
    fn validate(&self) -> Result<()> {
        if self.n_max == 0 || self.k_max == 0 || self.m_max == 0 {
            return Err(Error::InvalidArgument("dimension bounds must be positive".into()));
        }
        if self.slice == Slice::Prop1 && self.m_max < 2 {
            return Err(Error::InvalidArgument("slice prop1 needs m_max ≥ 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FuzzSummary {
    pub trials: u64,
    pub violations: u64,
    pub errors: u64,
    pub inconclusive_checks: u64,
}

fn min_rank(n: usize, k: usize) -> usize {
    n.div_ceil(k)
}

/// Draws a pair of Stinespring isometries from `slice` within the bounds.
pub fn sample_pair<R: Rng + ?Sized>(
    slice: Slice,
    n_max: usize,
    k_max: usize,
    m_max: usize,
    rng: &mut R,
) -> Result<(StinespringIsometry, StinespringIsometry)> {
    for _ in 0..1000 {
        let n = rng.random_range(1..=n_max);
        // k = 1 admits only the trace map, so both channels would coincide
        let k = rng.random_range(k_max.min(2)..=k_max);
        let lo = min_rank(n, k);
        let hi = (n * k).min(m_max);
        if lo > hi {
            continue;
        }
        let (r1, r2, m) = match slice {
            Slice::Any => {
                let r1 = rng.random_range(lo..=hi);
                let r2 = rng.random_range(lo..=hi);
                (r1, r2, rng.random_range(r1.max(r2)..=m_max))
            }
            Slice::Rank1 => {
                if k < n {
                    continue;
                }
                let r2 = rng.random_range(lo..=hi);
                (1, r2, rng.random_range(r2..=m_max))
            }
            Slice::Prop1 => {
                if 2 * lo > m_max {
                    continue;
                }
                let r1 = rng.random_range(lo..=hi.min(m_max - lo));
                let r2 = rng.random_range(lo..=hi.min(m_max - r1));
                (r1, r2, r1 + r2)
            }
            Slice::Tight => {
                let r1 = rng.random_range(lo..=hi);
                let r2 = rng.random_range(lo..=hi);
                (r1, r2, r1.max(r2))
            }
        };
        let c1 = random_channel(n, k, r1, rng)?;
        let c2 = random_channel(n, k, r2, rng)?;
        let v1 = random_dilation(&c1, m, rng)?;
        let v2 = random_dilation(&c2, m, rng)?;
        return Ok((v1, v2));
    }
    Err(Error::InvalidArgument(format!(
        "no admissible dimensions for slice {} with n ≤ {n_max}, k ≤ {k_max}, m ≤ {m_max}",
        slice.name()
    )))
}

fn run_trial(cfg: &FuzzConfig, trial: u64) -> Result<TrialRecord> {
    let stream = RngStream::new(cfg.seed).split(trial);
    let mut rng = stream.split(0).rng();
    let start = Instant::now();
    let (v1, v2) = sample_pair(cfg.slice, cfg.n_max, cfg.k_max, cfg.m_max, &mut rng)?;
    let (n, k, m) = v1.dims();
    let opts = CheckOptions {
        minimize: MinimizeOptions { restarts: cfg.restarts, stream: stream.split(1), ..MinimizeOptions::default() },
        tol: cfg.tol,
        embedding: cfg.embedding,
    };
    let mut rec = TrialRecord {
        trial,
        seed: cfg.seed,
        slice: cfg.slice,
        dims: Dims { n, k, m, r1: 0, r2: 0 },
        v1: ChannelFile::from_stinespring(&v1),
        v2: ChannelFile::from_stinespring(&v2),
        fidelity: None,
        bures: None,
        diamond: None,
        min_interval: None,
        ratio: None,
        checks: BTreeMap::new(),
        error: None,
        wall_time: None,
    };
    match check_conjecture(&v1, &v2, &opts) {
        Ok(ev) => {
            let min = &ev.minimization;
            rec.dims = ev.dims;
            rec.fidelity = Some(ev.fidelity);
            rec.bures = Some(ev.bures);
            rec.diamond = Some(ev.diamond);
            rec.min_interval = Some([min.lower, min.upper]);
            rec.ratio = (ev.diamond.value > 0.0).then(|| min.upper / ev.diamond.value.sqrt());
            rec.checks = ev.checks;
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    if cfg.record_time {
        rec.wall_time = Some(start.elapsed().as_secs_f64());
    }
    Ok(rec)
}

/// Runs all trials and returns them in trial order.
pub fn fuzz(cfg: &FuzzConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    (cfg.first_trial..cfg.first_trial + cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect()
}

/// Runs all trials and writes one JSON line per trial in trial order,
/// flushing after every record.
pub fn fuzz_to_writer<W: Write + ?Sized>(cfg: &FuzzConfig, out: &mut W) -> Result<FuzzSummary> {
    cfg.validate()?;
    let mut summary = FuzzSummary::default();
    let chunk = (rayon::current_num_threads() as u64).max(1) * 2;
    let end = cfg.first_trial + cfg.trials;
    let mut next = cfg.first_trial;
    while next < end {
        let stop = (next + chunk).min(end);
        let batch: Vec<TrialRecord> = (next..stop).into_par_iter().map(|t| run_trial(cfg, t)).collect::<Result<_>>()?;
        for rec in &batch {
            let violations = rec.violations();
            if !violations.is_empty() {
                eprintln!("VIOLATION in trial {} (seed {}): {:?}", rec.trial, rec.seed, violations);
            }
            summary.trials += 1;
            summary.violations += violations.len() as u64;
            summary.errors += rec.error.is_some() as u64;
            summary.inconclusive_checks +=
                rec.checks.values().filter(|c| c.verdict == Verdict::Inconclusive).count() as u64;
            serde_json::to_writer(&mut *out, rec)?;
            out.write_all(b"\n")?;
            out.flush()?;
        }
        next = stop;
    }
    Ok(summary)
}

/// Counts records with a violation of `check`.
pub fn count_violations(records: &[TrialRecord], check: CheckName) -> usize {
    records.iter().filter(|r| r.checks.get(&check).is_some_and(|c| c.verdict == Verdict::Violation)).count()
}
