//! Seeded Monte Carlo estimation of union probabilities and validation of
//! computed bounds against them.
//!
//! Trials are split into chunks of [`CHUNK_SIZE`]. Chunk `c` draws from the
//! ChaCha8 stream `c` of the generator seeded with `seed`; each trial in the
//! chunk reseeds its own generator from one word of that stream. Hit counts
//! are reduced by integer addition, so results do not depend on how chunks
//! are scheduled across threads.

use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bound::{ratio_sequence, BoundConfig};
use crate::error::{Error, Result};
use crate::model::EventSeqModel;
use crate::weights::WeightScheme;

pub const CHUNK_SIZE: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Confidence level of the Wilson interval.
    pub ci_level: f64,
    /// Simulate even when an exact union is available.
    pub force_simulation: bool,
    /// A bound is flagged as violating only if it exceeds `ci_high` by more
    /// than this.
    pub violation_tol: f64,
    pub bound: BoundConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            ci_level: 0.99,
            force_simulation: false,
            violation_tol: 1e-9,
            bound: BoundConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnionSource {
    Exact,
    MonteCarlo,
}

impl UnionSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            UnionSource::Exact => "exact",
            UnionSource::MonteCarlo => "mc",
        }
    }
}

/// Estimate of `P(A_s ∪ … ∪ A_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnionEstimate {
    pub estimate: f64,
    pub trials: u64,
    pub hits: u64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ci_level: f64,
    pub seed: u64,
    pub s: usize,
    pub n: usize,
    pub source: UnionSource,
}

/// Wilson score interval for `hits` successes in `trials` at `level`,
/// widened if needed so that it contains the point estimate.
pub fn wilson_interval(hits: u64, trials: u64, level: f64) -> Result<(f64, f64)> {
    if trials == 0 || hits > trials {
        return Err(Error::InvalidArgument(format!(
            "{hits} hits in {trials} trials"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence level {level} not in (0, 1)"
        )));
    }
    let z = Normal::standard().inverse_cdf(1.0 - (1.0 - level) / 2.0);
    let nt = trials as f64;
    let phat = hits as f64 / nt;
    let z2 = z * z;
    let denom = 1.0 + z2 / nt;
    let center = (phat + z2 / (2.0 * nt)) / denom;
    let half = z / denom * (phat * (1.0 - phat) / nt + z2 / (4.0 * nt * nt)).sqrt();
    let low = (center - half).max(0.0).min(phat);
    let high = (center + half).min(1.0).max(phat);
    Ok((low, high))
}

fn chunk_hits(model: &EventSeqModel, s: usize, n: usize, seed: u64, chunk: u64, count: u64) -> u64 {
    let mut stream = ChaCha8Rng::seed_from_u64(seed);
    stream.set_stream(chunk);
    (0..count)
        .filter(|_| {
            let mut trial = ChaCha8Rng::seed_from_u64(stream.next_u64());
            model.hits_range(&mut trial, s, n)
        })
        .count() as u64
}

/// Number of trajectories (out of `trials`) hitting an event at 1-based
/// positions `s..=n`. Trial `t` always uses the same random draws for a
/// given seed, whatever `s` and `n` are.
pub fn count_hits(model: &EventSeqModel, s: usize, n: usize, trials: u64, seed: u64) -> u64 {
    let chunks = trials.div_ceil(CHUNK_SIZE);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK_SIZE.min(trials - c * CHUNK_SIZE);
            chunk_hits(model, s, n, seed, c, count)
        })
        .sum()
}

fn check_range(model: &EventSeqModel, s: usize, n: usize) -> Result<()> {
    if s == 0 || s > n {
        return Err(Error::StartOutOfRange { start: s, end: n });
    }
    if n > model.horizon() {
        return Err(Error::HorizonExceeded {
            requested: n,
            available: model.horizon(),
        });
    }
    Ok(())
}

/// Monte Carlo estimate of `P(A_s ∪ … ∪ A_n)`; always simulates.
pub fn estimate_union(
    model: &EventSeqModel,
    s: usize,
    n: usize,
    trials: u64,
    seed: u64,
    cfg: &SimConfig,
) -> Result<UnionEstimate> {
    check_range(model, s, n)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let hits = count_hits(model, s, n, trials, seed);
    let estimate = hits as f64 / trials as f64;
    let (ci_low, ci_high) = wilson_interval(hits, trials, cfg.ci_level)?;
    Ok(UnionEstimate {
        estimate,
        trials,
        hits,
        stderr: (estimate * (1.0 - estimate) / trials as f64).sqrt(),
        ci_low,
        ci_high,
        ci_level: cfg.ci_level,
        seed,
        s,
        n,
        source: UnionSource::MonteCarlo,
    })
}

/// Exact union when the model provides one (unless simulation is forced),
/// otherwise [`estimate_union`].
pub fn union_value(
    model: &EventSeqModel,
    s: usize,
    n: usize,
    trials: u64,
    seed: u64,
    cfg: &SimConfig,
) -> Result<UnionEstimate> {
    if !cfg.force_simulation {
        if let Some(exact) = model.exact_union(s, n)? {
            return Ok(UnionEstimate {
                estimate: exact,
                trials: 0,
                hits: 0,
                stderr: 0.0,
                ci_low: exact,
                ci_high: exact,
                ci_level: cfg.ci_level,
                seed,
                s,
                n,
                source: UnionSource::Exact,
            });
        }
    }
    estimate_union(model, s, n, trials, seed, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Violated,
    /// The ratio was undefined, so there is nothing to compare.
    UndefinedBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub n: usize,
    pub bound_value: Option<f64>,
    pub estimate: UnionEstimate,
    /// `ci_high - bound_value`.
    pub slack: Option<f64>,
    pub verdict: Verdict,
}

/// Compares `R_n` under `scheme` with `P(A_1 ∪ … ∪ A_n)`.
pub fn validate_bound(
    model: &EventSeqModel,
    scheme: &WeightScheme,
    n: usize,
    trials: u64,
    seed: u64,
    cfg: &SimConfig,
) -> Result<ValidationReport> {
    let g = model.gram_source(n)?;
    let w = scheme.resolve(&g, n)?;
    let bound_value = match crate::bound::ratio_with_guard(&g, &w, n, cfg.bound.guard) {
        Ok(r) => Some(r),
        Err(Error::UndefinedRatio { .. }) => None,
        Err(e) => return Err(e),
    };
    let estimate = union_value(model, 1, n, trials, seed, cfg)?;
    Ok(make_report(n, bound_value, estimate, cfg))
}

fn make_report(
    n: usize,
    bound_value: Option<f64>,
    estimate: UnionEstimate,
    cfg: &SimConfig,
) -> ValidationReport {
    let slack = bound_value.map(|b| estimate.ci_high - b);
    let verdict = match bound_value {
        None => Verdict::UndefinedBound,
        Some(b) if b > estimate.ci_high + cfg.violation_tol => Verdict::Violated,
        Some(_) => Verdict::Consistent,
    };
    ValidationReport {
        n,
        bound_value,
        estimate,
        slack,
        verdict,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub ratio: Option<f64>,
    pub running_max: Option<f64>,
    pub union: UnionEstimate,
}

/// `1, 2, 5, 10, 20, 50, …` up to `n`, always ending at `n`.
pub fn default_grid(n: usize) -> Vec<usize> {
    let mut grid = Vec::new();
    let mut decade = 1usize;
    'outer: loop {
        for step in [1, 2, 5] {
            let v = decade.saturating_mul(step);
            if v >= n {
                break 'outer;
            }
            grid.push(v);
        }
        decade = decade.saturating_mul(10);
    }
    if n > 0 {
        grid.push(n);
    }
    grid
}

/// Ratio and union curves over an increasing grid of horizons. Weights are
/// resolved once at the largest horizon.
pub fn convergence_experiment(
    model: &EventSeqModel,
    scheme: &WeightScheme,
    n_grid: &[usize],
    trials: u64,
    seed: u64,
    cfg: &SimConfig,
) -> Result<Vec<ConvergenceRow>> {
    let Some(&n_max) = n_grid.last() else {
        return Err(Error::InvalidArgument("empty n grid".into()));
    };
    if n_grid[0] == 0 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "n grid must be strictly increasing from 1".into(),
        ));
    }
    let g = model.gram_source(n_max)?;
    let report = ratio_sequence(&g, scheme, n_max, &cfg.bound)?;
    n_grid
        .iter()
        .map(|&n| {
            Ok(ConvergenceRow {
                n,
                ratio: report.ratio_at(n),
                running_max: report.running_max[n - 1],
                union: union_value(model, 1, n, trials, seed, cfg)?,
            })
        })
        .collect()
}

/// Validation at the last row of a convergence table.
pub fn final_validation(rows: &[ConvergenceRow], cfg: &SimConfig) -> Option<ValidationReport> {
    rows.last()
        .map(|r| make_report(r.n, r.ratio, r.union.clone(), cfg))
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `n,ratio,running_max,union,ci_low,ci_high,source`.
pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n",
        "ratio",
        "running_max",
        "union",
        "ci_low",
        "ci_high",
        "source",
    ])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            cell(r.ratio),
            cell(r.running_max),
            r.union.estimate.to_string(),
            r.union.ci_low.to_string(),
            r.union.ci_high.to_string(),
            r.union.source.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
