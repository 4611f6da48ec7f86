//! Property checks run by `bcbound verify` on a model or on Gram data read
//! from CSV.

use std::fmt;

use nalgebra::DMatrix;
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bound::{corollary_ratio, ratio, ratio_sequence_for_weights, tail_ratio, BoundConfig};
use crate::error::{Error, Result};
use crate::gram::{check_psd, partition_profile, GramData, GramSource, Violation, DEFAULT_PSD_TOL};
use crate::model::{EventSeqModel, MAX_DENSE_HORIZON};
use crate::simulate::{union_value, SimConfig, UnionSource};
use crate::weights::{inverse_probability_weights, WeightScheme};

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub n: usize,
    pub psd_tol: f64,
    pub scheme: WeightScheme,
    /// Random signed weight vectors (entries in `[-2, 2]`) checked in
    /// addition to `scheme` and unit weights.
    pub random_weight_sets: usize,
    /// Absolute slack, scaled by `max(1, |rhs|)`, for the inequality checks.
    pub tol: f64,
    pub trials: u64,
    pub seed: u64,
    pub sim: SimConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            n: 30,
            psd_tol: DEFAULT_PSD_TOL,
            scheme: WeightScheme::Unit,
            random_weight_sets: 8,
            tol: 1e-9,
            trials: 100_000,
            seed: 0,
            sim: SimConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    fn push(&mut self, name: &'static str, status: Status, detail: impl Into<String>) {
        self.checks.push(Check {
            name,
            status,
            detail: detail.into(),
        });
    }
}

fn weight_sets(g: &GramData, cfg: &VerifyConfig) -> Result<Vec<(String, Vec<f64>)>> {
    let n = g.len();
    let mut sets = vec![("unit".to_string(), vec![1.0; n])];
    if cfg.scheme != WeightScheme::Unit {
        match cfg.scheme.resolve(g, n) {
            Ok(w) => sets.push((cfg.scheme.to_string(), w)),
            Err(Error::ZeroProbability { .. } | Error::Degenerate(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dist = Uniform::new_inclusive(-2.0, 2.0).expect("valid range");
    for k in 0..cfg.random_weight_sets {
        let w: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
        sets.push((format!("random#{k}"), w));
    }
    Ok(sets)
}

fn structural_checks(g: &GramData, cfg: &VerifyConfig, report: &mut VerifyReport) {
    let violations: Vec<Violation> = g
        .violations(cfg.psd_tol)
        .into_iter()
        .filter(|v| !matches!(v, Violation::NotPsd { .. }))
        .collect();
    if violations.is_empty() {
        report.push(
            "gram invariants",
            Status::Pass,
            "diagonal, range and Fréchet bounds hold",
        );
    } else {
        let shown: Vec<String> = violations.iter().take(5).map(ToString::to_string).collect();
        report.push(
            "gram invariants",
            Status::Fail,
            format!("{} violation(s): {}", violations.len(), shown.join("; ")),
        );
    }

    let verdict = g.check_psd(cfg.psd_tol);
    let status = if verdict.passed() {
        Status::Pass
    } else {
        Status::Fail
    };
    report.push(
        "psd",
        status,
        format!("min eigenvalue {:e}", verdict.min_eigenvalue()),
    );
}

fn partition_check(
    g: &GramData,
    sets: &[(String, Vec<f64>)],
    cfg: &VerifyConfig,
    report: &mut VerifyReport,
) -> Result<()> {
    let n = g.len();
    if n < 2 {
        report.push(
            "partition inequality",
            Status::Skipped,
            "needs at least 2 events",
        );
        return Ok(());
    }
    let m = g.matrix(n);
    let mut worst: Option<String> = None;
    let mut checked = 0usize;
    for (name, w) in sets {
        let e = DMatrix::from_fn(n, n, |i, j| w[i] * w[j] * m[(i, j)]);
        // the block-split inequality needs a PSD input; a non-PSD Gram is reported by the psd check
        if !check_psd(&e, cfg.psd_tol)?.passed() {
            continue;
        }
        let abs_sum: f64 = e.iter().map(|x| x.abs()).sum();
        let slack = cfg.tol * abs_sum.max(1.0).powi(2);
        for (k, (lhs, rhs)) in partition_profile(&e)?.into_iter().enumerate() {
            checked += 1;
            if lhs > rhs + slack && worst.is_none() {
                worst = Some(format!("weights {name}, split {}: {lhs} > {rhs}", k + 1));
            }
        }
    }
    match worst {
        None => report.push(
            "partition inequality",
            Status::Pass,
            format!("{checked} splits over {} weight sets", sets.len()),
        ),
        Some(d) => report.push("partition inequality", Status::Fail, d),
    }
    Ok(())
}

fn chung_erdos_check(
    g: &GramData,
    sets: &[(String, Vec<f64>)],
    unions: &[(usize, f64)],
    cfg: &VerifyConfig,
    report: &mut VerifyReport,
) -> Result<()> {
    let mut failure: Option<String> = None;
    for (name, w) in sets {
        let seq = ratio_sequence_for_weights(
            g,
            WeightScheme::Explicit(w.clone()),
            w.clone(),
            &BoundConfig::default(),
        )?;
        for &(n, u) in unions {
            let lhs = seq.partial_sums[n - 1].powi(2);
            let rhs = u * seq.denominators[n - 1];
            if lhs > rhs + cfg.tol * rhs.abs().max(1.0) && failure.is_none() {
                failure = Some(format!(
                    "weights {name}, n = {n}: {lhs} > {u} * {}",
                    seq.denominators[n - 1]
                ));
            }
        }
    }
    match failure {
        None => report.push(
            "weighted chung-erdos",
            Status::Pass,
            format!("{} horizons x {} weight sets", unions.len(), sets.len()),
        ),
        Some(d) => report.push("weighted chung-erdos", Status::Fail, d),
    }
    Ok(())
}

fn corollary_check(g: &GramData, report: &mut VerifyReport) -> Result<()> {
    let n = g.len();
    let w = match inverse_probability_weights(g.probs()) {
        Ok(w) => w,
        Err(Error::ZeroProbability { index }) => {
            report.push(
                "corollary consistency",
                Status::Skipped,
                format!("event {index} has zero probability"),
            );
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    let closed = corollary_ratio(g, n)?;
    let via = ratio(g, &w, n)?;
    let rel = (closed - via).abs() / via.abs().max(f64::MIN_POSITIVE);
    let status = if rel <= 1e-12 {
        Status::Pass
    } else {
        Status::Fail
    };
    report.push(
        "corollary consistency",
        status,
        format!("closed form {closed} vs inverse-weight ratio {via} (rel diff {rel:e})"),
    );
    Ok(())
}

fn tail_check(g: &GramData, report: &mut VerifyReport) {
    let n = g.len();
    let w = vec![1.0; n];
    match tail_ratio(g, &w, 1, n) {
        Ok(1.0) => {
            let extra = match tail_ratio(g, &w, 2.min(n), n) {
                Ok(t2) => format!("s=1 gives 1; s=2 gives {t2}"),
                Err(_) => "s=1 gives 1; s=2 undefined".into(),
            };
            report.push("tail ratio identity", Status::Pass, extra);
        }
        Ok(t) => report.push(
            "tail ratio identity",
            Status::Fail,
            format!("s=1 gives {t}"),
        ),
        Err(e) => report.push("tail ratio identity", Status::Skipped, e.to_string()),
    }
}

/// Checks on Gram data alone; union-based checks are skipped.
pub fn verify_gram(g: &GramData, cfg: &VerifyConfig) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    structural_checks(g, cfg, &mut report);
    let sets = weight_sets(g, cfg)?;
    partition_check(g, &sets, cfg, &mut report)?;
    report.push(
        "weighted chung-erdos",
        Status::Skipped,
        "no union probabilities for Gram input",
    );
    corollary_check(g, &mut report)?;
    tail_check(g, &mut report);
    Ok(report)
}

/// Full property suite on the first `cfg.n` events of a model. Unions are
/// exact where the model provides them at every horizon, otherwise simulated
/// at the final horizon and compared through the upper confidence limit.
pub fn verify_model(model: &EventSeqModel, cfg: &VerifyConfig) -> Result<VerifyReport> {
    let n = cfg.n;
    if n > MAX_DENSE_HORIZON {
        return Err(Error::SizeGuard(format!(
            "verify materializes Gram data; limited to {MAX_DENSE_HORIZON} events"
        )));
    }
    let g = GramData::from_source(&model.gram_source(n)?, n)?;
    let mut report = VerifyReport::default();
    structural_checks(&g, cfg, &mut report);
    let sets = weight_sets(&g, cfg)?;
    partition_check(&g, &sets, cfg, &mut report)?;

    let unions: Vec<(usize, f64)> = if model.exact_union(1, n)?.is_some() {
        (1..=n)
            .map(|k| Ok((k, model.exact_union(1, k)?.expect("exact union available"))))
            .collect::<Result<_>>()?
    } else {
        let est = union_value(model, 1, n, cfg.trials, cfg.seed, &cfg.sim)?;
        debug_assert_eq!(est.source, UnionSource::MonteCarlo);
        vec![(n, est.ci_high)]
    };
    chung_erdos_check(&g, &sets, &unions, cfg, &mut report)?;
    corollary_check(&g, &mut report)?;
    tail_check(&g, &mut report);
    Ok(report)
}
