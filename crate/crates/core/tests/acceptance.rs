//! Acceptance suite. Runs every criterion, prints one line each and exits
//! non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bcbound_core::bound::{
    corollary_ratio, ratio, ratio_sequence, tail_ratio, weighted_chung_erdos,
};
use bcbound_core::gram::{partition_inequality, GramSource};
use bcbound_core::model::ProbRule;
use bcbound_core::simulate::{estimate_union, validate_bound, SimConfig, Verdict};
use bcbound_core::weights::{optimal_weights, DEFAULT_CUTOFF};
use bcbound_core::{BoundConfig, EventSeqModel, WeightScheme};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn example_exactness() -> Outcome {
    let model = EventSeqModel::example_periodic();
    let g = model.gram_source(300).map_err(|e| e.to_string())?;
    let unit = 25.0 / 44.0;
    for k in 1..=100 {
        let n = 3 * k;
        let r = ratio(&g, &vec![1.0; n], n).map_err(|e| e.to_string())?;
        if !close(r, unit, 1e-12) {
            return Err(format!("unit ratio at n = {n} is {r}, expected {unit}"));
        }
    }
    let union = model.exact_union(1, 3).map_err(|e| e.to_string())?.unwrap();
    if !close(union, 0.75, 1e-12) {
        return Err(format!("P(A ∪ B) = {union}"));
    }
    let signed: Vec<f64> = (0..300)
        .map(|i| if i % 3 == 2 { -1.0 } else { 1.0 })
        .collect();
    for k in 1..=100 {
        let n = 3 * k;
        let r = ratio(&g, &signed, n).map_err(|e| e.to_string())?;
        if !close(r, union, 1e-12) {
            return Err(format!("signed ratio at n = {n} is {r}, expected {union}"));
        }
    }
    let opt = optimal_weights(&g, 3, DEFAULT_CUTOFF).map_err(|e| e.to_string())?;
    let w = DVector::from_vec(opt.weights.clone());
    let target = DVector::from_vec(vec![1.0, 1.0, -1.0]);
    let cosine = w.dot(&target) / (w.norm() * target.norm());
    check(
        cosine > 1.0 - 1e-9 && close(opt.value, 0.75, 1e-12),
        format!(
            "unit 25/44 at n = 3..300, signed 0.75, optimal cosine {cosine}, value {}",
            opt.value
        ),
    )
}

fn chung_erdos_and_psd() -> (Outcome, Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0usize;
    let mut psd_failures = 0usize;
    let mut gram_mismatch = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let rm = common::random_model(&mut rng, false);
        let n = rng.random_range(1..=3 * rm.period());
        let g = rm.model.gram(n).expect("random gram");
        for i in 1..=n {
            for j in 1..=n {
                if !close(g.joint(i - 1, j - 1), rm.joint(i, j), 1e-12) {
                    gram_mismatch += 1;
                }
            }
        }
        if !g.check_psd(1e-8).passed() {
            psd_failures += 1;
        }
        let union = rm.model.exact_union(1, n).unwrap().unwrap();
        if !close(union, rm.union(1, n), 1e-12) {
            gram_mismatch += 1;
        }
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..=2.0)).collect();
        let (lhs, rhs) = weighted_chung_erdos(&g, &w, n, union).unwrap();
        let excess = lhs - rhs;
        worst = worst.max(excess);
        if excess > 1e-9 * rhs.abs().max(1.0) {
            violations += 1;
        }
    }
    let ce = check(
        violations == 0 && gram_mismatch == 0,
        format!(
            "1000 models, {violations} violations, {gram_mismatch} entry mismatches, max lhs - rhs {worst:e}"
        ),
    );
    let psd = check(
        psd_failures == 0,
        format!("{psd_failures} of 1000 Grams fail the psd check"),
    );
    (ce, psd)
}

fn direct_gamma(
    e: &DMatrix<f64>,
    rows: std::ops::Range<usize>,
    cols: std::ops::Range<usize>,
) -> f64 {
    let mut s = 0.0;
    for i in rows {
        for j in cols.clone() {
            s += e[(i, j)];
        }
    }
    s
}

fn partition_splits() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = 0usize;
    let mut mismatches = 0usize;
    let mut splits = 0usize;
    for _ in 0..500 {
        let n = rng.random_range(2..=12);
        let rank = rng.random_range(1..=4);
        let mut e: DMatrix<f64> = DMatrix::zeros(n, n);
        for _ in 0..rank {
            let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0));
            e += &v * v.transpose();
        }
        let scale = e
            .iter()
            .map(|x: &f64| x.abs())
            .sum::<f64>()
            .powi(2)
            .max(1.0);
        for split in 1..n {
            splits += 1;
            let (lhs, rhs) = partition_inequality(&e, split).unwrap();
            let c = direct_gamma(&e, 0..split, split..n);
            let a = direct_gamma(&e, 0..split, 0..split);
            let b = direct_gamma(&e, split..n, split..n);
            if !close(lhs, c * c, 1e-9 * scale) || !close(rhs, a * b, 1e-9 * scale) {
                mismatches += 1;
            }
            if lhs > rhs + 1e-9 * scale {
                violations += 1;
            }
        }
    }
    check(
        violations == 0 && mismatches == 0,
        format!("500 matrices, {splits} splits, {violations} violations, {mismatches} mismatches"),
    )
}

fn tail_convergence() -> Outcome {
    let n = 5000;
    let model = EventSeqModel::independent(ProbRule::Constant(0.5)).unwrap();
    let g = model.gram_source(n).map_err(|e| e.to_string())?;
    let t = tail_ratio(&g, &vec![1.0; n], 2, n).map_err(|e| e.to_string())?;
    let oracle = (n as f64 + 1.0) / (n as f64 - 1.0);
    check(
        (t - 1.0).abs() < 0.01 && close(t, oracle, 1e-12),
        format!("tail ratio {t} (closed form {oracle})"),
    )
}

fn harmonic_closed_form(n: usize) -> f64 {
    let h: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
    let h2: f64 = (1..=n).map(|k| 1.0 / (k as f64 * k as f64)).sum();
    h * h / (h * h + h - h2)
}

fn second_borel_cantelli() -> Outcome {
    let n = 10_000;
    let model = EventSeqModel::independent(ProbRule::Harmonic(1.0)).unwrap();
    let g = model.gram_source(n).map_err(|e| e.to_string())?;
    let rep = ratio_sequence(&g, &WeightScheme::Unit, n, &BoundConfig::default())
        .map_err(|e| e.to_string())?;
    let grid = [100, 1000, 10_000];
    let values: Vec<f64> = grid.iter().map(|&k| rep.ratio_at(k).unwrap()).collect();
    for (&k, &r) in grid.iter().zip(&values) {
        let oracle = harmonic_closed_form(k);
        if !close(r, oracle, 1e-9) {
            return Err(format!("R_{k} = {r}, closed form {oracle}"));
        }
    }
    check(
        values[2] >= 0.90 && values[0] < values[1] && values[1] < values[2],
        format!("R at 1e2, 1e3, 1e4: {values:?}"),
    )
}

fn pairwise_parity_bound() -> Outcome {
    let n = 1400;
    let model = EventSeqModel::pairwise_parity(3).unwrap();
    let g = model.gram_source(n).map_err(|e| e.to_string())?;
    let r = ratio(&g, &vec![1.0; n], n).map_err(|e| e.to_string())?;
    let oracle = n as f64 / (n as f64 + 1.0);
    check(
        r >= 0.99,
        format!("R_{n} = {r}, required >= 0.99 (oracle n/(n+1) = {oracle})"),
    )
}

fn monte_carlo_consistency() -> Outcome {
    let model = EventSeqModel::example_periodic();
    let cfg = SimConfig::default();
    let est = estimate_union(&model, 1, 30, 100_000, 0, &cfg).map_err(|e| e.to_string())?;
    if !(est.ci_low <= 0.75 && 0.75 <= est.ci_high) {
        return Err(format!(
            "interval [{}, {}] misses 0.75",
            est.ci_low, est.ci_high
        ));
    }
    let w: Vec<f64> = (0..30)
        .map(|i| if i % 3 == 2 { -1.0 } else { 1.0 })
        .collect();
    let rep = validate_bound(&model, &WeightScheme::Explicit(w), 30, 100_000, 0, &cfg)
        .map_err(|e| e.to_string())?;
    if rep.verdict != Verdict::Consistent {
        return Err(format!("verdict {:?}", rep.verdict));
    }
    let covered = (0..500u64)
        .filter(|&seed| {
            let e = estimate_union(&model, 1, 3, 2000, seed, &cfg).unwrap();
            e.ci_low <= 0.75 && 0.75 <= e.ci_high
        })
        .count();
    let coverage = covered as f64 / 500.0;
    check(
        coverage >= 0.97,
        format!(
            "estimate {} in [{:.5}, {:.5}], verdict consistent, Wilson coverage {coverage}",
            est.estimate, est.ci_low, est.ci_high
        ),
    )
}

fn optimality_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = 0usize;
    let mut min_gap = f64::INFINITY;
    for _ in 0..100 {
        let rm = common::random_model(&mut rng, true);
        let n = rng.random_range(1..=3 * rm.period());
        let g = rm.model.gram(n).unwrap();
        let opt = optimal_weights(&g, n, DEFAULT_CUTOFF).unwrap();
        let unit = ratio(&g, &vec![1.0; n], n).unwrap();
        let cor = corollary_ratio(&g, n).unwrap();
        let attained = ratio(&g, &opt.weights, n).unwrap();
        min_gap = min_gap.min(opt.value - unit.max(cor));
        if opt.value < unit - 1e-9 || opt.value < cor - 1e-9 || !close(attained, opt.value, 1e-9) {
            failures += 1;
        }
    }
    check(
        failures == 0,
        format!("100 models, {failures} failures, min optimal - best other {min_gap:e}"),
    )
}

fn timed(f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome, Duration, Duration)> = Vec::new();
    let secs = Duration::from_secs;

    let (o, t) = timed(example_exactness);
    results.push((1, "example exactness", o, t, secs(1)));

    let start = Instant::now();
    let (ce, psd) = chung_erdos_and_psd();
    let t = start.elapsed();
    results.push((2, "weighted chung-erdos", ce, t, secs(30)));
    results.push((3, "gram psd", psd, t, secs(30)));

    let (o, t) = timed(partition_splits);
    results.push((4, "partition inequality", o, t, secs(10)));
    let (o, t) = timed(tail_convergence);
    results.push((5, "tail ratio convergence", o, t, secs(5)));
    let (o, t) = timed(second_borel_cantelli);
    results.push((6, "harmonic independent", o, t, secs(10)));
    let (o, t) = timed(pairwise_parity_bound);
    results.push((7, "pairwise parity", o, t, secs(5)));
    let (o, t) = timed(monte_carlo_consistency);
    results.push((8, "monte carlo consistency", o, t, secs(60)));
    let (o, t) = timed(optimality_dominance);
    results.push((9, "optimality dominance", o, t, secs(10)));

    let mut failed = 0;
    for (id, name, outcome, took, limit) in results {
        let (ok, detail) = match outcome {
            Ok(d) => (took <= limit, d),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "[{}] criterion {id} {name}: {detail} ({:.3}s, limit {}s)",
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
