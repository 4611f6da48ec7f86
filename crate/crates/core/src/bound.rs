//! Weighted ratio bounds on `P(limsup A_n)`.
//!
//! For weights `w` and Gram data `(p, M)` the ratio at horizon `n` is
//!
//! ```text
//! R_n = (Σ_{k≤n} w_k p_k)² / Σ_{i,j≤n} w_i w_j M_ij
//! ```
//!
//! and `limsup R_n` lower-bounds the probability that infinitely many events
//! occur whenever `Σ w_k p_k` diverges. At any finite `n`, `R_n` is also at
//! most `P(A_1 ∪ … ∪ A_n)` (weighted Chung–Erdős inequality).

use crate::error::{Error, Result};
use crate::gram::GramSource;
use crate::weights::WeightScheme;

/// Denominators at or below this value make a ratio undefined.
pub const DENOMINATOR_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConfig {
    pub guard: f64,
    /// Fraction of trailing indices whose maximum ratio is reported as
    /// `final_estimate`.
    pub tail_fraction: f64,
    /// `diverging` is set when `S_n >= S_{n/2} + divergence_margin`.
    pub divergence_margin: f64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            guard: DENOMINATOR_GUARD,
            tail_fraction: 0.25,
            divergence_margin: 1.0,
        }
    }
}

fn check_inputs<G: GramSource + ?Sized>(g: &G, w: &[f64], n: usize) -> Result<()> {
    if n > g.len() {
        return Err(Error::HorizonExceeded {
            requested: n,
            available: g.len(),
        });
    }
    if w.len() < n {
        return Err(Error::WeightsTooShort {
            len: w.len(),
            needed: n,
        });
    }
    Ok(())
}

/// `Σ_{i,j∈[lo,hi)} w_i w_j M_ij`, visiting the lower triangle once.
fn quadratic_form<G: GramSource + ?Sized>(g: &G, w: &[f64], lo: usize, hi: usize) -> f64 {
    let mut total = 0.0;
    for i in lo..hi {
        let mut cross = 0.0;
        for j in lo..i {
            cross += w[j] * g.joint(i, j);
        }
        total += w[i] * (2.0 * cross + w[i] * g.prob(i));
    }
    total
}

/// `(Σ w_i p_i)²` and `union_prob · Σ w_i w_j M_ij` over the first `n` events.
pub fn weighted_chung_erdos<G: GramSource + ?Sized>(
    g: &G,
    w: &[f64],
    n: usize,
    union_prob: f64,
) -> Result<(f64, f64)> {
    check_inputs(g, w, n)?;
    let s: f64 = (0..n).map(|i| w[i] * g.prob(i)).sum();
    Ok((s * s, union_prob * quadratic_form(g, w, 0, n)))
}

/// The ratio `R_n`. A denominator at or below [`DENOMINATOR_GUARD`] yields
/// [`Error::UndefinedRatio`].
pub fn ratio<G: GramSource + ?Sized>(g: &G, w: &[f64], n: usize) -> Result<f64> {
    ratio_with_guard(g, w, n, DENOMINATOR_GUARD)
}

pub fn ratio_with_guard<G: GramSource + ?Sized>(
    g: &G,
    w: &[f64],
    n: usize,
    guard: f64,
) -> Result<f64> {
    check_inputs(g, w, n)?;
    let s: f64 = (0..n).map(|i| w[i] * g.prob(i)).sum();
    let d = quadratic_form(g, w, 0, n);
    if d > guard {
        Ok(s * s / d)
    } else {
        Err(Error::UndefinedRatio { n, denominator: d })
    }
}

/// Closed form of the ratio under inverse-probability weights:
/// `n² / Σ_{i,j≤n} M_ij / (p_i p_j)`.
pub fn corollary_ratio<G: GramSource + ?Sized>(g: &G, n: usize) -> Result<f64> {
    if n > g.len() {
        return Err(Error::HorizonExceeded {
            requested: n,
            available: g.len(),
        });
    }
    if n == 0 {
        return Err(Error::UndefinedRatio {
            n,
            denominator: 0.0,
        });
    }
    let p: Vec<f64> = (0..n).map(|i| g.prob(i)).collect();
    if let Some(i) = p.iter().position(|&x| x <= 0.0) {
        return Err(Error::ZeroProbability { index: i + 1 });
    }
    let mut d = 0.0;
    for i in 0..n {
        let mut cross = 0.0;
        for j in 0..i {
            cross += g.joint(i, j) / p[j];
        }
        d += (2.0 * cross + 1.0) / p[i];
    }
    let nf = n as f64;
    Ok(nf * nf / d)
}

/// Off-diagonal ratio for nonnegative weights:
/// `Σ_{i<j} w_i w_j p_i p_j / Σ_{i<j} w_i w_j M_ij`.
pub fn off_diagonal_ratio<G: GramSource + ?Sized>(g: &G, w: &[f64], n: usize) -> Result<f64> {
    check_inputs(g, w, n)?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "off-diagonal ratio needs at least 2 events, got {n}"
        )));
    }
    if let Some(i) = w[..n].iter().position(|&x| x < 0.0) {
        return Err(Error::NegativeWeight {
            index: i + 1,
            value: w[i],
        });
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        let (mut cn, mut cd) = (0.0, 0.0);
        for j in 0..i {
            cn += w[j] * g.prob(j);
            cd += w[j] * g.joint(i, j);
        }
        num += w[i] * g.prob(i) * cn;
        den += w[i] * cd;
    }
    if den > DENOMINATOR_GUARD {
        Ok(num / den)
    } else {
        Err(Error::UndefinedRatio {
            n,
            denominator: den,
        })
    }
}

/// Ratio of the full double sum over `[1, n]²` to the tail double sum over
/// `[s, n]²` (`s` is 1-based).
pub fn tail_ratio<G: GramSource + ?Sized>(g: &G, w: &[f64], s: usize, n: usize) -> Result<f64> {
    check_inputs(g, w, n)?;
    if s == 0 || s > n {
        return Err(Error::StartOutOfRange { start: s, end: n });
    }
    let start = s - 1;
    let (mut full, mut tail) = (0.0, 0.0);
    for i in 0..n {
        let (mut head_cross, mut tail_cross) = (0.0, 0.0);
        for j in 0..i {
            let t = w[j] * g.joint(i, j);
            if j < start {
                head_cross += t;
            } else {
                tail_cross += t;
            }
        }
        let diag = w[i] * g.prob(i);
        full += w[i] * (2.0 * (head_cross + tail_cross) + diag);
        if i >= start {
            tail += w[i] * (2.0 * tail_cross + diag);
        }
    }
    if s == 1 {
        // identical sums; avoid reporting a rounding artefact
        return if full.abs() > DENOMINATOR_GUARD {
            Ok(1.0)
        } else {
            Err(Error::UndefinedRatio {
                n,
                denominator: full,
            })
        };
    }
    if tail.abs() > DENOMINATOR_GUARD {
        Ok(full / tail)
    } else {
        Err(Error::UndefinedRatio {
            n,
            denominator: tail,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    /// `S_m = Σ_{k≤m} w_k p_k` for `m = 1..=n`.
    pub partial_sums: Vec<f64>,
    pub diverging: bool,
}

/// Finite-horizon heuristic for divergence of `Σ w_k p_k`. Advisory only.
pub fn divergence_diagnostic<G: GramSource + ?Sized>(
    g: &G,
    w: &[f64],
    n: usize,
    margin: f64,
) -> Result<Divergence> {
    check_inputs(g, w, n)?;
    let mut acc = 0.0;
    let partial_sums: Vec<f64> = (0..n)
        .map(|i| {
            acc += w[i] * g.prob(i);
            acc
        })
        .collect();
    let diverging = match n {
        0 => false,
        _ => {
            let half = n / 2;
            let s_half = if half == 0 {
                0.0
            } else {
                partial_sums[half - 1]
            };
            partial_sums[n - 1] >= s_half + margin
        }
    };
    Ok(Divergence {
        partial_sums,
        diverging,
    })
}

/// Ratio sequence `R_1..R_N` with running maximum and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub scheme: WeightScheme,
    pub weights: Vec<f64>,
    /// `None` where the denominator fell below the guard.
    pub ratios: Vec<Option<f64>>,
    /// `None` until the first defined ratio.
    pub running_max: Vec<Option<f64>>,
    /// Maximum defined ratio over the trailing window.
    pub final_estimate: Option<f64>,
    pub partial_sums: Vec<f64>,
    pub denominators: Vec<f64>,
    pub denominator_min: f64,
    pub diverging: bool,
}

impl BoundReport {
    pub fn horizon(&self) -> usize {
        self.ratios.len()
    }

    pub fn ratio_at(&self, n: usize) -> Option<f64> {
        n.checked_sub(1)
            .and_then(|k| self.ratios.get(k).copied().flatten())
    }
}

/// Evaluates `R_1..R_n` incrementally: the numerator sum and quadratic form
/// are extended by one row per step, `O(k)` work at step `k`.
pub fn ratio_sequence<G: GramSource + ?Sized>(
    g: &G,
    scheme: &WeightScheme,
    n: usize,
    cfg: &BoundConfig,
) -> Result<BoundReport> {
    if n > g.len() {
        return Err(Error::HorizonExceeded {
            requested: n,
            available: g.len(),
        });
    }
    let w = scheme.resolve(g, n)?;
    ratio_sequence_for_weights(g, scheme.clone(), w, cfg)
}

/// Same as [`ratio_sequence`] for already-resolved weights; the horizon is
/// `w.len()`.
pub fn ratio_sequence_for_weights<G: GramSource + ?Sized>(
    g: &G,
    scheme: WeightScheme,
    w: Vec<f64>,
    cfg: &BoundConfig,
) -> Result<BoundReport> {
    let n = w.len();
    check_inputs(g, &w, n)?;
    let mut ratios = Vec::with_capacity(n);
    let mut running_max = Vec::with_capacity(n);
    let mut partial_sums = Vec::with_capacity(n);
    let mut denominators = Vec::with_capacity(n);
    let (mut s, mut d) = (0.0, 0.0);
    let mut best: Option<f64> = None;
    for k in 0..n {
        let mut cross = 0.0;
        for j in 0..k {
            cross += w[j] * g.joint(k, j);
        }
        s += w[k] * g.prob(k);
        d += w[k] * (2.0 * cross + w[k] * g.prob(k));
        let r = (d > cfg.guard).then(|| s * s / d);
        if let Some(r) = r {
            best = Some(best.map_or(r, |b: f64| b.max(r)));
        }
        ratios.push(r);
        running_max.push(best);
        partial_sums.push(s);
        denominators.push(d);
    }
    let window = ((cfg.tail_fraction * n as f64).ceil() as usize).clamp(1.min(n), n);
    let final_estimate = ratios[n - window..]
        .iter()
        .flatten()
        .copied()
        .reduce(f64::max);
    let denominator_min = denominators.iter().copied().fold(f64::INFINITY, f64::min);
    let diverging = n > 0 && {
        let half = n / 2;
        let s_half = if half == 0 {
            0.0
        } else {
            partial_sums[half - 1]
        };
        partial_sums[n - 1] >= s_half + cfg.divergence_margin
    };
    Ok(BoundReport {
        scheme,
        weights: w,
        ratios,
        running_max,
        final_estimate,
        partial_sums,
        denominators,
        denominator_min,
        diverging,
    })
}
