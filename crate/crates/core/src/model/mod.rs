//! Generative event-sequence models with exact probabilities.
//!
//! Positions are 1-based in the public API (`event_prob(model, 1)` is
//! `P(A_1)`); [`ModelGram`] follows the zero-based [`GramSource`] convention.

mod markov;
mod parity;
mod space;
mod spec;

use std::ops::ControlFlow;

use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use markov::MarkovChain;
pub use parity::{ParityBits, MAX_BITS};
pub use space::{Atom, FiniteSpace, PeriodicEvents, MASS_TOL};
pub use spec::{AtomSpec, ModelSpec, ProbSpec};

use crate::error::{Error, Result};
use crate::gram::{GramData, GramSource, DEFAULT_PSD_TOL};

/// Largest horizon for which Gram data (virtual or dense) is built.
pub const MAX_HORIZON: usize = 1_000_000;

/// Largest horizon for a materialized [`GramData`]; the packed triangle
/// holds `n(n+1)/2` doubles.
pub const MAX_DENSE_HORIZON: usize = 10_000;

/// Probability rule of an independent sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbRule {
    Constant(f64),
    List(Vec<f64>),
    /// `p_n = min(1, c / n)`.
    Harmonic(f64),
}

impl ProbRule {
    fn validate(&self) -> Result<()> {
        let bad = |path: String, v: f64| Error::InvalidModel {
            path,
            message: format!("probability {v} not in [0, 1]"),
        };
        match self {
            ProbRule::Constant(q) if !(0.0..=1.0).contains(q) => Err(bad("probs.q".into(), *q)),
            ProbRule::List(v) => {
                if v.is_empty() {
                    return Err(Error::InvalidModel {
                        path: "probs.values".into(),
                        message: "empty probability list".into(),
                    });
                }
                match v.iter().position(|x| !(0.0..=1.0).contains(x)) {
                    Some(k) => Err(bad(format!("probs.values[{k}]"), v[k])),
                    None => Ok(()),
                }
            }
            ProbRule::Harmonic(c) if !(c.is_finite() && *c >= 0.0) => Err(Error::InvalidModel {
                path: "probs.c".into(),
                message: format!("harmonic constant {c} must be finite and nonnegative"),
            }),
            _ => Ok(()),
        }
    }

    /// `p_i` for 1-based `i`.
    pub fn prob(&self, i: usize) -> f64 {
        match self {
            ProbRule::Constant(q) => *q,
            ProbRule::List(v) => v[i - 1],
            ProbRule::Harmonic(c) => (c / i as f64).min(1.0),
        }
    }

    fn horizon(&self) -> usize {
        match self {
            ProbRule::List(v) => v.len(),
            _ => MAX_HORIZON,
        }
    }
}

#[derive(Debug, Clone)]
pub enum EventSeqModel {
    /// `A_n` cycles through events of a finite space.
    Periodic(PeriodicEvents),
    /// Mutually independent events.
    Independent(ProbRule),
    /// Parity events over fair bits, repeating with period `2^bits - 1`.
    PairwiseParity(ParityBits),
    /// `A_n = {X_n ∈ target}` for a finite Markov chain.
    Markov(MarkovChain),
}

/// One sampled outcome: `indicators[k]` is true iff the outcome lies in `A_{k+1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectorySample {
    pub n: usize,
    pub indicators: Vec<bool>,
}

impl EventSeqModel {
    pub fn periodic(space: FiniteSpace, events: &[Vec<String>]) -> Result<Self> {
        Ok(EventSeqModel::Periodic(PeriodicEvents::new(space, events)?))
    }

    pub fn independent(rule: ProbRule) -> Result<Self> {
        rule.validate()?;
        Ok(EventSeqModel::Independent(rule))
    }

    pub fn pairwise_parity(bits: u32) -> Result<Self> {
        Ok(EventSeqModel::PairwiseParity(ParityBits::new(bits)?))
    }

    pub fn markov(
        states: usize,
        transition: &[Vec<f64>],
        initial: &[f64],
        target: &[usize],
    ) -> Result<Self> {
        Ok(EventSeqModel::Markov(MarkovChain::new(
            states, transition, initial, target,
        )?))
    }

    /// Four equal atoms with `A = {a1, a2}`, `B = {a1, a3}` and the period
    /// `A, B, A∩B`.
    pub fn example_periodic() -> Self {
        let space = FiniteSpace::uniform(4).expect("uniform space");
        let ev = |ids: &[&str]| ids.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        Self::periodic(space, &[ev(&["a1", "a2"]), ev(&["a1", "a3"]), ev(&["a1"])])
            .expect("valid example")
    }

    /// Parses a JSON model specification, reporting the JSON path of the
    /// first offending value.
    pub fn from_json(text: &str) -> Result<Self> {
        ModelSpec::from_json(text)?.build()
    }

    pub fn kind(&self) -> &'static str {
        match self {
            EventSeqModel::Periodic(_) => "finite_periodic",
            EventSeqModel::Independent(_) => "independent",
            EventSeqModel::PairwiseParity(_) => "pairwise_parity",
            EventSeqModel::Markov(_) => "markov",
        }
    }

    /// Number of events the model defines (`MAX_HORIZON` when unbounded).
    pub fn horizon(&self) -> usize {
        match self {
            EventSeqModel::Independent(rule) => rule.horizon(),
            _ => MAX_HORIZON,
        }
    }

    fn check_position(&self, i: usize) -> Result<()> {
        if i == 0 {
            return Err(Error::InvalidArgument("event positions start at 1".into()));
        }
        if i > self.horizon() {
            return Err(Error::HorizonExceeded {
                requested: i,
                available: self.horizon(),
            });
        }
        Ok(())
    }

    /// `P(A_i)` for 1-based `i`.
    pub fn event_prob(&self, i: usize) -> Result<f64> {
        self.check_position(i)?;
        Ok(match self {
            EventSeqModel::Periodic(ev) => {
                let e = (i - 1) % ev.period();
                ev.joint[e * ev.period() + e]
            }
            EventSeqModel::Independent(rule) => rule.prob(i),
            EventSeqModel::PairwiseParity(_) => 0.5,
            EventSeqModel::Markov(chain) => chain.target_prob(i),
        })
    }

    /// Virtual Gram data for the first `n` events; `M` is never materialized.
    pub fn gram_source(&self, n: usize) -> Result<ModelGram> {
        if n == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if n > self.horizon() {
            return Err(Error::HorizonExceeded {
                requested: n,
                available: self.horizon(),
            });
        }
        let tables = match self {
            EventSeqModel::Periodic(ev) => Tables::Periodic {
                period: ev.period(),
                joint: ev.joint.clone(),
            },
            EventSeqModel::Independent(rule) => Tables::Independent {
                p: (1..=n).map(|i| rule.prob(i)).collect(),
            },
            EventSeqModel::PairwiseParity(bits) => Tables::Parity(*bits),
            EventSeqModel::Markov(chain) => {
                let (mu, hit) = chain.tables(n);
                Tables::Markov {
                    width: chain.target().len(),
                    mu,
                    hit,
                }
            }
        };
        Ok(ModelGram { n, tables })
    }

    /// Dense Gram data for the first `n` events, checked against every
    /// invariant (diagonal, range, Fréchet, PSD).
    pub fn gram(&self, n: usize) -> Result<GramData> {
        if n > MAX_DENSE_HORIZON {
            return Err(Error::SizeGuard(format!(
                "dense Gram data limited to {MAX_DENSE_HORIZON} events, requested {n}"
            )));
        }
        let g = GramData::from_source(&self.gram_source(n)?, n)?;
        g.ensure_valid(DEFAULT_PSD_TOL)?;
        Ok(g)
    }

    /// `P(limsup A_n)` where it is available in closed form (periodic models:
    /// the union of the period's events).
    pub fn exact_limsup(&self) -> Option<f64> {
        match self {
            EventSeqModel::Periodic(ev) => Some(ev.union_mass(0..ev.period())),
            _ => None,
        }
    }

    /// `P(A_s ∪ … ∪ A_n)` (1-based, inclusive) where it is available exactly.
    pub fn exact_union(&self, s: usize, n: usize) -> Result<Option<f64>> {
        if s == 0 || s > n {
            return Err(Error::StartOutOfRange { start: s, end: n });
        }
        self.check_position(n)?;
        Ok(match self {
            EventSeqModel::Periodic(ev) => {
                let p = ev.period();
                let count = (n - s + 1).min(p);
                Some(ev.union_mass((s - 1..s - 1 + count).map(move |i| i % p)))
            }
            EventSeqModel::Independent(rule) => {
                let miss: f64 = (s..=n).map(|i| 1.0 - rule.prob(i)).product();
                Some(1.0 - miss)
            }
            EventSeqModel::PairwiseParity(bits) => Some(bits.union(s - 1, n)),
            EventSeqModel::Markov(_) => None,
        })
    }

    /// Draws one outcome and reports membership in `A_1, A_2, …` to `visit`
    /// in order until it breaks or `n` positions have been visited. The
    /// random draws for position `k` never depend on `n`, so shorter
    /// horizons see a prefix of longer ones.
    pub fn walk<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        n: usize,
        mut visit: impl FnMut(usize, bool) -> ControlFlow<()>,
    ) {
        match self {
            EventSeqModel::Periodic(ev) => {
                let atom = ev.space.sampler().sample(rng);
                let p = ev.period();
                for k in 0..n {
                    if visit(k, ev.members[k % p][atom]).is_break() {
                        return;
                    }
                }
            }
            EventSeqModel::Independent(rule) => {
                for k in 0..n {
                    let u: f64 = rng.random();
                    if visit(k, u < rule.prob(k + 1)).is_break() {
                        return;
                    }
                }
            }
            EventSeqModel::PairwiseParity(bits) => {
                let x = rng.random::<u32>() & bits.pattern_mask();
                for k in 0..n {
                    if visit(k, bits.contains(x, k)).is_break() {
                        return;
                    }
                }
            }
            EventSeqModel::Markov(chain) => {
                let mut state = chain.initial_sampler().sample(rng);
                for k in 0..n {
                    state = chain.row_sampler(state).sample(rng);
                    if visit(k, chain.is_target(state)).is_break() {
                        return;
                    }
                }
            }
        }
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> TrajectorySample {
        let mut indicators = Vec::with_capacity(n);
        self.walk(rng, n, |_, hit| {
            indicators.push(hit);
            ControlFlow::Continue(())
        });
        TrajectorySample { n, indicators }
    }

    /// Deterministic single trajectory for `seed` (ChaCha8 seeded via
    /// `seed_from_u64`).
    pub fn sample_indicators(&self, n: usize, seed: u64) -> TrajectorySample {
        self.sample_with(&mut ChaCha8Rng::seed_from_u64(seed), n)
    }

    /// Does a trajectory hit some event at 1-based positions `s..=n`?
    pub fn hits_range<R: Rng + ?Sized>(&self, rng: &mut R, s: usize, n: usize) -> bool {
        let mut hit = false;
        self.walk(rng, n, |k, inside| {
            if inside && k + 1 >= s {
                hit = true;
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        hit
    }
}

#[derive(Debug, Clone)]
enum Tables {
    Periodic {
        period: usize,
        joint: Vec<f64>,
    },
    Independent {
        p: Vec<f64>,
    },
    Parity(ParityBits),
    Markov {
        width: usize,
        mu: Vec<f64>,
        hit: Vec<f64>,
    },
}

/// Model-backed [`GramSource`] with `O(1)` or `O(|target|)` entry access.
#[derive(Debug, Clone)]
pub struct ModelGram {
    n: usize,
    tables: Tables,
}

impl GramSource for ModelGram {
    fn len(&self) -> usize {
        self.n
    }

    fn prob(&self, i: usize) -> f64 {
        self.joint(i, i)
    }

    fn joint(&self, i: usize, j: usize) -> f64 {
        match &self.tables {
            Tables::Periodic { period, joint } => joint[(i % period) * period + j % period],
            Tables::Independent { p } => {
                if i == j {
                    p[i]
                } else {
                    p[i] * p[j]
                }
            }
            Tables::Parity(bits) => bits.joint(i, j),
            Tables::Markov { width, mu, hit } => {
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                let gap = b - a;
                (0..*width)
                    .map(|t| mu[a * width + t] * hit[gap * width + t])
                    .sum()
            }
        }
    }
}
