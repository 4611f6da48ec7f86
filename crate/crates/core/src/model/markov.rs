//! Finite Markov chains and the events "the chain is in a target state at
//! step n".

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;

use super::space::MASS_TOL;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct MarkovChain {
    transition: DMatrix<f64>,
    initial: DVector<f64>,
    target: Vec<usize>,
    in_target: Vec<bool>,
    initial_sampler: WeightedIndex<f64>,
    row_samplers: Vec<WeightedIndex<f64>>,
}

fn check_distribution(path: &str, v: &[f64]) -> Result<()> {
    for (k, &x) in v.iter().enumerate() {
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::InvalidModel {
                path: format!("{path}[{k}]"),
                message: format!("entry {x} must be finite and nonnegative"),
            });
        }
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidModel {
            path: path.to_string(),
            message: format!("entries sum to {total}, expected 1"),
        });
    }
    Ok(())
}

impl MarkovChain {
    pub fn new(
        states: usize,
        transition: &[Vec<f64>],
        initial: &[f64],
        target: &[usize],
    ) -> Result<Self> {
        let invalid = |path: &str, message: String| Error::InvalidModel {
            path: path.into(),
            message,
        };
        if states == 0 {
            return Err(invalid("states", "need at least one state".into()));
        }
        if transition.len() != states {
            return Err(invalid(
                "transition",
                format!("{} rows for {states} states", transition.len()),
            ));
        }
        for (r, row) in transition.iter().enumerate() {
            let path = format!("transition[{r}]");
            if row.len() != states {
                return Err(invalid(
                    &path,
                    format!("{} columns for {states} states", row.len()),
                ));
            }
            check_distribution(&path, row)?;
        }
        if initial.len() != states {
            return Err(invalid(
                "initial",
                format!("{} entries for {states} states", initial.len()),
            ));
        }
        check_distribution("initial", initial)?;
        let mut in_target = vec![false; states];
        for (k, &s) in target.iter().enumerate() {
            if s >= states {
                return Err(invalid(
                    &format!("target[{k}]"),
                    format!("state {s} out of range"),
                ));
            }
            in_target[s] = true;
        }
        let target: Vec<usize> = (0..states).filter(|&s| in_target[s]).collect();
        let sampler = |w: &[f64], path: &str| {
            WeightedIndex::new(w.iter().copied()).map_err(|e| invalid(path, e.to_string()))
        };
        let row_samplers = transition
            .iter()
            .enumerate()
            .map(|(r, row)| sampler(row, &format!("transition[{r}]")))
            .collect::<Result<_>>()?;
        Ok(Self {
            transition: DMatrix::from_fn(states, states, |i, j| transition[i][j]),
            initial: DVector::from_column_slice(initial),
            initial_sampler: sampler(initial, "initial")?,
            target,
            in_target,
            row_samplers,
        })
    }

    pub fn states(&self) -> usize {
        self.initial.len()
    }

    pub fn target(&self) -> &[usize] {
        &self.target
    }

    pub(crate) fn is_target(&self, s: usize) -> bool {
        self.in_target[s]
    }

    pub(crate) fn initial_sampler(&self) -> &WeightedIndex<f64> {
        &self.initial_sampler
    }

    pub(crate) fn row_sampler(&self, s: usize) -> &WeightedIndex<f64> {
        &self.row_samplers[s]
    }

    /// Distribution after `steps` transitions, by iterated vector products.
    pub fn distribution(&self, steps: usize) -> DVector<f64> {
        let pt = self.transition.transpose();
        let mut mu = self.initial.clone();
        for _ in 0..steps {
            mu = &pt * mu;
        }
        mu
    }

    /// `P(X_step ∈ target)`.
    pub fn target_prob(&self, step: usize) -> f64 {
        let mu = self.distribution(step);
        self.target.iter().map(|&s| mu[s]).sum()
    }

    /// `transition^d` by repeated squaring.
    pub fn transition_power(&self, mut d: usize) -> DMatrix<f64> {
        let k = self.states();
        let mut result = DMatrix::identity(k, k);
        let mut base = self.transition.clone();
        while d > 0 {
            if d & 1 == 1 {
                result = &result * &base;
            }
            d >>= 1;
            if d > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// `P(X_a ∈ T, X_b ∈ T)` for steps `a, b`, using a matrix power for the gap.
    pub fn joint_target_prob(&self, a: usize, b: usize) -> f64 {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let mu = self.distribution(a);
        let gap = self.transition_power(b - a);
        self.target
            .iter()
            .map(|&s| mu[s] * self.target.iter().map(|&t| gap[(s, t)]).sum::<f64>())
            .sum()
    }

    /// Tables for steps `1..=n`: target components of the step distributions
    /// and of the hitting vectors `h_d(s) = Σ_{t∈T} (P^d)_{s,t}` for
    /// `d = 0..n`, each stored row-major with `|T|` columns.
    pub(crate) fn tables(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let pt = self.transition.transpose();
        let t = self.target.len();
        let mut mu_t = Vec::with_capacity(n * t);
        let mut hit_t = Vec::with_capacity(n * t);
        let mut mu = self.initial.clone();
        let mut h = DVector::from_fn(
            self.states(),
            |s, _| if self.in_target[s] { 1.0 } else { 0.0 },
        );
        for _ in 0..n {
            mu = &pt * mu;
            mu_t.extend(self.target.iter().map(|&s| mu[s]));
            hit_t.extend(self.target.iter().map(|&s| h[s]));
            h = &self.transition * h;
        }
        (mu_t, hit_t)
    }
}
