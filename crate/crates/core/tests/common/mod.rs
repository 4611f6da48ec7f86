#![allow(dead_code)]

use bcbound_core::model::{Atom, FiniteSpace};
use bcbound_core::EventSeqModel;
use rand::Rng;

/// Random finite periodic model together with its raw description, so tests
/// can compute probabilities directly from atoms.
pub struct RandomModel {
    pub model: EventSeqModel,
    pub masses: Vec<f64>,
    /// `members[e][a]`: atom `a` belongs to period event `e`.
    pub members: Vec<Vec<bool>>,
}

impl RandomModel {
    pub fn period(&self) -> usize {
        self.members.len()
    }

    /// Event at 1-based position `i`.
    pub fn event(&self, i: usize) -> &[bool] {
        &self.members[(i - 1) % self.period()]
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.masses
            .iter()
            .zip(self.event(i))
            .filter(|(_, &m)| m)
            .map(|(x, _)| x)
            .sum()
    }

    pub fn joint(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.event(i), self.event(j));
        (0..self.masses.len())
            .filter(|&k| a[k] && b[k])
            .map(|k| self.masses[k])
            .sum()
    }

    pub fn union(&self, s: usize, n: usize) -> f64 {
        (0..self.masses.len())
            .filter(|&k| (s..=n).any(|i| self.event(i)[k]))
            .map(|k| self.masses[k])
            .sum()
    }
}

/// Up to 6 atoms and 8 period events. With `nonempty`, every event holds
/// at least one atom, so all probabilities are positive.
pub fn random_model<R: Rng>(rng: &mut R, nonempty: bool) -> RandomModel {
    let k = rng.random_range(1..=6);
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut masses: Vec<f64> = raw.iter().map(|x| x / total).collect();
    // absorb rounding so the masses sum to one as closely as possible
    let rest: f64 = masses[..k - 1].iter().sum();
    masses[k - 1] = 1.0 - rest;

    let period = rng.random_range(1..=8);
    let members: Vec<Vec<bool>> = (0..period)
        .map(|_| {
            let mut e: Vec<bool> = (0..k).map(|_| rng.random_bool(0.5)).collect();
            if nonempty && !e.iter().any(|&b| b) {
                e[rng.random_range(0..k)] = true;
            }
            e
        })
        .collect();

    let atoms = masses
        .iter()
        .enumerate()
        .map(|(i, &m)| Atom {
            id: format!("x{i}"),
            mass: m,
        })
        .collect();
    let space = FiniteSpace::new(atoms).expect("valid random space");
    let events: Vec<Vec<String>> = members
        .iter()
        .map(|e| (0..k).filter(|&a| e[a]).map(|a| format!("x{a}")).collect())
        .collect();
    let model = EventSeqModel::periodic(space, &events).expect("valid random model");
    RandomModel {
        model,
        masses,
        members,
    }
}
