use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;

use crate::error::{Error, Result};

/// Mass tolerance for probability vectors.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub id: String,
    pub mass: f64,
}

/// Finite probability space given by its atoms.
#[derive(Debug, Clone)]
pub struct FiniteSpace {
    atoms: Vec<Atom>,
    index: HashMap<String, usize>,
    sampler: WeightedIndex<f64>,
}

impl FiniteSpace {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let invalid = |path: String, message: String| Error::InvalidModel { path, message };
        if atoms.is_empty() {
            return Err(invalid(
                "atoms".into(),
                "at least one atom is required".into(),
            ));
        }
        let mut index = HashMap::with_capacity(atoms.len());
        for (k, a) in atoms.iter().enumerate() {
            if !(a.mass.is_finite() && (0.0..=1.0).contains(&a.mass)) {
                return Err(invalid(
                    format!("atoms[{k}].mass"),
                    format!("{} not in [0, 1]", a.mass),
                ));
            }
            if index.insert(a.id.clone(), k).is_some() {
                return Err(invalid(
                    format!("atoms[{k}].id"),
                    format!("duplicate id '{}'", a.id),
                ));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.mass).sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(invalid(
                "atoms".into(),
                format!("masses sum to {total}, expected 1"),
            ));
        }
        let sampler = WeightedIndex::new(atoms.iter().map(|a| a.mass))
            .map_err(|e| invalid("atoms".into(), e.to_string()))?;
        Ok(Self {
            atoms,
            index,
            sampler,
        })
    }

    /// Equal-mass atoms named `a1..ak`.
    pub fn uniform(k: usize) -> Result<Self> {
        Self::new(
            (1..=k)
                .map(|i| Atom {
                    id: format!("a{i}"),
                    mass: 1.0 / k as f64,
                })
                .collect(),
        )
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub(crate) fn sampler(&self) -> &WeightedIndex<f64> {
        &self.sampler
    }

    /// Mass of the atoms flagged in `members`, summed in atom order.
    pub fn mass_of(&self, members: impl Fn(usize) -> bool) -> f64 {
        self.atoms
            .iter()
            .enumerate()
            .filter(|&(k, _)| members(k))
            .map(|(_, a)| a.mass)
            .sum()
    }
}

/// Events of a periodic model as atom-membership masks.
#[derive(Debug, Clone)]
pub struct PeriodicEvents {
    pub(crate) space: FiniteSpace,
    /// `members[e][a]`: atom `a` belongs to period event `e`.
    pub(crate) members: Vec<Vec<bool>>,
    /// Intersection masses of period events, `period x period`, row-major.
    pub(crate) joint: Vec<f64>,
}

impl PeriodicEvents {
    pub fn new(space: FiniteSpace, events: &[Vec<String>]) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::InvalidModel {
                path: "events".into(),
                message: "period length must be at least 1".into(),
            });
        }
        let mut members = Vec::with_capacity(events.len());
        for (e, ids) in events.iter().enumerate() {
            let mut row = vec![false; space.len()];
            for (k, id) in ids.iter().enumerate() {
                let a = space.position(id).ok_or_else(|| Error::InvalidModel {
                    path: format!("events[{e}][{k}]"),
                    message: format!("unknown atom id '{id}'"),
                })?;
                row[a] = true;
            }
            members.push(row);
        }
        let period = members.len();
        let mut joint = vec![0.0; period * period];
        for a in 0..period {
            for b in 0..=a {
                let m = space.mass_of(|k| members[a][k] && members[b][k]);
                joint[a * period + b] = m;
                joint[b * period + a] = m;
            }
        }
        Ok(Self {
            space,
            members,
            joint,
        })
    }

    pub fn period(&self) -> usize {
        self.members.len()
    }

    pub fn space(&self) -> &FiniteSpace {
        &self.space
    }

    /// Mass of the union of the given period events.
    pub fn union_mass(&self, events: impl Iterator<Item = usize> + Clone) -> f64 {
        self.space
            .mass_of(|k| events.clone().any(|e| self.members[e][k]))
    }
}
