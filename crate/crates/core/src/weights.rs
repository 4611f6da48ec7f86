//! Weight schemes for the ratio bound, including the weights that maximize
//! it at a fixed horizon.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::bound::ratio;
use crate::error::{Error, Result};
use crate::gram::GramSource;
use crate::model::MAX_DENSE_HORIZON;

/// Default relative eigenvalue cutoff for [`optimal_weights`].
pub const DEFAULT_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum WeightScheme {
    /// `w_n = 1`.
    Unit,
    /// `w_n = 1 / P(A_n)`.
    InverseProbability,
    /// Maximizer of the ratio at the evaluated horizon.
    Optimal {
        cutoff: f64,
    },
    Explicit(Vec<f64>),
}

impl WeightScheme {
    pub fn optimal() -> Self {
        WeightScheme::Optimal {
            cutoff: DEFAULT_CUTOFF,
        }
    }

    /// Concrete weights for the first `n` events.
    pub fn resolve<G: GramSource + ?Sized>(&self, g: &G, n: usize) -> Result<Vec<f64>> {
        if n > g.len() {
            return Err(Error::HorizonExceeded {
                requested: n,
                available: g.len(),
            });
        }
        match self {
            WeightScheme::Unit => Ok(vec![1.0; n]),
            WeightScheme::InverseProbability => {
                let p: Vec<f64> = (0..n).map(|i| g.prob(i)).collect();
                inverse_probability_weights(&p)
            }
            WeightScheme::Optimal { cutoff } => Ok(optimal_weights(g, n, *cutoff)?.weights),
            WeightScheme::Explicit(w) => {
                if w.len() < n {
                    Err(Error::WeightsTooShort {
                        len: w.len(),
                        needed: n,
                    })
                } else {
                    Ok(w[..n].to_vec())
                }
            }
        }
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightScheme::Unit => write!(f, "unit"),
            WeightScheme::InverseProbability => write!(f, "inverse"),
            WeightScheme::Optimal { cutoff } => write!(f, "optimal (cutoff {cutoff:e})"),
            WeightScheme::Explicit(w) => write!(f, "explicit ({} weights)", w.len()),
        }
    }
}

/// `w_i = 1 / p_i`; a zero probability is reported with its 1-based index.
pub fn inverse_probability_weights(p: &[f64]) -> Result<Vec<f64>> {
    p.iter()
        .enumerate()
        .map(|(i, &x)| {
            if x > 0.0 {
                Ok(1.0 / x)
            } else {
                Err(Error::ZeroProbability { index: i + 1 })
            }
        })
        .collect()
}

/// Parses a weight file: a JSON array of reals.
pub fn weights_from_json(text: &str) -> Result<Vec<f64>> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let w: Vec<f64> = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    if let Some(i) = w.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            location: format!("[{i}]"),
        });
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalWeights {
    /// Normalized so that `Σ w_i p_i >= 0` and `max |w_i| = 1`.
    pub weights: Vec<f64>,
    /// Ratio attained by `weights`.
    pub value: f64,
    /// Number of eigencomponents kept.
    pub rank: usize,
}

/// Maximizes `(wᵀp)² / (wᵀMw)` over the first `n` events.
///
/// The maximizer solves `M w = p`; it is computed as the spectral
/// pseudo-inverse solution, dropping eigencomponents below
/// `cutoff * λ_max`. Since `p` lies in the range of `M` for Gram data of
/// genuine events, the attained value is `pᵀM⁺p`.
pub fn optimal_weights<G: GramSource + ?Sized>(
    g: &G,
    n: usize,
    cutoff: f64,
) -> Result<OptimalWeights> {
    if n > g.len() {
        return Err(Error::HorizonExceeded {
            requested: n,
            available: g.len(),
        });
    }
    if n == 0 {
        return Err(Error::Degenerate("no events".into()));
    }
    if n > MAX_DENSE_HORIZON {
        return Err(Error::SizeGuard(format!(
            "optimal weights need the dense matrix; limited to {MAX_DENSE_HORIZON} events"
        )));
    }
    let p = DVector::from_fn(n, |i, _| g.prob(i));
    if p.iter().all(|&x| x == 0.0) {
        return Err(Error::Degenerate("all probabilities are zero".into()));
    }
    let m = DMatrix::from_fn(n, n, |i, j| g.joint(i, j));
    let eig = SymmetricEigen::new(m);
    let lambda_max = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(lambda_max > 0.0) {
        return Err(Error::Degenerate(format!(
            "largest eigenvalue {lambda_max:e}"
        )));
    }
    let floor = cutoff * lambda_max;
    let mut w = DVector::zeros(n);
    let mut rank = 0;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > floor {
            let u = eig.eigenvectors.column(k);
            w += u * (u.dot(&p) / lambda);
            rank += 1;
        }
    }
    let projection = w.dot(&p);
    if !(projection.abs() > 0.0) {
        return Err(Error::Degenerate(
            "probability vector has no component above the eigenvalue cutoff".into(),
        ));
    }
    let scale = w.amax();
    let sign = projection.signum();
    let weights: Vec<f64> = w.iter().map(|x| sign * x / scale).collect();
    let value = ratio(g, &weights, n)?;
    Ok(OptimalWeights {
        weights,
        value,
        rank,
    })
}
