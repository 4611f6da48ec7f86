//! JSON model specification files.
//!
//! ```json
//! {"type": "finite_periodic",
//!  "atoms": [{"id": "a1", "mass": 0.25}, ...],
//!  "events": [["a1", "a2"], ["a1", "a3"], ["a1"]]}
//! {"type": "independent", "probs": {"kind": "harmonic", "c": 1.0}}
//! {"type": "pairwise_parity", "bits": 3}
//! {"type": "markov", "states": 2, "transition": [[0.9, 0.1], [0.5, 0.5]],
//!  "initial": [1.0, 0.0], "target": [1]}
//! ```
//!
//! Independent `probs` kinds: `{"kind": "constant", "q": ..}`,
//! `{"kind": "list", "values": [..]}`, `{"kind": "harmonic", "c": ..}`.
//! Markov states are zero-based. Unknown keys are rejected.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::space::Atom;
use super::{EventSeqModel, FiniteSpace, ProbRule};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelSpec {
    FinitePeriodic {
        atoms: Vec<AtomSpec>,
        events: Vec<Vec<String>>,
    },
    Independent {
        probs: ProbSpec,
    },
    PairwiseParity {
        bits: u32,
    },
    Markov {
        states: usize,
        transition: Vec<Vec<f64>>,
        initial: Vec<f64>,
        target: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub id: String,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbSpec {
    Constant { q: f64 },
    List { values: Vec<f64> },
    Harmonic { c: f64 },
}

// Variant bodies. The tag is read by hand: serde's internally tagged enums
// buffer their input and lose the JSON path of nested errors.

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PeriodicBody {
    atoms: Vec<AtomSpec>,
    events: Vec<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IndependentBody {
    probs: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParityBody {
    bits: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MarkovBody {
    states: usize,
    transition: Vec<Vec<f64>>,
    initial: Vec<f64>,
    target: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantBody {
    q: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ListBody {
    values: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HarmonicBody {
    c: f64,
}

fn join(prefix: &str, path: &str) -> String {
    match (prefix.is_empty(), path == ".") {
        (true, _) => path.to_string(),
        (false, true) => prefix.to_string(),
        (false, false) if path.starts_with('[') => format!("{prefix}{path}"),
        (false, false) => format!("{prefix}.{path}"),
    }
}

fn parse_at<T: DeserializeOwned>(value: Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| Error::Parse {
        path: join(prefix, &e.path().to_string()),
        message: e.into_inner().to_string(),
    })
}

/// Splits off the string tag `key`, returning it with the remaining object.
fn take_tag(value: Value, key: &str, prefix: &str) -> Result<(String, Value)> {
    let Value::Object(mut map) = value else {
        return Err(Error::Parse {
            path: join(prefix, "."),
            message: "expected a JSON object".into(),
        });
    };
    let tag = match map.remove(key) {
        Some(Value::String(t)) => t,
        Some(_) => {
            return Err(Error::Parse {
                path: join(prefix, key),
                message: "expected a string".into(),
            })
        }
        None => {
            return Err(Error::Parse {
                path: join(prefix, "."),
                message: format!("missing field `{key}`"),
            })
        }
    };
    Ok((tag, Value::Object(map)))
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let value: Value = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            path: e.path().to_string(),
            message: e.into_inner().to_string(),
        })?;
        let (tag, body) = take_tag(value, "type", "")?;
        Ok(match tag.as_str() {
            "finite_periodic" => {
                let b: PeriodicBody = parse_at(body, "")?;
                ModelSpec::FinitePeriodic {
                    atoms: b.atoms,
                    events: b.events,
                }
            }
            "independent" => {
                let b: IndependentBody = parse_at(body, "")?;
                ModelSpec::Independent {
                    probs: ProbSpec::from_value(b.probs)?,
                }
            }
            "pairwise_parity" => {
                let b: ParityBody = parse_at(body, "")?;
                ModelSpec::PairwiseParity { bits: b.bits }
            }
            "markov" => {
                let b: MarkovBody = parse_at(body, "")?;
                ModelSpec::Markov {
                    states: b.states,
                    transition: b.transition,
                    initial: b.initial,
                    target: b.target,
                }
            }
            other => {
                return Err(Error::Parse {
                    path: "type".into(),
                    message: format!(
                        "unknown model type `{other}`, expected one of finite_periodic, \
                         independent, pairwise_parity, markov"
                    ),
                })
            }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model specs serialize")
    }

    pub fn build(&self) -> Result<EventSeqModel> {
        match self {
            ModelSpec::FinitePeriodic { atoms, events } => {
                let space = FiniteSpace::new(
                    atoms
                        .iter()
                        .map(|a| Atom {
                            id: a.id.clone(),
                            mass: a.mass,
                        })
                        .collect(),
                )?;
                EventSeqModel::periodic(space, events)
            }
            ModelSpec::Independent { probs } => EventSeqModel::independent(match probs {
                ProbSpec::Constant { q } => ProbRule::Constant(*q),
                ProbSpec::List { values } => ProbRule::List(values.clone()),
                ProbSpec::Harmonic { c } => ProbRule::Harmonic(*c),
            }),
            ModelSpec::PairwiseParity { bits } => EventSeqModel::pairwise_parity(*bits),
            ModelSpec::Markov {
                states,
                transition,
                initial,
                target,
            } => EventSeqModel::markov(*states, transition, initial, target),
        }
    }
}

impl ProbSpec {
    fn from_value(value: Value) -> Result<Self> {
        let (kind, body) = take_tag(value, "kind", "probs")?;
        Ok(match kind.as_str() {
            "constant" => ProbSpec::Constant {
                q: parse_at::<ConstantBody>(body, "probs")?.q,
            },
            "list" => ProbSpec::List {
                values: parse_at::<ListBody>(body, "probs")?.values,
            },
            "harmonic" => ProbSpec::Harmonic {
                c: parse_at::<HarmonicBody>(body, "probs")?.c,
            },
            other => {
                return Err(Error::Parse {
                    path: "probs.kind".into(),
                    message: format!(
                        "unknown probability rule `{other}`, expected constant, list or harmonic"
                    ),
                })
            }
        })
    }
}
