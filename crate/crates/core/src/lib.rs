//! Weighted Borel–Cantelli lower bounds.
//!
//! For events `A_1, A_2, …` and real weights `w_n` with `Σ w_n P(A_n) = ∞`,
//!
//! ```text
//! P(limsup A_n) >= limsup_n (Σ_{k≤n} w_k P(A_k))² / Σ_{i,j≤n} w_i w_j P(A_i ∩ A_j)
//! ```
//!
//! This crate evaluates that ratio on exact Gram data ([`gram`], [`bound`]),
//! picks weights ([`weights`]), builds Gram data from generative models
//! ([`model`]) and checks bounds against simulated or exact union
//! probabilities ([`simulate`], [`verify`]).

pub mod bound;
pub mod error;
pub mod gram;
pub mod model;
pub mod simulate;
pub mod verify;
pub mod weights;

pub use bound::{ratio, ratio_sequence, BoundConfig, BoundReport};
pub use error::{Error, Result};
pub use gram::{GramData, GramSource};
pub use model::EventSeqModel;
pub use weights::WeightScheme;
