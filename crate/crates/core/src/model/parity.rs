//! Parity events over independent fair bits: for each nonempty bit subset
//! `S` (as a mask, in increasing mask order) the event "the bits in `S` have
//! even parity". Distinct subsets give pairwise independent events.

use crate::error::{Error, Result};

/// Largest supported bit count; exact evaluation enumerates `2^bits` patterns.
pub const MAX_BITS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParityBits {
    bits: u32,
}

#[inline]
fn even(x: u32, mask: u32) -> bool {
    (x & mask).count_ones().is_multiple_of(2)
}

impl ParityBits {
    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 {
            return Err(Error::InvalidModel {
                path: "bits".into(),
                message: "need at least one bit".into(),
            });
        }
        if bits > MAX_BITS {
            return Err(Error::SizeGuard(format!(
                "pairwise_parity with {bits} bits exceeds the limit of {MAX_BITS}"
            )));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// `2^bits - 1`.
    pub fn period(&self) -> usize {
        (1usize << self.bits) - 1
    }

    pub fn pattern_mask(&self) -> u32 {
        ((1u64 << self.bits) - 1) as u32
    }

    /// Subset mask of the event at zero-based position `i`.
    pub fn mask(&self, i: usize) -> u32 {
        (i % self.period()) as u32 + 1
    }

    /// Does bit pattern `x` lie in the event at zero-based position `i`?
    pub fn contains(&self, x: u32, i: usize) -> bool {
        even(x, self.mask(i))
    }

    /// `P(A_i ∩ A_j)` by enumerating bit patterns. Bits outside both
    /// subsets do not affect either event, so only patterns over the union of
    /// the two supports are visited.
    pub fn joint(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.mask(i), self.mask(j));
        let support = a | b;
        let mut hits = 0u64;
        let mut x = 0u32;
        loop {
            if even(x, a) && even(x, b) {
                hits += 1;
            }
            // next subset of `support`
            x = x.wrapping_sub(support) & support;
            if x == 0 {
                break;
            }
        }
        hits as f64 / (1u64 << support.count_ones()) as f64
    }

    /// Probability that at least one event at zero-based positions `lo..hi`
    /// occurs, by enumerating all `2^bits` patterns.
    pub fn union(&self, lo: usize, hi: usize) -> f64 {
        let count = (hi - lo).min(self.period());
        let masks: Vec<u32> = (lo..lo + count).map(|i| self.mask(i)).collect();
        let total = 1u64 << self.bits;
        let avoided = (0..total)
            .filter(|&x| masks.iter().all(|&m| !even(x as u32, m)))
            .count();
        1.0 - avoided as f64 / total as f64
    }
}
