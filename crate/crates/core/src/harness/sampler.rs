use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::approx::Rational;
use crate::env::PerceptId;

/// Bits drawn before giving up on separating a draw from a cell boundary.
/// Reaching it has probability `2^-4096`; the draw then falls into the cell
/// containing the current lower end.
const MAX_BITS: u32 = 4096;

/// What a one-step draw produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Draw {
    Percept(PerceptId),
    /// The deficit cell: the environment ended.
    Ended,
}

/// Exact sampling from rational distributions with a ChaCha8 stream.
///
/// A draw reads uniform bits `b_1 b_2 ...` and narrows the dyadic interval
/// `[0.b_1...b_k, 0.b_1...b_k + 2^-k)` until it lies inside one cell of the
/// partition of `[0, 1)` by cumulative probabilities; the deficit
/// `1 - sum p` is the last cell.
pub struct Sampler {
    rng: ChaCha8Rng,
    word: u64,
    left: u32,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            word: 0,
            left: 0,
        }
    }

    fn bit(&mut self) -> bool {
        if self.left == 0 {
            self.word = self.rng.next_u64();
            self.left = 64;
        }
        self.left -= 1;
        (self.word >> self.left) & 1 == 1
    }

    /// `probs` are the positive one-step probabilities; their sum is at most 1.
    pub fn draw(&mut self, probs: &[(PerceptId, Rational)]) -> Draw {
        let mut bounds = Vec::with_capacity(probs.len());
        let mut acc = Rational::zero();
        for (_, p) in probs {
            acc += p;
            bounds.push(acc.clone());
        }
        let two = Rational::from_integer(2.into());
        let mut lo = Rational::zero();
        let mut width = Rational::one();
        for _ in 0..MAX_BITS {
            let cell = bounds.iter().position(|b| lo < *b).unwrap_or(bounds.len());
            let upper = &lo + &width;
            let cell_hi = bounds.get(cell).cloned().unwrap_or_else(Rational::one);
            if upper <= cell_hi {
                return cell_draw(probs, cell);
            }
            width /= &two;
            if self.bit() {
                lo += &width;
            }
        }
        let cell = bounds.iter().position(|b| lo < *b).unwrap_or(bounds.len());
        cell_draw(probs, cell)
    }
}

fn cell_draw(probs: &[(PerceptId, Rational)], cell: usize) -> Draw {
    match probs.get(cell) {
        Some((e, _)) => Draw::Percept(*e),
        None => Draw::Ended,
    }
}
