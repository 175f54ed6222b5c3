use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::rate::sample_rate;
use crate::subset::{sample_bernoulli_into, IndexSet};

/// How each query of a batch picks its sampling rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RatePlan {
    Fixed(f64),
    /// A fresh rate from [`sample_rate`] per query.
    Threshold { a: f64 },
}

/// Queries fixed before any response is seen.
///
/// A batch is a committed seed: query `i` is regenerated on demand from its own
/// ChaCha stream, so the attacker and the system see the same subsets without storing
/// them. [`QueryBatch::evaluate`] hands back responses only after every query ran.
#[derive(Clone, Debug)]
pub struct QueryBatch {
    n: usize,
    len: usize,
    seed: [u8; 32],
    plan: RatePlan,
}

impl QueryBatch {
    pub fn commit<R: Rng + ?Sized>(n: usize, len: usize, plan: RatePlan, rng: &mut R) -> Self {
        let mut seed = [0u8; 32];
        rng.fill(&mut seed);
        QueryBatch { n, len, seed, plan }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    /// Writes query `i` into `buf` and returns its rate.
    pub fn query(&self, i: usize, buf: &mut IndexSet) -> f64 {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(i as u64);
        let q = match self.plan {
            RatePlan::Fixed(q) => q,
            RatePlan::Threshold { a } => sample_rate(a, self.n, &mut rng),
        };
        sample_bernoulli_into(buf, q, &mut rng);
        q
    }

    /// Runs `answer` on every query, in parallel.
    pub fn evaluate<T, F>(&self, answer: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, &IndexSet) -> T + Sync,
    {
        (0..self.len)
            .into_par_iter()
            .map_init(
                || IndexSet::new(self.n),
                |buf, i| {
                    self.query(i, buf);
                    answer(i, buf)
                },
            )
            .collect()
    }
}
