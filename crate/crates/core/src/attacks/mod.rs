//! Attacks on cardinality sketches.
//!
//! [`run_standard_attack`] targets the standard estimator, [`single_batch_attack`] and
//! [`adaptive_attack`] target soft-threshold query responders and build a [`Mask`].
//! The attacker only ever sees the ground set keys and responses, never the sketch seed.

mod batch;
mod mask;
mod masking;
mod rate;
mod standard;

use std::io::Write;

use serde::Serialize;

pub use batch::{QueryBatch, RatePlan};
pub use mask::Mask;
pub use masking::{adaptive_attack, chernoff_threshold, single_batch_attack, verify_mask, MaskReport};
pub use rate::sample_rate;
pub use standard::{
    adversarial_set, measure_bias, measure_bias_in, measure_bias_of_keys, run_standard_attack, BiasReport, Direction, InverseEstimate,
    StatisticOracle,
};

use crate::error::Result;

/// Per-key inclusion counts `t` and accumulated responses `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreBoard {
    pub t: Vec<u32>,
    pub c: Vec<f64>,
}

impl ScoreBoard {
    pub fn new(n: usize) -> Self {
        ScoreBoard {
            t: vec![0; n],
            c: vec![0.0; n],
        }
    }

    pub fn add(&mut self, x: u32, value: f64) {
        self.t[x as usize] += 1;
        self.c[x as usize] += value;
    }

    /// `c[x] / t[x]`, or `None` for a key never queried.
    pub fn average(&self, x: u32) -> Option<f64> {
        let t = self.t[x as usize];
        (t > 0).then(|| self.c[x as usize] / t as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScoredKey {
    pub index: u32,
    /// Average response, NaN for a key that was never queried.
    pub score: f64,
    pub count: u32,
}

/// One step of an attack. `response` is `T` for the standard attack, the bit for the
/// others, and NaN where the responder failed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TranscriptRow {
    pub step: usize,
    pub query_size: usize,
    pub rate: f64,
    pub response: f64,
    pub mask_size: usize,
    pub effective_k: usize,
    pub median_score: f64,
}

#[derive(Clone, Debug)]
pub struct AttackResult {
    /// Keys ordered by ascending average score (standard attack only).
    pub ordering: Vec<ScoredKey>,
    /// Final mask (single-batch and adaptive attacks).
    pub mask: Option<Mask>,
    pub scores: ScoreBoard,
    pub transcript: Vec<TranscriptRow>,
    /// First step (1-based) at which the responder reported failure.
    pub failed_at: Option<usize>,
    pub warnings: Vec<String>,
}

impl AttackResult {
    pub fn write_transcript<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "query_size", "rate", "z_or_t", "mask_size", "effective_k", "median_score"])?;
        for r in &self.transcript {
            w.write_record([
                r.step.to_string(),
                r.query_size.to_string(),
                r.rate.to_string(),
                r.response.to_string(),
                r.mask_size.to_string(),
                r.effective_k.to_string(),
                r.median_score.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Median of `values`, averaging the two middle elements for even lengths. Reorders `values`.
pub(crate) fn median_in_place(values: &mut [f64]) -> f64 {
    let len = values.len();
    if len == 0 {
        return f64::NAN;
    }
    let mid = len / 2;
    let (lower, m, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let m = *m;
    if len % 2 == 1 {
        m
    } else {
        let below = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (below + m) / 2.0
    }
}
