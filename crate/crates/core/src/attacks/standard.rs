use rand::Rng;
use serde::Serialize;

use super::batch::{QueryBatch, RatePlan};
use super::{AttackResult, ScoreBoard, ScoredKey, TranscriptRow};
use crate::error::{Error, Result};
use crate::estimators::{default_estimate, hll_alpha, statistic};
use crate::hashing::Seed;
use crate::rank_domain::GroundSet;
use crate::sketch::{RegisterRepr, Sketch, SketchConfig, SketchKind};
use crate::subset::IndexSet;

/// What the system reveals about each query in the standard attack.
pub trait StatisticOracle: Sync {
    fn statistic(&self, sketch: &Sketch) -> f64;
}

impl<F: Fn(&Sketch) -> f64 + Sync> StatisticOracle for F {
    fn statistic(&self, sketch: &Sketch) -> f64 {
        self(sketch)
    }
}

/// `T = 1 / estimate` with the estimator matching the sketch.
#[derive(Clone, Copy, Debug, Default)]
pub struct InverseEstimate;

impl StatisticOracle for InverseEstimate {
    fn statistic(&self, sketch: &Sketch) -> f64 {
        default_estimate(sketch).map_or(f64::INFINITY, |e| 1.0 / e.value)
    }
}

/// Scores every key by the average statistic of the queries containing it.
///
/// All `r` queries include each key with probability 1/2 and are committed before any
/// response is read. A low average marks keys whose presence pushes the estimate up.
pub fn run_standard_attack<O, R>(oracle: &O, ground: &GroundSet, r: usize, rng: &mut R) -> Result<AttackResult>
where
    O: StatisticOracle + ?Sized,
    R: Rng + ?Sized,
{
    if r == 0 {
        return Err(Error::InvalidParameter("attack needs at least one query".into()));
    }
    let n = ground.len();
    let batch = QueryBatch::commit(n, r, RatePlan::Fixed(0.5), rng);
    let responses = batch.evaluate(|_, u| oracle.statistic(&ground.sketch_from_observation(&ground.observe_set(u))));

    let mut scores = ScoreBoard::new(n);
    let mut transcript = Vec::with_capacity(r);
    let mut buf = IndexSet::new(n);
    for (i, &t) in responses.iter().enumerate() {
        let q = batch.query(i, &mut buf);
        for x in buf.iter() {
            scores.add(x, t);
        }
        transcript.push(TranscriptRow {
            step: i + 1,
            query_size: buf.len(),
            rate: q,
            response: t,
            mask_size: 0,
            effective_k: ground.k(),
            median_score: f64::NAN,
        });
    }

    let mut ordering: Vec<ScoredKey> = (0..n as u32)
        .map(|x| ScoredKey {
            index: x,
            score: scores.average(x).unwrap_or(f64::NAN),
            count: scores.t[x as usize],
        })
        .collect();
    ordering.sort_by(|a, b| {
        (a.count == 0)
            .cmp(&(b.count == 0))
            .then(if a.count == 0 { std::cmp::Ordering::Equal } else { a.score.total_cmp(&b.score) })
            .then_with(|| ground.key(a.index).cmp(ground.key(b.index)))
    });
    let unscored = ordering.iter().filter(|s| s.count == 0).count();
    let mut warnings = Vec::new();
    if unscored > 0 {
        warnings.push(format!("{unscored} keys were never queried and are ordered last"));
    }
    Ok(AttackResult {
        ordering,
        mask: None,
        scores,
        transcript,
        failed_at: None,
        warnings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    /// Lowest scores first.
    Prefix,
    /// Highest scores.
    Suffix,
}

/// The first or last `ceil(fraction n)` keys of the attack ordering.
pub fn adversarial_set(result: &AttackResult, fraction: f64, direction: Direction) -> Result<Vec<u32>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!("fraction must be in (0, 1], got {fraction}")));
    }
    let n = result.ordering.len();
    let m = ((fraction * n as f64).ceil() as usize).min(n);
    let keys = match direction {
        Direction::Prefix => &result.ordering[..m],
        Direction::Suffix => &result.ordering[n - m..],
    };
    Ok(keys.iter().map(|s| s.index).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BiasReport {
    pub size: usize,
    pub statistic: f64,
    /// Nominal statistic of a set of this size divided by the observed one.
    pub beta: f64,
    pub estimate: f64,
    /// `estimate / size`.
    pub ratio: f64,
}

/// Bias of a sketch over a set of known size: `beta = (k/|U|) / T`, with `k` replaced by
/// `k^2` for k-partition minima and `alpha k^2` for exponent registers, so `beta` is
/// about 1 for a random set.
pub fn measure_bias(sketch: &Sketch, size: usize) -> Result<BiasReport> {
    let t = statistic(sketch)?;
    let k = sketch.k() as f64;
    let c = sketch.config();
    let nominal = match (c.kind(), c.repr()) {
        (SketchKind::KPartition, RegisterRepr::Hll8BitExponent) => hll_alpha(sketch.k()) * k * k,
        (SketchKind::KPartition, RegisterRepr::FullPrecision) => k * k,
        _ => k,
    };
    let estimate = default_estimate(sketch)?.value;
    Ok(BiasReport {
        size,
        statistic: t,
        beta: nominal / size as f64 / t,
        estimate,
        ratio: estimate / size as f64,
    })
}

/// [`measure_bias`] of the sketch of `keys`, counting distinct keys.
pub fn measure_bias_of_keys<K: AsRef<[u8]>>(config: SketchConfig, seed: Seed, keys: &[K]) -> Result<BiasReport> {
    let distinct: std::collections::HashSet<&[u8]> = keys.iter().map(|k| k.as_ref()).collect();
    measure_bias(&Sketch::of_set(config, seed, distinct.iter()), distinct.len())
}

/// [`measure_bias`] of a subset of the ground set given by indices.
pub fn measure_bias_in(ground: &GroundSet, indices: &[u32]) -> Result<BiasReport> {
    let set = IndexSet::from_indices(ground.len(), indices.iter().copied());
    measure_bias(&ground.sketch_of(&set), set.len())
}
