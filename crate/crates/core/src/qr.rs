//! Query responders for the soft-threshold problem: answer 0 when `|U| <= A`, 1 when
//! `|U| >= 2A`, anything in between.
//!
//! A responder sees the sketch of each query through an [`Observation`] of the ground
//! set, which carries both the register values (via the determining keys) and the
//! rank-domain sketch.

use std::io::Write;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::attacks::{sample_rate, Mask};
use crate::error::{Error, Result};
use crate::estimators::{default_estimate, hll_alpha};
use crate::rank_domain::{GroundSet, Observation};
use crate::sketch::{Registers, SketchKind};
use crate::subset::{sample_bernoulli_into, IndexSet};

const ABSENT: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum QrStrategy {
    /// Cardinality estimate compared against `sqrt(2) A`. With a mask, only unmasked
    /// registers feed the estimate and the mask size is added back.
    ReferenceThreshold,
    /// `sum Y <= k n / (sqrt(2) A)` on the rank sketch.
    SymmetricThreshold,
    /// The symmetric rule restricted to a fixed set of registers.
    ComponentRestricted { component: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QrPolicy {
    a: f64,
    k: usize,
    delta: f64,
    strategy: QrStrategy,
    failure_threshold: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QrResponse {
    /// `None` exactly when the responder failed.
    pub z: Option<bool>,
    pub failed: bool,
    pub effective_k: usize,
    /// The quantity the map thresholds: an estimate for the reference map, `sum Y` otherwise.
    pub statistic: f64,
}

/// Anything that answers soft-threshold queries. [`QrPolicy`] is the main implementation;
/// the trait lets audits and attacks run against ad-hoc responders too.
pub trait Responder {
    fn respond(&self, ground: &GroundSet, obs: &Observation, mask: Option<&Mask>, rng: &mut dyn RngCore) -> QrResponse;

    /// Soft-threshold parameter `A`.
    fn threshold_a(&self) -> f64;
}

pub fn default_delta(k: usize) -> f64 {
    0.5 / (k as f64).sqrt()
}

pub fn default_failure_threshold(k: usize) -> f64 {
    (k as f64).log2() / 2.0
}

/// Size of the restricted component for a budget of `r` queries.
pub fn default_component_size(r: usize, delta: f64) -> usize {
    ((r.max(1) as f64 / delta).ln().ceil() as usize).max(1)
}

impl QrPolicy {
    pub fn new(a: f64, k: usize, strategy: QrStrategy) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!("threshold A must be positive, got {a}")));
        }
        if k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        if let QrStrategy::ComponentRestricted { component } = &strategy {
            let mut c = component.clone();
            c.sort_unstable();
            c.dedup();
            if c.is_empty() || c.len() != component.len() || c.len() > k || c[c.len() - 1] >= k {
                return Err(Error::InvalidParameter(format!(
                    "component must be distinct register indices below k = {k}"
                )));
            }
        }
        Ok(QrPolicy {
            a,
            k,
            delta: default_delta(k),
            strategy,
            failure_threshold: default_failure_threshold(k),
        })
    }

    pub fn reference(a: f64, k: usize) -> Result<Self> {
        QrPolicy::new(a, k, QrStrategy::ReferenceThreshold)
    }

    pub fn symmetric(a: f64, k: usize) -> Result<Self> {
        QrPolicy::new(a, k, QrStrategy::SymmetricThreshold)
    }

    /// Component-restricted policy over `k_prime` registers drawn uniformly at random.
    pub fn random_component<R: Rng + ?Sized>(a: f64, k: usize, k_prime: usize, rng: &mut R) -> Result<Self> {
        if k_prime == 0 || k_prime > k {
            return Err(Error::InvalidParameter(format!("component size {k_prime} not in 1..={k}")));
        }
        let mut component: Vec<usize> = rand::seq::index::sample(rng, k, k_prime).into_vec();
        component.sort_unstable();
        QrPolicy::new(a, k, QrStrategy::ComponentRestricted { component })
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 0.5) {
            return Err(Error::InvalidParameter(format!("delta must be in (0, 1/2), got {delta}")));
        }
        self.delta = delta;
        Ok(self)
    }

    pub fn with_failure_threshold(mut self, threshold: f64) -> Self {
        self.failure_threshold = threshold;
        self
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn strategy(&self) -> &QrStrategy {
        &self.strategy
    }

    pub fn failure_threshold(&self) -> f64 {
        self.failure_threshold
    }

    /// Threshold on `sum Y` used by the symmetric strategies, for `registers` coordinates.
    pub fn rank_threshold(&self, registers: usize, n: usize) -> f64 {
        registers as f64 * n as f64 / (std::f64::consts::SQRT_2 * self.a)
    }

    /// The symmetric rule on rank-sketch coordinates `y`: 1 iff `sum y <= |y| n / (sqrt(2) A)`.
    pub fn symmetric_probability(&self, y: &[u32], n: usize) -> f64 {
        let total: u64 = y.iter().map(|&v| v as u64).sum();
        bit(total as f64 <= self.rank_threshold(y.len(), n))
    }

    /// Probability of answering 1. Threshold maps only return 0 or 1.
    pub fn probability(&self, ground: &GroundSet, obs: &Observation, mask: Option<&Mask>) -> (f64, f64) {
        let n = ground.len();
        match &self.strategy {
            QrStrategy::ReferenceThreshold => {
                let size = reference_size_estimate(ground, obs, mask);
                (bit(size >= std::f64::consts::SQRT_2 * self.a), size)
            }
            QrStrategy::SymmetricThreshold => {
                let total = rank_total(ground, obs, None);
                (bit(total <= self.rank_threshold(self.k, n)), total)
            }
            QrStrategy::ComponentRestricted { component } => {
                let total = rank_total(ground, obs, Some(component));
                (bit(total <= self.rank_threshold(component.len(), n)), total)
            }
        }
    }

    /// Registers the responder still learns from under `mask`.
    pub fn effective_k(&self, ground: &GroundSet, obs: &Observation, mask: Option<&Mask>) -> usize {
        match (&self.strategy, mask) {
            (_, None) => match &self.strategy {
                QrStrategy::ComponentRestricted { component } => component.len(),
                _ => self.k,
            },
            (QrStrategy::ComponentRestricted { component }, Some(m)) => match obs.kind() {
                SketchKind::BottomK => {
                    let c = component.len();
                    obs.keys.iter().take(c).filter(|&&x| x != ABSENT && !m.contains(x)).count()
                }
                _ => component
                    .iter()
                    .filter(|&&i| obs.keys[i] != ABSENT && !m.contains(obs.keys[i]))
                    .count(),
            },
            (_, Some(m)) => effective_registers(ground, obs, m),
        }
    }
}

fn bit(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl Responder for QrPolicy {
    fn respond(&self, ground: &GroundSet, obs: &Observation, mask: Option<&Mask>, rng: &mut dyn RngCore) -> QrResponse {
        let effective_k = self.effective_k(ground, obs, mask);
        let (p, statistic) = self.probability(ground, obs, mask);
        if (effective_k as f64) < self.failure_threshold {
            return QrResponse {
                z: None,
                failed: true,
                effective_k,
                statistic,
            };
        }
        let z = if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            rng.random::<f64>() < p
        };
        QrResponse {
            z: Some(z),
            failed: false,
            effective_k,
            statistic,
        }
    }

    fn threshold_a(&self) -> f64 {
        self.a
    }
}

/// Number of registers of the union sketch that are determined by a key outside `mask`.
///
/// k-mins and k-partition count registers whose minimum comes from a non-mask key;
/// bottom-k counts non-mask keys among the bottom `k`.
pub fn effective_registers(ground: &GroundSet, obs: &Observation, mask: &Mask) -> usize {
    let _ = ground;
    obs.keys.iter().filter(|&&x| x != ABSENT && !mask.contains(x)).count()
}

/// Estimate of `|M ∪ U|` as `|M|` plus an estimate of `|U \ M|`.
///
/// Registers held by a mask key censor the minimum of `U \ M` at the register value, so
/// the estimate is `(k' - 1) / T` with `k'` the unmasked registers and `T` the usual
/// statistic of the whole union sketch. Without a mask this is the standard estimator.
fn reference_size_estimate(ground: &GroundSet, obs: &Observation, mask: Option<&Mask>) -> f64 {
    let sketch = ground.sketch_from_observation(obs);
    let Some(m) = mask.filter(|m| !m.is_empty()) else {
        return default_estimate(&sketch).map(|e| e.value).unwrap_or(0.0);
    };
    let k = ground.k() as f64;
    let kp = effective_registers(ground, obs, m);
    let rest = match sketch.registers() {
        Registers::Minima(v) => {
            let scale = if ground.config().kind() == SketchKind::KPartition { k } else { 1.0 };
            censored_estimate(kp, v.iter().sum(), scale)
        }
        Registers::Bottom(v) if v.len() < ground.k() => kp as f64,
        Registers::Bottom(v) => censored_estimate(kp, v[v.len() - 1], 1.0),
        Registers::Exponents(v) => {
            let indicator: f64 = v.iter().map(|&e| (-(e as f64)).exp2()).sum();
            hll_alpha(ground.k()) * k * kp as f64 / indicator
        }
    };
    m.len() as f64 + rest
}

// (k'-1)/t, times `scale`
fn censored_estimate(kp: usize, t: f64, scale: f64) -> f64 {
    if kp < 2 || !t.is_finite() || t <= 0.0 {
        0.0
    } else {
        scale * (kp - 1) as f64 / t
    }
}

/// `sum Y` over all registers or over `component`. A register with no member counts as
/// one past the end of its table.
fn rank_total(ground: &GroundSet, obs: &Observation, component: Option<&[usize]>) -> f64 {
    let n = ground.len() as u64;
    match obs.kind() {
        SketchKind::BottomK => {
            // sum of the first c gaps is the absolute rank of the c-th bottom key
            let c = component.map_or(ground.k(), |c| c.len());
            obs.ranks.get(c - 1).map_or(n + 1, |&r| r as u64) as f64
        }
        _ => {
            let y = |i: usize| match obs.ranks[i] {
                0 => ground.tables()[i].len() as u64 + 1,
                r => r as u64,
            };
            match component {
                Some(c) => c.iter().map(|&i| y(i)).sum::<u64>() as f64,
                None => (0..obs.ranks.len()).map(y).sum::<u64>() as f64,
            }
        }
    }
}

/// Error statistics of a responder over `|M ∪ U|` buckets.
#[derive(Clone, Debug, Serialize)]
pub struct CorrectnessAudit {
    pub trials: usize,
    pub failures: usize,
    pub bucket_width: usize,
    pub buckets: Vec<AuditBucket>,
    /// Largest error rate over buckets entirely below `A`.
    pub worst_low: f64,
    /// Largest error rate over buckets entirely above `2A`.
    pub worst_high: f64,
    /// Pooled error rate over all queries with `c < A`.
    pub pooled_low: f64,
    /// Pooled error rate over all queries with `c > 2A`.
    pub pooled_high: f64,
    pub low_samples: usize,
    pub high_samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditBucket {
    /// Cardinalities `lo..lo + width`.
    pub lo: usize,
    pub samples: usize,
    pub errors: usize,
    pub rate: f64,
    /// Binomial standard error of `rate`.
    pub std_error: f64,
}

impl CorrectnessAudit {
    /// Largest error over both sides.
    pub fn worst(&self) -> f64 {
        self.worst_low.max(self.worst_high)
    }
}

/// The query distribution of the attacks: rate from [`sample_rate`] with threshold `A`,
/// Bernoulli subset of the ground set, optionally united with a mask.
#[derive(Clone, Copy, Debug)]
pub struct QueryDistribution<'a> {
    pub a: f64,
    pub mask: Option<&'a Mask>,
    /// Fixed rate instead of [`sample_rate`], for audits at chosen cardinalities.
    pub fixed_rate: Option<f64>,
}

impl<'a> QueryDistribution<'a> {
    pub fn attack(a: f64) -> Self {
        QueryDistribution {
            a,
            mask: None,
            fixed_rate: None,
        }
    }

    pub fn with_mask(self, mask: &'a Mask) -> Self {
        QueryDistribution { mask: Some(mask), ..self }
    }

    pub fn with_rate(self, q: f64) -> Self {
        QueryDistribution {
            fixed_rate: Some(q),
            ..self
        }
    }

    /// Draws one query into `buf` and returns its size `|M ∪ U|`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, buf: &mut IndexSet, rng: &mut R) -> usize {
        let q = self.fixed_rate.unwrap_or_else(|| sample_rate(self.a, n, rng));
        sample_bernoulli_into(buf, q, rng);
        match self.mask {
            Some(m) => buf.len() + m.indices().iter().filter(|&&x| !buf.contains(x)).count(),
            None => buf.len(),
        }
    }
}

/// Minimum samples for a bucket to count towards the worst rates.
pub const MIN_BUCKET_SAMPLES: usize = 30;

/// Monte Carlo correctness audit: errors are answers of 1 below `A` and of 0 above `2A`.
pub fn audit_correctness<P, R>(
    responder: &P,
    ground: &GroundSet,
    dist: &QueryDistribution<'_>,
    trials: usize,
    rng: &mut R,
) -> CorrectnessAudit
where
    P: Responder + ?Sized,
    R: Rng,
{
    let n = ground.len();
    let a = responder.threshold_a();
    let width = ((a / 8.0).round() as usize).max(1);
    let mut buf = IndexSet::new(n);
    let mut tally: std::collections::BTreeMap<usize, (usize, usize)> = Default::default();
    let (mut failures, mut low, mut low_err, mut high, mut high_err) = (0, 0, 0, 0, 0);
    for _ in 0..trials {
        let c = dist.sample(n, &mut buf, rng);
        let obs = match dist.mask {
            Some(m) => ground.observe(|x| buf.contains(x) || m.contains(x)),
            None => ground.observe_set(&buf),
        };
        let resp = responder.respond(ground, &obs, dist.mask, rng);
        let Some(z) = resp.z else {
            failures += 1;
            continue;
        };
        let cf = c as f64;
        let err = (cf < a && z) || (cf > 2.0 * a && !z);
        if cf < a {
            low += 1;
            low_err += err as usize;
        } else if cf > 2.0 * a {
            high += 1;
            high_err += err as usize;
        }
        let e = tally.entry(c / width * width).or_default();
        e.0 += 1;
        e.1 += err as usize;
    }
    let buckets: Vec<AuditBucket> = tally
        .into_iter()
        .map(|(lo, (samples, errors))| {
            let rate = errors as f64 / samples as f64;
            AuditBucket {
                lo,
                samples,
                errors,
                rate,
                std_error: (rate * (1.0 - rate) / samples as f64).sqrt(),
            }
        })
        .collect();
    let worst = |pred: &dyn Fn(&AuditBucket) -> bool| {
        buckets
            .iter()
            .filter(|b| b.samples >= MIN_BUCKET_SAMPLES && pred(b))
            .map(|b| b.rate)
            .fold(0.0, f64::max)
    };
    let worst_low = worst(&|b| ((b.lo + width) as f64) <= a);
    let worst_high = worst(&|b| (b.lo as f64) > 2.0 * a);
    let ratio = |e: usize, s: usize| if s == 0 { 0.0 } else { e as f64 / s as f64 };
    CorrectnessAudit {
        trials,
        failures,
        bucket_width: width,
        buckets,
        worst_low,
        worst_high,
        pooled_low: ratio(low_err, low),
        pooled_high: ratio(high_err, high),
        low_samples: low,
        high_samples: high,
    }
}

/// Best achievable `max(low error, high error)` over maps `z = [stat >= t]` or
/// `z = [stat <= t]`, given statistic samples at a small and a large cardinality.
pub fn best_threshold_error(low: &[f64], high: &[f64]) -> f64 {
    let mut lo = low.to_vec();
    let mut hi = high.to_vec();
    lo.sort_by(f64::total_cmp);
    hi.sort_by(f64::total_cmp);
    let mut cuts: Vec<f64> = lo.iter().chain(&hi).copied().collect();
    cuts.push(f64::INFINITY);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let frac_below = |v: &[f64], t: f64| v.partition_point(|&x| x < t) as f64 / v.len().max(1) as f64;
    let mut best = 1.0f64;
    for &t in &cuts {
        let lb = frac_below(&lo, t);
        let hb = frac_below(&hi, t);
        // z = [stat >= t]: low errs above t, high errs below t
        best = best.min((1.0 - lb).max(hb));
        // z = [stat < t]
        best = best.min(lb.max(1.0 - hb));
    }
    best
}

/// One line of an interaction transcript.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InteractionRecord {
    pub query_id: usize,
    pub query_size: usize,
    pub statistic: f64,
    pub z: Option<bool>,
    pub effective_k: usize,
}

pub fn write_interactions<W: Write>(records: &[InteractionRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["query_id", "query_size", "statistic", "z", "effective_k"])?;
    for r in records {
        w.write_record([
            r.query_id.to_string(),
            r.query_size.to_string(),
            r.statistic.to_string(),
            match r.z {
                Some(z) => (z as u8).to_string(),
                None => "fail".into(),
            },
            r.effective_k.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
