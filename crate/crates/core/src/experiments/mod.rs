//! Experiment harness: the query-count and sketch-size sweeps and the per-seed theorem checks.
//!
//! Every run is a pure function of its [`ExperimentSpec`]; per-seed randomness is split
//! into independent streams for the ground-set keys, the sketch seed and the attacker.

pub mod svg;

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attacks::{
    adaptive_attack, adversarial_set, measure_bias_in, run_standard_attack, single_batch_attack, verify_mask,
    Direction, InverseEstimate,
};
use crate::error::{Error, Result};
use crate::estimators::{hll_config_from_epsilon, measure_error, EstimatorKind, ErrorReport};
use crate::hashing::{Key, Seed};
use crate::qr::{
    audit_correctness, default_component_size, default_delta, AuditBucket, QrPolicy, QrStrategy, QueryDistribution,
};
use crate::rank_domain::{partition_keys, GroundSet};
use crate::sketch::{Sketch, SketchConfig};
use svg::LineChart;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    QuerySweep,
    SizeSweep,
    StandardTheorem,
    SymmetricTheorem,
    AdaptiveTheorem,
    EstimatorNrmse,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Svg,
    #[default]
    Both,
}

impl OutputFormat {
    fn csv(self) -> bool {
        self != OutputFormat::Svg
    }

    fn svg(self) -> bool {
        self != OutputFormat::Csv
    }
}

/// Parameters of one experiment. Fields left unset take the experiment's defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    /// HLL target error; the register count is derived from it.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub k: Option<usize>,
    /// Several sketch sizes (size sweep).
    #[serde(default)]
    pub k_schedule: Option<Vec<usize>>,
    #[serde(default)]
    pub n: Option<usize>,
    /// Query counts. A sweep runs them all, other experiments use the first.
    #[serde(default)]
    pub r: Option<Vec<usize>>,
    pub seeds: Vec<u64>,
    /// Mixed into every per-seed stream.
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_string_length")]
    pub string_length: usize,
    /// Fraction of the ground set in the adversarial prefix (standard theorem).
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Monte Carlo trials (estimator error, audits).
    #[serde(default)]
    pub trials: Option<usize>,
    /// Set size for the estimator error experiment.
    #[serde(default)]
    pub cardinality: Option<usize>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

fn default_string_length() -> usize {
    10
}

fn default_alpha() -> f64 {
    0.1
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentSpec {
    /// The parameters used by the acceptance runs.
    pub fn defaults(experiment: Experiment) -> Self {
        let mut s = ExperimentSpec {
            experiment,
            epsilon: None,
            k: None,
            k_schedule: None,
            n: None,
            r: None,
            seeds: vec![0],
            base_seed: 0,
            string_length: default_string_length(),
            alpha: default_alpha(),
            trials: None,
            cardinality: None,
            out: default_out(),
            format: OutputFormat::Both,
        };
        match experiment {
            Experiment::QuerySweep => {
                s.epsilon = Some(0.1);
                s.n = Some(5000);
                s.r = Some((0..8).map(|i| 4usize.pow(i)).collect());
            }
            Experiment::SizeSweep => s.k_schedule = Some((6..12).map(|i| 1usize << i).collect()),
            Experiment::StandardTheorem => {
                s.k = Some(64);
                s.seeds = (0..10).collect();
            }
            Experiment::SymmetricTheorem | Experiment::AdaptiveTheorem => {
                s.k = Some(16);
                s.n = Some(4096);
                s.seeds = (0..10).collect();
            }
            Experiment::EstimatorNrmse => {
                s.k = Some(64);
                s.cardinality = Some(10_000);
                s.trials = Some(2000);
            }
        }
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: ExperimentSpec = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let set = [self.epsilon.is_some(), self.k.is_some(), self.k_schedule.is_some()];
        if set.iter().filter(|&&b| b).count() != 1 {
            return Err(Error::InvalidConfig("exactly one of epsilon, k and k_schedule must be set".into()));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::InvalidConfig(format!("epsilon must be in (0, 1], got {e}")));
            }
        }
        let positive = self.k.is_none_or(|k| k > 0)
            && self.k_schedule.as_ref().is_none_or(|ks| !ks.is_empty() && ks.iter().all(|&k| k > 0))
            && self.n.is_none_or(|n| n > 0)
            && self.r.as_ref().is_none_or(|rs| !rs.is_empty() && rs.iter().all(|&r| r > 0))
            && self.trials.is_none_or(|t| t > 0)
            && self.cardinality.is_none_or(|c| c > 0)
            && self.string_length > 0;
        if !positive {
            return Err(Error::InvalidConfig("all sizes must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must be in (0, 1], got {}", self.alpha)));
        }
        Ok(())
    }

    /// Register count from `k` or `epsilon`.
    pub fn sketch_size(&self) -> Result<usize> {
        match (self.k, self.epsilon) {
            (Some(k), _) => Ok(k),
            (None, Some(e)) => Ok(hll_config_from_epsilon(e)?.k()),
            _ => Err(Error::InvalidConfig("experiment needs k or epsilon".into())),
        }
    }

    fn first_r(&self) -> Option<usize> {
        self.r.as_ref().and_then(|r| r.first().copied())
    }
}

/// Independent randomness of one seed.
pub struct Streams {
    pub keys: ChaCha8Rng,
    pub sketch: Seed,
    pub attack: ChaCha8Rng,
}

pub fn streams(base: u64, seed: u64) -> Streams {
    let root = Seed::from(base).derive(seed);
    Streams {
        keys: ChaCha8Rng::seed_from_u64(root.derive(0).0 as u64),
        sketch: root.derive(1),
        attack: ChaCha8Rng::seed_from_u64(root.derive(2).0 as u64),
    }
}

/// `n` distinct random lowercase strings of length `len`.
///
/// Rejects lengths with `26^len < n^2`, below which collisions stop being rare.
pub fn generate_ground_set<R: Rng + ?Sized>(n: usize, len: usize, rng: &mut R) -> Result<Vec<Key>> {
    if n == 0 {
        return Err(Error::InvalidParameter("ground set must be nonempty".into()));
    }
    if (len as f64) * 26f64.ln() < 2.0 * (n as f64).ln() {
        return Err(Error::InvalidParameter(format!(
            "strings of length {len} are too short for {n} distinct keys"
        )));
    }
    let mut seen = HashSet::with_capacity(n);
    let mut keys = Vec::with_capacity(n);
    while keys.len() < n {
        let s: Vec<u8> = (0..len).map(|_| b'a' + rng.random_range(0..26u8)).collect();
        if seen.insert(s.clone()) {
            keys.push(Key::new(s));
        }
    }
    Ok(keys)
}

/// Random ground set for one seed.
pub fn seeded_ground(spec: &ExperimentSpec, config: SketchConfig, n: usize, seed: u64) -> Result<(GroundSet, ChaCha8Rng)> {
    let mut st = streams(spec.base_seed, seed);
    let keys = generate_ground_set(n, spec.string_length, &mut st.keys)?;
    Ok((GroundSet::new(keys, config, st.sketch)?, st.attack))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub seed: u64,
    pub k: usize,
    pub n: usize,
    pub r: usize,
    pub direction: Direction,
    pub prefix_size: usize,
    pub true_size: usize,
    pub estimate: f64,
    pub ratio: f64,
}

/// 50 evenly spaced prefix sizes from `k` to `n`.
pub fn prefix_grid(k: usize, n: usize) -> Vec<usize> {
    let lo = k.min(n);
    (0..50).map(|j| lo + ((n - lo) as f64 * j as f64 / 49.0).round() as usize).collect()
}

/// Estimates of every prefix of `order` whose size is in `grid`.
pub fn prefix_estimates(ground: &GroundSet, order: &[u32], grid: &[usize]) -> Result<Vec<f64>> {
    let mut sketch = Sketch::empty(*ground.config(), ground.seed());
    let mut out = Vec::with_capacity(grid.len());
    let mut added = 0;
    for &m in grid {
        while added < m {
            sketch.insert_digest(ground.digest(order[added]));
            added += 1;
        }
        out.push(crate::estimators::default_estimate(&sketch)?.value);
    }
    Ok(out)
}

fn curve(ground: &GroundSet, result: &crate::attacks::AttackResult, direction: Direction, seed: u64, r: usize) -> Result<Vec<CurvePoint>> {
    let n = ground.len();
    let mut order: Vec<u32> = result.ordering.iter().map(|s| s.index).collect();
    if direction == Direction::Suffix {
        order.reverse();
    }
    let grid = prefix_grid(ground.k(), n);
    let est = prefix_estimates(ground, &order, &grid)?;
    Ok(grid
        .iter()
        .zip(est)
        .map(|(&m, e)| CurvePoint {
            seed,
            k: ground.k(),
            n,
            r,
            direction,
            prefix_size: m,
            true_size: m,
            estimate: e,
            ratio: e / m as f64,
        })
        .collect())
}

#[derive(Clone, Debug, Default)]
pub struct SweepOutput {
    pub ascending: Vec<CurvePoint>,
    pub descending: Vec<CurvePoint>,
}

/// Standard attack against HLL for every query count, one ground set per seed.
pub fn run_query_sweep(spec: &ExperimentSpec) -> Result<SweepOutput> {
    spec.validate()?;
    let config = match (spec.epsilon, spec.k) {
        (Some(e), _) => hll_config_from_epsilon(e)?,
        (None, Some(k)) => SketchConfig::hll(k)?,
        _ => return Err(Error::InvalidConfig("query sweep needs epsilon or k".into())),
    };
    let n = spec.n.unwrap_or(5000);
    let rs = spec.r.clone().unwrap_or_else(|| (0..8).map(|i| 4usize.pow(i)).collect());
    let mut out = SweepOutput::default();
    for &seed in &spec.seeds {
        let (ground, mut rng) = seeded_ground(spec, config, n, seed)?;
        for &r in &rs {
            let res = run_standard_attack(&InverseEstimate, &ground, r, &mut rng)?;
            out.ascending.extend(curve(&ground, &res, Direction::Prefix, seed, r)?);
            out.descending.extend(curve(&ground, &res, Direction::Suffix, seed, r)?);
        }
    }
    Ok(out)
}

/// Ground set size for sketch size `k` in the size sweep: `10 * 10^ceil(log10 k)`.
pub fn size_sweep_n(k: usize) -> usize {
    let mut p = 1usize;
    while p < k {
        p *= 10;
    }
    10 * p
}

/// Standard attack against HLL with `k` registers on `10 * 10^ceil(log10 k)` keys using
/// `4k` queries; ascending-score prefix curves.
pub fn run_size_sweep(spec: &ExperimentSpec) -> Result<Vec<CurvePoint>> {
    spec.validate()?;
    let ks = match (&spec.k_schedule, spec.k) {
        (Some(ks), _) => ks.clone(),
        (None, Some(k)) => vec![k],
        _ => return Err(Error::InvalidConfig("size sweep needs k or k_schedule".into())),
    };
    let mut out = Vec::new();
    for &seed in &spec.seeds {
        for &k in &ks {
            let n = spec.n.unwrap_or_else(|| size_sweep_n(k));
            let r = spec.first_r().unwrap_or(4 * k);
            let (ground, mut rng) = seeded_ground(spec, SketchConfig::hll(k)?, n, seed)?;
            let res = run_standard_attack(&InverseEstimate, &ground, r, &mut rng)?;
            out.extend(curve(&ground, &res, Direction::Prefix, seed, r)?);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StandardRow {
    pub seed: u64,
    pub k: usize,
    pub n: usize,
    pub r: usize,
    pub alpha: f64,
    pub prefix_size: usize,
    pub estimate: f64,
    pub ratio: f64,
    pub beta: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetricRow {
    pub seed: u64,
    pub k: usize,
    pub n: usize,
    pub r: usize,
    pub threshold: f64,
    pub mask_size: usize,
    pub mask_fraction: f64,
    pub sketch_equal: bool,
    pub masking_degree: f64,
    pub transparent_in_mask: usize,
    pub n0_star_in_mask: usize,
    pub pass: bool,
    pub component_size: usize,
    pub component_mask_size: usize,
    /// Registers outside the component where `S(M)` and `S(N)` differ.
    pub component_out_differing: usize,
    pub component_pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdaptiveRow {
    pub seed: u64,
    pub k: usize,
    pub n: usize,
    pub r: usize,
    pub failed_at: Option<usize>,
    pub mask_size: usize,
    pub sketch_equal: bool,
    pub audit_worst: f64,
    pub audit_limit: f64,
    pub transparent_in_mask: usize,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub enum TheoremRows {
    Standard(Vec<StandardRow>),
    Symmetric(Vec<SymmetricRow>),
    Adaptive(Vec<AdaptiveRow>),
}

#[derive(Clone, Debug)]
pub struct TheoremReport {
    pub experiment: Experiment,
    pub rows: TheoremRows,
    pub seeds: usize,
    pub passes: usize,
    /// Extra condition that must hold in every run (no transparent key in a mask).
    pub all_clean: bool,
    pub pass: bool,
}

impl TheoremReport {
    fn new(experiment: Experiment, rows: TheoremRows, seeds: usize, passes: usize, all_clean: bool) -> Self {
        let pass = 10 * passes >= 9 * seeds && all_clean;
        TheoremReport {
            experiment,
            rows,
            seeds,
            passes,
            all_clean,
            pass,
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        match &self.rows {
            TheoremRows::Standard(r) => r.iter().try_for_each(|x| w.serialize(x))?,
            TheoremRows::Symmetric(r) => r.iter().try_for_each(|x| w.serialize(x))?,
            TheoremRows::Adaptive(r) => r.iter().try_for_each(|x| w.serialize(x))?,
        }
        w.flush()?;
        Ok(())
    }
}

/// Keys with no realistic chance of entering a sketch during an attack with `r` queries:
/// outside the first `ln(r^2)/q_max` ranks of every table, `q_max` the largest sampling rate.
fn transparent_check(ground: &GroundSet, r: usize, a: f64) -> Result<crate::rank_domain::KeyPartition> {
    let q_max = (4.0 * a / ground.len() as f64).min(0.5);
    let r = r.max(2) as f64;
    partition_keys(ground, q_max, 1.0 / (r * r))
}

/// Runs the theorem-level check selected by `spec.experiment` over every seed.
pub fn run_theorem_checks(spec: &ExperimentSpec) -> Result<TheoremReport> {
    spec.validate()?;
    let k = spec.sketch_size()?;
    let seeds = spec.seeds.len();
    match spec.experiment {
        Experiment::StandardTheorem => {
            let alpha = spec.alpha;
            let r = spec.first_r().unwrap_or((8.0 * k as f64 / (alpha * alpha)).ceil() as usize);
            let n = spec.n.unwrap_or(16 * k * ((k as f64 * r as f64).ln().ceil() as usize));
            let mut rows = Vec::new();
            for &seed in &spec.seeds {
                let (ground, mut rng) = seeded_ground(spec, SketchConfig::kmins(k)?, n, seed)?;
                let res = run_standard_attack(&InverseEstimate, &ground, r, &mut rng)?;
                let prefix = adversarial_set(&res, alpha, Direction::Prefix)?;
                let b = measure_bias_in(&ground, &prefix)?;
                rows.push(StandardRow {
                    seed,
                    k,
                    n,
                    r,
                    alpha,
                    prefix_size: prefix.len(),
                    estimate: b.estimate,
                    ratio: b.ratio,
                    beta: b.beta,
                    pass: b.ratio >= 3.0,
                });
            }
            let passes = rows.iter().filter(|r| r.pass).count();
            Ok(TheoremReport::new(spec.experiment, TheoremRows::Standard(rows), seeds, passes, true))
        }
        Experiment::SymmetricTheorem => {
            let n = spec.n.unwrap_or(4096);
            let r = spec.first_r().unwrap_or(symmetric_budget(k, n));
            let a = n as f64 / 16.0;
            let trials = spec.trials.unwrap_or(500);
            let mut rows = Vec::new();
            for &seed in &spec.seeds {
                let (ground, mut rng) = seeded_ground(spec, SketchConfig::kmins(k)?, n, seed)?;
                let part = transparent_check(&ground, r, a)?;
                let qr = QrPolicy::symmetric(a, k)?;
                let res = single_batch_attack(&qr, &ground, r, &mut rng);
                let mask = res.mask.unwrap_or_else(|| crate::attacks::Mask::new(n));
                let v = verify_mask(&mask, &ground, a, trials, &mut rng);
                let star: HashSet<u32> = part.n0_star.iter().copied().collect();

                let kp = default_component_size(r, default_delta(k)).min(k);
                let cqr = QrPolicy::random_component(a, k, kp, &mut rng)?;
                let QrStrategy::ComponentRestricted { component } = cqr.strategy().clone() else {
                    unreachable!()
                };
                let cres = single_batch_attack(&cqr, &ground, r, &mut rng);
                let cmask = cres.mask.unwrap_or_else(|| crate::attacks::Mask::new(n));
                let cv = verify_mask(&cmask, &ground, a, 1, &mut rng);
                let out_diff = cv.differing_registers.iter().filter(|i| !component.contains(i)).count();

                rows.push(SymmetricRow {
                    seed,
                    k,
                    n,
                    r,
                    threshold: crate::attacks::chernoff_threshold(r, n, r),
                    mask_size: mask.len(),
                    mask_fraction: v.fraction,
                    sketch_equal: v.sketch_equal,
                    masking_degree: v.masking_degree,
                    transparent_in_mask: mask.indices().iter().filter(|&&x| !part.is_low_rank(x)).count(),
                    n0_star_in_mask: mask.indices().iter().filter(|x| star.contains(x)).count(),
                    pass: v.sketch_equal && v.fraction <= spec.alpha,
                    component_size: kp,
                    component_mask_size: cmask.len(),
                    component_out_differing: out_diff,
                    component_pass: out_diff > 0,
                });
            }
            let passes = rows.iter().filter(|r| r.pass).count();
            Ok(TheoremReport::new(spec.experiment, TheoremRows::Symmetric(rows), seeds, passes, true))
        }
        Experiment::AdaptiveTheorem => {
            let n = spec.n.unwrap_or(4096);
            let r = spec.first_r().unwrap_or(symmetric_budget(k, n));
            let a = n as f64 / 16.0;
            let trials = spec.trials.unwrap_or(2000);
            let mut rows = Vec::new();
            for &seed in &spec.seeds {
                let (ground, mut rng) = seeded_ground(spec, SketchConfig::kmins(k)?, n, seed)?;
                let part = transparent_check(&ground, r, a)?;
                let qr = QrPolicy::reference(a, k)?;
                let res = adaptive_attack(&qr, &ground, r, &mut rng);
                let mask = res.mask.unwrap_or_else(|| crate::attacks::Mask::new(n));
                let audit = audit_correctness(&qr, &ground, &QueryDistribution::attack(a).with_mask(&mask), trials, &mut rng);
                let limit = 3.0 * qr.delta();
                rows.push(AdaptiveRow {
                    seed,
                    k,
                    n,
                    r,
                    failed_at: res.failed_at,
                    mask_size: mask.len(),
                    sketch_equal: ground.sketch_of(mask.members()) == ground.sketch_of_all(),
                    audit_worst: audit.worst(),
                    audit_limit: limit,
                    transparent_in_mask: mask.indices().iter().filter(|&&x| !part.is_low_rank(x)).count(),
                    pass: res.failed_at.is_some() || audit.worst() > limit,
                });
            }
            let passes = rows.iter().filter(|r| r.pass).count();
            let clean = rows.iter().all(|r| r.transparent_in_mask == 0);
            Ok(TheoremReport::new(spec.experiment, TheoremRows::Adaptive(rows), seeds, passes, clean))
        }
        other => Err(Error::InvalidConfig(format!("{other:?} is not a theorem check"))),
    }
}

/// Query budget `ceil(8 k^2 ln n)` of the masking attacks.
pub fn symmetric_budget(k: usize, n: usize) -> usize {
    (8.0 * (k * k) as f64 * (n as f64).ln()).ceil() as usize
}

/// Estimator error of k-mins, bottom-k and HLL sketches with `k` registers.
pub fn run_nrmse(spec: &ExperimentSpec) -> Result<Vec<ErrorReport>> {
    spec.validate()?;
    let k = spec.sketch_size()?;
    let cardinality = spec.cardinality.unwrap_or(10_000);
    let trials = spec.trials.unwrap_or(2000);
    let mut out = Vec::new();
    for &seed in &spec.seeds {
        let base = streams(spec.base_seed, seed).sketch;
        for (config, kind) in [
            (SketchConfig::kmins(k)?, EstimatorKind::StandardKMins),
            (SketchConfig::bottom_k(k)?, EstimatorKind::StandardBottomK),
            (SketchConfig::hll(k)?, EstimatorKind::HllHybrid),
        ] {
            out.push(measure_error(config, kind, cardinality, trials, base)?);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditRow {
    pub seed: u64,
    pub strategy: &'static str,
    pub k: usize,
    pub n: usize,
    pub a: f64,
    pub bucket_lo: usize,
    pub bucket_hi: usize,
    pub samples: usize,
    pub errors: usize,
    pub rate: f64,
    pub std_error: f64,
}

/// Correctness audit of the reference and symmetric responders on the non-adaptive
/// attack distribution. Returns rows and whether every worst rate stayed within
/// `delta` plus two binomial standard errors.
pub fn run_audit(spec: &ExperimentSpec) -> Result<(Vec<AuditRow>, bool)> {
    spec.validate()?;
    let k = spec.sketch_size()?;
    let n = spec.n.unwrap_or(10_000);
    let a = n as f64 / 16.0;
    let trials = spec.trials.unwrap_or(10_000);
    let mut rows = Vec::new();
    let mut ok = true;
    for &seed in &spec.seeds {
        let (ground, mut rng) = seeded_ground(spec, SketchConfig::kmins(k)?, n, seed)?;
        for (name, qr) in [("reference", QrPolicy::reference(a, k)?), ("symmetric", QrPolicy::symmetric(a, k)?)] {
            let audit = audit_correctness(&qr, &ground, &QueryDistribution::attack(a), trials, &mut rng);
            let within = |b: &AuditBucket| b.rate <= qr.delta() + 2.0 * (qr.delta() * (1.0 - qr.delta()) / b.samples as f64).sqrt();
            let edge = |b: &AuditBucket| ((b.lo + audit.bucket_width) as f64) <= a || (b.lo as f64) > 2.0 * a;
            for b in &audit.buckets {
                if b.samples >= crate::qr::MIN_BUCKET_SAMPLES && edge(b) && !within(b) {
                    ok = false;
                }
                rows.push(AuditRow {
                    seed,
                    strategy: name,
                    k,
                    n,
                    a,
                    bucket_lo: b.lo,
                    bucket_hi: b.lo + audit.bucket_width,
                    samples: b.samples,
                    errors: b.errors,
                    rate: b.rate,
                    std_error: b.std_error,
                });
            }
        }
    }
    Ok((rows, ok))
}

/// Writes serializable rows as CSV to `path`, creating parent directories.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Ratio-versus-prefix chart, one series per `(seed, k, r)`.
pub fn curve_chart(title: &str, points: &[CurvePoint]) -> LineChart {
    let mut chart = LineChart::new(title, "prefix size", "estimate / true size");
    chart.reference_y = Some(1.0);
    let mut keys: Vec<(u64, usize, usize)> = points.iter().map(|p| (p.seed, p.k, p.r)).collect();
    keys.dedup();
    let multi_seed = points.iter().any(|p| p.seed != points[0].seed);
    for (seed, k, r) in keys {
        let pts = points
            .iter()
            .filter(|p| (p.seed, p.k, p.r) == (seed, k, r))
            .map(|p| (p.prefix_size as f64, p.ratio))
            .collect();
        let label = if multi_seed { format!("k={k} r={r} s={seed}") } else { format!("k={k} r={r}") };
        chart.add_series(label, pts);
    }
    chart
}

/// Writes a curve family as `<stem>.csv` and/or `<stem>.svg` under `dir`.
pub fn write_curves(dir: &Path, stem: &str, title: &str, points: &[CurvePoint], format: OutputFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if format.csv() {
        let p = dir.join(format!("{stem}.csv"));
        write_rows(&p, points)?;
        written.push(p);
    }
    if format.svg() {
        let p = dir.join(format!("{stem}.svg"));
        fs::write(&p, curve_chart(title, points).render())?;
        written.push(p);
    }
    Ok(written)
}
