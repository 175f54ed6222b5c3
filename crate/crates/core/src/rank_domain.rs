//! Rank-domain view of sketches over a fixed ground set.
//!
//! Once the ground set `N` is fixed, the sketch of any `U ⊆ N` is determined by the
//! ranks (within `N`, per hashmap or part) of the keys that realize its registers.
//! [`GroundSet`] precomputes the rank tables and answers sketch queries for subsets
//! by scanning them, which is what the attack experiments run on.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::hashing::{Key, KeyDigest, Seed};
use crate::sketch::{Registers, Sketch, SketchConfig, SketchKind};
use crate::subset::{sample_bernoulli_into, IndexSet};

/// Ground set `N` with its rank tables under a fixed sketch randomness.
#[derive(Clone, Debug)]
pub struct GroundSet {
    keys: Vec<Key>,
    config: SketchConfig,
    seed: Seed,
    digests: Vec<KeyDigest>,
    /// Per hashmap (k-mins), per part (k-partition) or single (bottom-k): key indices
    /// in increasing priority.
    tables: Vec<Vec<u32>>,
    /// 1-based rank of each key. k-mins: `ranks[i * n + x]`; otherwise `ranks[x]`
    /// within the key's own table.
    ranks: Vec<u32>,
    /// Table holding each key, for k-partition.
    part: Vec<u32>,
}

impl GroundSet {
    pub fn new(keys: Vec<Key>, config: SketchConfig, seed: Seed) -> Result<Self> {
        let n = keys.len();
        if n == 0 {
            return Err(Error::GroundSetTooSmall {
                n,
                needed: "at least one key".into(),
            });
        }
        if n > u32::MAX as usize {
            return Err(Error::InvalidParameter("ground set exceeds 2^32 keys".into()));
        }
        {
            let mut sorted: Vec<&Key> = keys.iter().collect();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidParameter("ground set keys must be distinct".into()));
            }
        }
        let digests: Vec<KeyDigest> = keys.iter().map(|k| seed.digest(k.as_bytes())).collect();
        let k = config.k();
        let (tables, ranks, part) = match config.kind() {
            SketchKind::KMins => {
                let mut tables = Vec::with_capacity(k);
                let mut ranks = vec![0u32; k * n];
                let mut words = vec![0u64; n];
                for i in 0..k {
                    for (x, d) in digests.iter().enumerate() {
                        words[x] = d.word(i as u64);
                    }
                    let mut order: Vec<u32> = (0..n as u32).collect();
                    order.sort_unstable_by_key(|&x| (words[x as usize], x));
                    for (j, &x) in order.iter().enumerate() {
                        ranks[i * n + x as usize] = j as u32 + 1;
                    }
                    tables.push(order);
                }
                (tables, ranks, Vec::new())
            }
            SketchKind::KPartition => {
                let part: Vec<u32> = digests.iter().map(|d| config.part_of(*d) as u32).collect();
                let mut tables: Vec<Vec<u32>> = vec![Vec::new(); k];
                for x in 0..n as u32 {
                    tables[part[x as usize] as usize].push(x);
                }
                let mut ranks = vec![0u32; n];
                for t in &mut tables {
                    t.sort_unstable_by_key(|&x| (digests[x as usize].word(0), x));
                    for (j, &x) in t.iter().enumerate() {
                        ranks[x as usize] = j as u32 + 1;
                    }
                }
                (tables, ranks, part)
            }
            SketchKind::BottomK => {
                let mut order: Vec<u32> = (0..n as u32).collect();
                order.sort_unstable_by_key(|&x| (digests[x as usize].word(0), x));
                let mut ranks = vec![0u32; n];
                for (j, &x) in order.iter().enumerate() {
                    ranks[x as usize] = j as u32 + 1;
                }
                (vec![order], ranks, Vec::new())
            }
        };
        Ok(GroundSet {
            keys,
            config,
            seed,
            digests,
            tables,
            ranks,
            part,
        })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[Key] {
        &self.keys
    }

    pub fn key(&self, x: u32) -> &Key {
        &self.keys[x as usize]
    }

    pub fn digest(&self, x: u32) -> KeyDigest {
        self.digests[x as usize]
    }

    pub fn config(&self) -> &SketchConfig {
        &self.config
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    pub fn k(&self) -> usize {
        self.config.k()
    }

    /// All rank tables: `m^i_j` is `tables()[i][j - 1]`.
    pub fn tables(&self) -> &[Vec<u32>] {
        &self.tables
    }

    /// 1-based rank of key `x` in table `i`, if `x` appears there.
    pub fn rank_in(&self, table: usize, x: u32) -> Option<u32> {
        match self.config.kind() {
            SketchKind::KMins => Some(self.ranks[table * self.len() + x as usize]),
            SketchKind::KPartition => (self.part[x as usize] as usize == table).then(|| self.ranks[x as usize]),
            SketchKind::BottomK => (table == 0).then(|| self.ranks[x as usize]),
        }
    }

    /// Table index holding `x` for k-partition sketches.
    pub fn part_of(&self, x: u32) -> Option<usize> {
        (self.config.kind() == SketchKind::KPartition).then(|| self.part[x as usize] as usize)
    }

    /// Sketch of a subset computed directly from key hashes.
    pub fn sketch_of_indices(&self, indices: &[u32]) -> Sketch {
        Sketch::of_digests(self.config, self.seed, indices.iter().map(|&x| self.digests[x as usize]))
    }

    pub fn sketch_of(&self, subset: &IndexSet) -> Sketch {
        self.sketch_of_indices(subset.as_slice())
    }

    pub fn sketch_of_all(&self) -> Sketch {
        Sketch::of_digests(self.config, self.seed, self.digests.iter().copied())
    }

    /// Scans the rank tables for the lowest-rank members of a subset.
    ///
    /// Cost is proportional to the ranks found rather than to `|U|`, which makes
    /// dense attack queries cheap.
    pub fn observe(&self, contains: impl Fn(u32) -> bool) -> Observation {
        let k = self.k();
        match self.config.kind() {
            SketchKind::KMins | SketchKind::KPartition => {
                let mut ranks = Vec::with_capacity(k);
                let mut keys = Vec::with_capacity(k);
                for t in &self.tables {
                    match t.iter().position(|&x| contains(x)) {
                        Some(j) => {
                            ranks.push(j as u32 + 1);
                            keys.push(t[j]);
                        }
                        None => {
                            ranks.push(0);
                            keys.push(u32::MAX);
                        }
                    }
                }
                Observation {
                    kind: self.config.kind(),
                    k,
                    ranks,
                    keys,
                }
            }
            SketchKind::BottomK => {
                let mut ranks = Vec::with_capacity(k);
                let mut keys = Vec::with_capacity(k);
                for (j, &x) in self.tables[0].iter().enumerate() {
                    if contains(x) {
                        ranks.push(j as u32 + 1);
                        keys.push(x);
                        if ranks.len() == k {
                            break;
                        }
                    }
                }
                Observation {
                    kind: SketchKind::BottomK,
                    k,
                    ranks,
                    keys,
                }
            }
        }
    }

    pub fn observe_set(&self, subset: &IndexSet) -> Observation {
        self.observe(|x| subset.contains(x))
    }

    pub fn rank_sketch(&self, subset: &IndexSet) -> Result<RankSketch> {
        self.observe_set(subset).rank_sketch()
    }

    /// Value sketch realized by an observation.
    pub fn sketch_from_observation(&self, obs: &Observation) -> Sketch {
        let present = obs.keys.iter().filter(|&&x| x != u32::MAX).map(|&x| self.digests[x as usize]);
        Sketch::of_digests(self.config, self.seed, present)
    }

    /// Recomputes the value sketch of a subset from its rank sketch and the rank tables.
    pub fn sketch_from_ranks(&self, ranks: &RankSketch) -> Result<Sketch> {
        let k = self.k();
        if ranks.y.len() != k {
            return Err(Error::IncompleteSketch(format!("expected {k} ranks, got {}", ranks.y.len())));
        }
        let mut digests = Vec::with_capacity(k);
        match self.config.kind() {
            SketchKind::KMins | SketchKind::KPartition => {
                for (t, &y) in self.tables.iter().zip(&ranks.y) {
                    let x = *t
                        .get(y as usize - 1)
                        .ok_or_else(|| Error::IncompleteSketch(format!("rank {y} beyond table")))?;
                    digests.push(self.digests[x as usize]);
                }
            }
            SketchKind::BottomK => {
                let mut pos = 0usize;
                for &y in &ranks.y {
                    pos += y as usize;
                    let x = *self.tables[0]
                        .get(pos - 1)
                        .ok_or_else(|| Error::IncompleteSketch(format!("rank {pos} beyond ground set")))?;
                    digests.push(self.digests[x as usize]);
                }
            }
        }
        if self.config.kind() == SketchKind::KMins {
            // the i-th key realizes only register i
            let registers = digests
                .iter()
                .enumerate()
                .map(|(i, d)| d.exp1(i as u64))
                .collect::<Vec<f64>>();
            return Sketch::from_registers(self.config, self.seed, Registers::Minima(registers));
        }
        Ok(Sketch::of_digests(self.config, self.seed, digests))
    }

    /// Key indices of `N0*`: the keys that determine the sketch of the whole ground set.
    pub fn determining_indices(&self) -> Vec<u32> {
        let mut out: Vec<u32> = match self.config.kind() {
            SketchKind::BottomK => self.tables[0].iter().take(self.k()).copied().collect(),
            _ => self.tables.iter().filter_map(|t| t.first().copied()).collect(),
        };
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Lowest-rank members of a subset, one per register.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observation {
    kind: SketchKind,
    k: usize,
    /// k-mins/k-partition: rank of the minimum in each table (0 if the table has no
    /// member). Bottom-k: increasing absolute ranks of the bottom keys.
    pub ranks: Vec<u32>,
    /// Key index realizing each entry of `ranks` (`u32::MAX` where absent).
    pub keys: Vec<u32>,
}

impl Observation {
    pub fn kind(&self) -> SketchKind {
        self.kind
    }

    pub fn is_complete(&self) -> bool {
        match self.kind {
            SketchKind::BottomK => self.ranks.len() == self.k,
            _ => self.ranks.iter().all(|&r| r > 0),
        }
    }

    pub fn rank_sketch(&self) -> Result<RankSketch> {
        match self.kind {
            SketchKind::BottomK => {
                if self.ranks.len() < self.k {
                    return Err(Error::IncompleteSketch(format!(
                        "subset has {} keys, bottom-k needs {}",
                        self.ranks.len(),
                        self.k
                    )));
                }
                let mut prev = 0;
                let y = self
                    .ranks
                    .iter()
                    .map(|&r| {
                        let gap = r - prev;
                        prev = r;
                        gap
                    })
                    .collect();
                Ok(RankSketch { y })
            }
            _ => {
                if let Some(i) = self.ranks.iter().position(|&r| r == 0) {
                    return Err(Error::IncompleteSketch(format!("no member in table {i}")));
                }
                Ok(RankSketch { y: self.ranks.clone() })
            }
        }
    }
}

/// Rank-domain sketch `(Y_1, ..., Y_k)`, all entries at least 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankSketch {
    pub y: Vec<u32>,
}

impl RankSketch {
    pub fn new(y: Vec<u32>) -> Result<Self> {
        if y.contains(&0) {
            return Err(Error::InvalidParameter("rank entries must be at least 1".into()));
        }
        Ok(RankSketch { y })
    }

    /// The sufficient statistic `sum_i Y_i`.
    pub fn total(&self) -> u64 {
        self.y.iter().map(|&v| v as u64).sum()
    }

    pub fn k(&self) -> usize {
        self.y.len()
    }
}

/// Discretizes a continuous rank sketch: `Y_i = floor(Y'_i) + 1`.
///
/// With `Y'_i ~ Exp[-ln(1-q)]` the result is `Geom[q]` on `{1, 2, ...}`.
pub fn continuous_to_rank(yprime: &[f64]) -> Result<RankSketch> {
    let y = yprime
        .iter()
        .map(|&v| {
            if v.is_nan() || v < 0.0 || v >= u32::MAX as f64 {
                Err(Error::InvalidParameter(format!("continuous rank {v} out of range")))
            } else {
                Ok(v.floor() as u32 + 1)
            }
        })
        .collect::<Result<_>>()?;
    Ok(RankSketch { y })
}

/// Split of the ground set into low-rank keys `N0` and transparent keys `N'`.
#[derive(Clone, Debug)]
pub struct KeyPartition {
    /// Low-rank keys, sorted by index.
    pub n0: Vec<u32>,
    /// The keys determining the sketch of `N`, sorted by index.
    pub n0_star: Vec<u32>,
    /// `N \ N0`, sorted by index.
    pub transparent: Vec<u32>,
    /// Rank-prefix depth used per table.
    pub depth: usize,
    pub q_a: f64,
    pub delta_c: f64,
}

impl KeyPartition {
    pub fn is_low_rank(&self, x: u32) -> bool {
        self.n0.binary_search(&x).is_ok()
    }

    /// Upper bound `k ln(1/delta_c) / q_a` on `|N0|`.
    pub fn size_bound(&self, k: usize) -> f64 {
        k as f64 * (1.0 / self.delta_c).ln() / self.q_a
    }
}

/// Keys examined with probability at least `delta_c` by a rate-`q_a` sample form `N0`.
///
/// k-mins and k-partition take ranks `j <= ceil(ln(1/delta_c)/q_a)` of every table;
/// bottom-k takes the first `ceil(k ln(1/delta_c)/q_a)` ranks.
pub fn partition_keys(ground: &GroundSet, q_a: f64, delta_c: f64) -> Result<KeyPartition> {
    if !(q_a > 0.0 && q_a < 1.0) {
        return Err(Error::InvalidParameter(format!("q_a must be in (0,1), got {q_a}")));
    }
    if !(delta_c > 0.0 && delta_c < 1.0) {
        return Err(Error::InvalidParameter(format!("delta_c must be in (0,1), got {delta_c}")));
    }
    let log_term = (1.0 / delta_c).ln();
    let n = ground.len();
    let k = ground.k();
    let (depth, mut n0): (usize, Vec<u32>) = match ground.config().kind() {
        SketchKind::BottomK => {
            let depth = (k as f64 * log_term / q_a).ceil() as usize;
            (depth, ground.tables()[0].iter().take(depth).copied().collect())
        }
        _ => {
            let depth = (log_term / q_a).ceil() as usize;
            (depth, ground.tables().iter().flat_map(|t| t.iter().take(depth).copied()).collect())
        }
    };
    n0.sort_unstable();
    n0.dedup();
    if n0.len() >= n {
        return Err(Error::GroundSetTooSmall {
            n,
            needed: format!("rank prefix of depth {depth} covers every key"),
        });
    }
    let member = IndexSet::from_indices(n, n0.iter().copied());
    let transparent = (0..n as u32).filter(|&x| !member.contains(x)).collect();
    Ok(KeyPartition {
        n0,
        n0_star: ground.determining_indices(),
        transparent,
        depth,
        q_a,
        delta_c,
    })
}

/// Default depth factor `2 ln r` for [`non_transparent_under_mask`] on bottom-k sketches.
pub fn default_bottom_k_factor(r: usize) -> f64 {
    2.0 * (r.max(2) as f64).ln()
}

/// Low-rank keys that can still influence the sketch of `M ∪ U` once `M` is fixed.
///
/// k-mins and k-partition: in each table the keys ranked after the first mask key go
/// transparent. Bottom-k: `m_j` goes transparent when `j > (k - |M ∩ {m_l : l < j}|) * factor`.
/// The result is a subset of `part.n0`, sorted by index, and includes the mask keys it
/// still lists.
pub fn non_transparent_under_mask(
    ground: &GroundSet,
    part: &KeyPartition,
    in_mask: impl Fn(u32) -> bool,
    factor: f64,
) -> Vec<u32> {
    let n = ground.len();
    let k = ground.k();
    let mut keep = IndexSet::new(n);
    match ground.config().kind() {
        SketchKind::BottomK => {
            let mut masked = 0usize;
            for (j, &x) in ground.tables()[0].iter().take(part.depth).enumerate() {
                let cutoff = k.saturating_sub(masked) as f64 * factor;
                if (j + 1) as f64 > cutoff {
                    break;
                }
                keep.insert(x);
                masked += in_mask(x) as usize;
            }
        }
        _ => {
            for table in ground.tables() {
                for &x in table.iter().take(part.depth) {
                    keep.insert(x);
                    if in_mask(x) {
                        break;
                    }
                }
            }
        }
    }
    let mut out: Vec<u32> = keep.iter().filter(|&x| part.is_low_rank(x)).collect();
    out.sort_unstable();
    out
}

#[derive(Clone, Debug)]
pub struct GeomReport {
    pub q: f64,
    pub k: usize,
    pub trials: usize,
    /// Trials whose subset missed some table and yielded no complete rank sketch.
    pub incomplete: usize,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub mean_total: f64,
    pub var_total: f64,
    pub expected_mean: f64,
    pub expected_var: f64,
    /// Standard error of `mean_total` under the Geom[q] model.
    pub mean_std_error: f64,
    /// Largest |Spearman correlation| between adjacent coordinates across trials.
    pub max_abs_correlation: f64,
    pub totals: Vec<u64>,
}

/// Pearson chi-square of observed counts against expected counts, merging buckets from
/// the tail until each expected count is at least 5.
pub fn chi_square_merged(observed: &[f64], expected: &[f64]) -> (f64, usize) {
    let mut buckets: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (o, e) in observed.iter().zip(expected) {
        acc.0 += o;
        acc.1 += e;
        if acc.1 >= 5.0 {
            buckets.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        match buckets.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => buckets.push(acc),
        }
    }
    let stat = buckets.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    (stat, buckets.len().saturating_sub(1))
}

pub fn chi_square_p_value(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(stat)
}

/// Goodness of fit of the pooled `Y_i` of rate-`q` subsets against `Geom[q]`.
pub fn chi_square_geometric(samples: &[u32], q: f64) -> (f64, usize, f64) {
    let max = samples.iter().copied().max().unwrap_or(1) as usize;
    let mut observed = vec![0.0; max + 1];
    for &s in samples {
        observed[s as usize - 1] += 1.0;
    }
    let n = samples.len() as f64;
    // last bucket absorbs the whole tail beyond the largest sample
    let mut expected: Vec<f64> = (1..=max).map(|t| n * q * (1.0 - q).powi(t as i32 - 1)).collect();
    expected.push(n * (1.0 - q).powi(max as i32));
    let (stat, dof) = chi_square_merged(&observed, &expected);
    (stat, dof, chi_square_p_value(stat, dof))
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &t in &idx[i..=j] {
                r[t] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

/// Samples `trials` rate-`q` subsets of the ground set and tests their rank sketches
/// against `k` independent `Geom[q]` variables.
pub fn geom_distribution_check<R: Rng + ?Sized>(ground: &GroundSet, q: f64, trials: usize, rng: &mut R) -> Result<GeomReport> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidParameter(format!("q must be in (0,1], got {q}")));
    }
    if trials < 2 {
        return Err(Error::InvalidParameter("need at least two trials".into()));
    }
    let k = ground.k();
    let mut subset = IndexSet::new(ground.len());
    let mut pooled = Vec::with_capacity(trials * k);
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(trials); k];
    let mut totals = Vec::with_capacity(trials);
    let mut incomplete = 0;
    for _ in 0..trials {
        sample_bernoulli_into(&mut subset, q, rng);
        match ground.rank_sketch(&subset) {
            Ok(rs) => {
                for (i, &y) in rs.y.iter().enumerate() {
                    columns[i].push(y as f64);
                }
                totals.push(rs.total());
                pooled.extend_from_slice(&rs.y);
            }
            Err(_) => incomplete += 1,
        }
    }
    let m = totals.len() as f64;
    let mean_total = totals.iter().sum::<u64>() as f64 / m;
    let var_total = totals.iter().map(|&t| (t as f64 - mean_total).powi(2)).sum::<f64>() / (m - 1.0);
    let expected_mean = k as f64 / q;
    let expected_var = k as f64 * (1.0 - q) / (q * q);
    let (chi_square, degrees_of_freedom, p_value) = if q == 1.0 {
        let ok = pooled.iter().all(|&y| y == 1);
        (if ok { 0.0 } else { f64::INFINITY }, 0, if ok { 1.0 } else { 0.0 })
    } else {
        chi_square_geometric(&pooled, q)
    };
    let max_abs_correlation = if q == 1.0 {
        0.0
    } else {
        (0..k.saturating_sub(1))
            .map(|i| spearman(&columns[i], &columns[i + 1]).abs())
            .fold(0.0, f64::max)
    };
    Ok(GeomReport {
        q,
        k,
        trials,
        incomplete,
        chi_square,
        degrees_of_freedom,
        p_value,
        mean_total,
        var_total,
        expected_mean,
        expected_var,
        mean_std_error: (expected_var / m).sqrt(),
        max_abs_correlation,
        totals,
    })
}
