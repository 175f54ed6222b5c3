//! MinHash cardinality sketches: k-mins, bottom-k and k-partition.
//!
//! All three are composable: the sketch of a union is computed from the sketches
//! of its parts, and inserting a key is the union with a singleton. A sketch is a
//! value; two sketches compare equal exactly when their registers are bit-identical.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::{unit_to_exp1, word_to_exponent, word_to_unit, Key, KeyDigest, Seed};

const MAGIC: &[u8; 4] = b"MHSK";
const FORMAT_VERSION: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SketchKind {
    /// `k` independent hashmaps, one minimum each.
    KMins,
    /// One hashmap, the `k` smallest values.
    BottomK,
    /// One partition hash into `k` parts, the minimum in each part.
    KPartition,
}

impl SketchKind {
    pub fn name(self) -> &'static str {
        match self {
            SketchKind::KMins => "k-mins",
            SketchKind::BottomK => "bottom-k",
            SketchKind::KPartition => "k-partition",
        }
    }

    fn tag(self) -> u8 {
        match self {
            SketchKind::KMins => 0,
            SketchKind::BottomK => 1,
            SketchKind::KPartition => 2,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => SketchKind::KMins,
            1 => SketchKind::BottomK,
            2 => SketchKind::KPartition,
            _ => return None,
        })
    }
}

impl fmt::Display for SketchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegisterRepr {
    /// Exact hash minima (Exp[1] for k-mins/k-partition, U(0,1) for bottom-k).
    FullPrecision,
    /// HyperLogLog-style 8-bit registers holding the maximum leading-zero count plus one.
    Hll8BitExponent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SketchConfig {
    kind: SketchKind,
    k: usize,
    repr: RegisterRepr,
}

impl SketchConfig {
    pub fn new(kind: SketchKind, k: usize, repr: RegisterRepr) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if k > u32::MAX as usize {
            return Err(Error::InvalidConfig(format!("k = {k} does not fit in 32 bits")));
        }
        if repr == RegisterRepr::Hll8BitExponent && kind != SketchKind::KPartition {
            return Err(Error::InvalidConfig(format!(
                "exponent registers require a k-partition sketch, not {kind}"
            )));
        }
        Ok(SketchConfig { kind, k, repr })
    }

    pub fn kmins(k: usize) -> Result<Self> {
        Self::new(SketchKind::KMins, k, RegisterRepr::FullPrecision)
    }

    pub fn bottom_k(k: usize) -> Result<Self> {
        Self::new(SketchKind::BottomK, k, RegisterRepr::FullPrecision)
    }

    pub fn k_partition(k: usize) -> Result<Self> {
        Self::new(SketchKind::KPartition, k, RegisterRepr::FullPrecision)
    }

    /// A k-partition sketch with 8-bit exponent registers, i.e. HyperLogLog.
    pub fn hll(k: usize) -> Result<Self> {
        Self::new(SketchKind::KPartition, k, RegisterRepr::Hll8BitExponent)
    }

    pub fn kind(&self) -> SketchKind {
        self.kind
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn repr(&self) -> RegisterRepr {
        self.repr
    }

    /// Hashmap index reserved for the k-partition part assignment.
    pub fn partition_index(&self) -> u64 {
        self.k as u64
    }

    /// Part of a key in a k-partition sketch.
    pub fn part_of(&self, digest: KeyDigest) -> usize {
        (digest.word(self.partition_index()) % self.k as u64) as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Registers {
    /// One minimum per hashmap (k-mins) or per part (k-partition); `+inf` when empty.
    Minima(Vec<f64>),
    /// Strictly increasing list of at most `k` values.
    Bottom(Vec<f64>),
    /// One exponent per part; `0` when empty.
    Exponents(Vec<u8>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sketch {
    config: SketchConfig,
    seed: Seed,
    registers: Registers,
}

impl Sketch {
    /// The sketch of the empty set.
    pub fn empty(config: SketchConfig, seed: Seed) -> Self {
        let k = config.k;
        let registers = match (config.kind, config.repr) {
            (SketchKind::BottomK, _) => Registers::Bottom(Vec::with_capacity(k)),
            (_, RegisterRepr::FullPrecision) => Registers::Minima(vec![f64::INFINITY; k]),
            (_, RegisterRepr::Hll8BitExponent) => Registers::Exponents(vec![0; k]),
        };
        Sketch {
            config,
            seed,
            registers,
        }
    }

    /// Builds a sketch from raw registers, checking that they are well-formed for `config`.
    pub fn from_registers(config: SketchConfig, seed: Seed, registers: Registers) -> Result<Self> {
        let k = config.k;
        match (&registers, config.kind, config.repr) {
            (Registers::Minima(v), SketchKind::KMins | SketchKind::KPartition, RegisterRepr::FullPrecision) => {
                if v.len() != k {
                    return Err(Error::InvalidConfig(format!("expected {k} registers, got {}", v.len())));
                }
                if v.iter().any(|x| x.is_nan() || *x < 0.0) {
                    return Err(Error::InvalidConfig("registers must be nonnegative".into()));
                }
            }
            (Registers::Bottom(v), SketchKind::BottomK, _) => {
                if v.len() > k {
                    return Err(Error::InvalidConfig(format!("bottom-k holds more than {k} values")));
                }
                if !v.windows(2).all(|w| w[0] < w[1]) || v.iter().any(|x| !(*x > 0.0 && *x < 1.0)) {
                    return Err(Error::InvalidConfig(
                        "bottom-k values must be strictly increasing in (0,1)".into(),
                    ));
                }
            }
            (Registers::Exponents(v), SketchKind::KPartition, RegisterRepr::Hll8BitExponent) => {
                if v.len() != k {
                    return Err(Error::InvalidConfig(format!("expected {k} registers, got {}", v.len())));
                }
            }
            _ => {
                return Err(Error::InvalidConfig(
                    "register layout does not match the configuration".into(),
                ))
            }
        }
        Ok(Sketch {
            config,
            seed,
            registers,
        })
    }

    pub fn of_set<I, K>(config: SketchConfig, seed: Seed, keys: I) -> Self
    where
        I: IntoIterator<Item = K>,
        K: AsRef<[u8]>,
    {
        Self::of_digests(config, seed, keys.into_iter().map(|key| seed.digest(key.as_ref())))
    }

    /// Bulk construction from key digests computed under `seed`.
    ///
    /// Tracks minimum raw hash words and converts them once at the end; every register
    /// transform is monotone in the word, so the result is bit-identical to inserting
    /// the keys one at a time.
    pub fn of_digests<I>(config: SketchConfig, seed: Seed, digests: I) -> Self
    where
        I: IntoIterator<Item = KeyDigest>,
    {
        let k = config.k;
        let registers = match config.kind {
            SketchKind::KMins => {
                let mut words = vec![u64::MAX; k];
                let mut seen_any = false;
                for d in digests {
                    seen_any = true;
                    for (i, w) in words.iter_mut().enumerate() {
                        *w = (*w).min(d.word(i as u64));
                    }
                }
                if !seen_any {
                    return Sketch::empty(config, seed);
                }
                Registers::Minima(words.into_iter().map(|w| unit_to_exp1(word_to_unit(w))).collect())
            }
            SketchKind::KPartition => {
                let mut words: Vec<Option<u64>> = vec![None; k];
                for d in digests {
                    let part = config.part_of(d);
                    let w = d.word(0);
                    if words[part].is_none_or(|cur| w < cur) {
                        words[part] = Some(w);
                    }
                }
                match config.repr {
                    RegisterRepr::FullPrecision => Registers::Minima(
                        words
                            .into_iter()
                            .map(|w| w.map_or(f64::INFINITY, |w| unit_to_exp1(word_to_unit(w))))
                            .collect(),
                    ),
                    RegisterRepr::Hll8BitExponent => {
                        Registers::Exponents(words.into_iter().map(|w| w.map_or(0, word_to_exponent)).collect())
                    }
                }
            }
            SketchKind::BottomK => {
                let mut vals = Vec::with_capacity(k);
                for d in digests {
                    insert_bottom(&mut vals, k, d.unit(0));
                }
                Registers::Bottom(vals)
            }
        };
        Sketch {
            config,
            seed,
            registers,
        }
    }

    pub fn config(&self) -> &SketchConfig {
        &self.config
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    pub fn registers(&self) -> &Registers {
        &self.registers
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn is_empty(&self) -> bool {
        match &self.registers {
            Registers::Minima(v) => v.iter().all(|x| x.is_infinite()),
            Registers::Bottom(v) => v.is_empty(),
            Registers::Exponents(v) => v.iter().all(|&e| e == 0),
        }
    }

    pub fn insert(&mut self, key: &[u8]) {
        let digest = self.seed.digest(key);
        self.insert_digest(digest);
    }

    /// Inserts a key given its digest under this sketch's seed.
    pub fn insert_digest(&mut self, digest: KeyDigest) {
        let config = self.config;
        match &mut self.registers {
            Registers::Minima(regs) => match config.kind {
                SketchKind::KMins => {
                    for (i, r) in regs.iter_mut().enumerate() {
                        let v = digest.exp1(i as u64);
                        if v < *r {
                            *r = v;
                        }
                    }
                }
                _ => {
                    let part = config.part_of(digest);
                    let v = digest.exp1(0);
                    if v < regs[part] {
                        regs[part] = v;
                    }
                }
            },
            Registers::Exponents(regs) => {
                let part = config.part_of(digest);
                let e = word_to_exponent(digest.word(0));
                if e > regs[part] {
                    regs[part] = e;
                }
            }
            Registers::Bottom(vals) => insert_bottom(vals, config.k, digest.unit(0)),
        }
    }

    /// Functional form of [`Sketch::insert`].
    pub fn with_key(mut self, key: &[u8]) -> Self {
        self.insert(key);
        self
    }

    /// Sketch of the union of the two underlying sets.
    pub fn merge(&self, other: &Sketch) -> Result<Sketch> {
        if self.config != other.config {
            return Err(Error::ConfigMismatch {
                left: Box::new(self.config),
                right: Box::new(other.config),
            });
        }
        if self.seed != other.seed {
            return Err(Error::SeedMismatch);
        }
        let registers = match (&self.registers, &other.registers) {
            (Registers::Minima(a), Registers::Minima(b)) => {
                Registers::Minima(a.iter().zip(b).map(|(x, y)| x.min(*y)).collect())
            }
            (Registers::Exponents(a), Registers::Exponents(b)) => {
                Registers::Exponents(a.iter().zip(b).map(|(x, y)| *x.max(y)).collect())
            }
            (Registers::Bottom(a), Registers::Bottom(b)) => {
                let mut out = Vec::with_capacity(self.config.k);
                let (mut i, mut j) = (0, 0);
                while out.len() < self.config.k && (i < a.len() || j < b.len()) {
                    let next = match (a.get(i), b.get(j)) {
                        (Some(x), Some(y)) if x < y => {
                            i += 1;
                            *x
                        }
                        (Some(x), Some(y)) if x == y => {
                            i += 1;
                            j += 1;
                            *x
                        }
                        (Some(_), Some(y)) => {
                            j += 1;
                            *y
                        }
                        (Some(x), None) => {
                            i += 1;
                            *x
                        }
                        (None, Some(y)) => {
                            j += 1;
                            *y
                        }
                        (None, None) => unreachable!(),
                    };
                    out.push(next);
                }
                Registers::Bottom(out)
            }
            _ => unreachable!("equal configs imply equal register layouts"),
        };
        Ok(Sketch {
            config: self.config,
            seed: self.seed,
            registers,
        })
    }

    /// Serializes to the binary format: a fixed header then little-endian registers.
    ///
    /// ```text
    /// magic "MHSK" | version u8 | kind u8 | repr u8 | reserved u8 | k u32 | seed u128
    /// k-mins / k-partition:  k x f64
    /// bottom-k:              len u32 | len x f64
    /// exponent registers:    k x u8
    /// ```
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 8 * self.config.k);
        out.extend_from_slice(MAGIC);
        out.push(FORMAT_VERSION);
        out.push(self.config.kind.tag());
        out.push(match self.config.repr {
            RegisterRepr::FullPrecision => 0,
            RegisterRepr::Hll8BitExponent => 1,
        });
        out.push(0);
        out.extend_from_slice(&(self.config.k as u32).to_le_bytes());
        out.extend_from_slice(&self.seed.0.to_le_bytes());
        match &self.registers {
            Registers::Minima(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            Registers::Bottom(v) => {
                out.extend_from_slice(&(v.len() as u32).to_le_bytes());
                v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
            }
            Registers::Exponents(v) => out.extend_from_slice(v),
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Sketch> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Decode("bad magic".into()));
        }
        let version = r.u8()?;
        if version != FORMAT_VERSION {
            return Err(Error::Decode(format!("unsupported version {version}")));
        }
        let kind = SketchKind::from_tag(r.u8()?).ok_or_else(|| Error::Decode("unknown sketch kind".into()))?;
        let repr = match r.u8()? {
            0 => RegisterRepr::FullPrecision,
            1 => RegisterRepr::Hll8BitExponent,
            t => return Err(Error::Decode(format!("unknown register representation {t}"))),
        };
        r.u8()?;
        let k = r.u32()? as usize;
        let seed = Seed(u128::from_le_bytes(r.take(16)?.try_into().unwrap()));
        let config = SketchConfig::new(kind, k, repr).map_err(|e| Error::Decode(e.to_string()))?;
        let registers = match (kind, repr) {
            (SketchKind::BottomK, _) => {
                let len = r.u32()? as usize;
                if len > k {
                    return Err(Error::Decode(format!("bottom-k length {len} exceeds k = {k}")));
                }
                Registers::Bottom((0..len).map(|_| r.f64()).collect::<Result<_>>()?)
            }
            (_, RegisterRepr::FullPrecision) => Registers::Minima((0..k).map(|_| r.f64()).collect::<Result<_>>()?),
            (_, RegisterRepr::Hll8BitExponent) => Registers::Exponents(r.take(k)?.to_vec()),
        };
        if r.pos != bytes.len() {
            return Err(Error::Decode("trailing bytes".into()));
        }
        Sketch::from_registers(config, seed, registers).map_err(|e| Error::Decode(e.to_string()))
    }
}

fn insert_bottom(vals: &mut Vec<f64>, k: usize, u: f64) {
    if vals.len() == k && u >= vals[k - 1] {
        return;
    }
    match vals.binary_search_by(|x| x.total_cmp(&u)) {
        Ok(_) => {}
        Err(pos) => {
            if vals.len() == k {
                vals.pop();
            }
            vals.insert(pos, u);
        }
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Decode("truncated input".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// The small subset `U0` of `keys` that alone determines the sketch of `keys`.
///
/// For k-mins and k-partition these are the per-hashmap (per-part) argmin keys, for
/// bottom-k the keys holding the `k` smallest values. Duplicate input keys are ignored.
pub fn determining_keys<K: AsRef<[u8]>>(config: SketchConfig, seed: Seed, keys: &[K]) -> Vec<Key> {
    let k = config.k;
    let mut seen: HashSet<&[u8]> = HashSet::new();
    let mut digests: Vec<(usize, KeyDigest)> = Vec::with_capacity(keys.len());
    for (i, key) in keys.iter().enumerate() {
        if seen.insert(key.as_ref()) {
            digests.push((i, seed.digest(key.as_ref())));
        }
    }
    let mut chosen: Vec<usize> = match (config.kind, config.repr) {
        (SketchKind::KMins, _) => (0..k)
            .filter_map(|i| {
                digests
                    .iter()
                    .min_by_key(|(_, d)| d.word(i as u64))
                    .map(|(idx, _)| *idx)
            })
            .collect(),
        (SketchKind::KPartition, _) => {
            let mut best: Vec<Option<(u64, usize)>> = vec![None; k];
            for (idx, d) in &digests {
                let part = config.part_of(*d);
                let w = d.word(0);
                if best[part].is_none_or(|(bw, _)| w < bw) {
                    best[part] = Some((w, *idx));
                }
            }
            best.into_iter().flatten().map(|(_, idx)| idx).collect()
        }
        (SketchKind::BottomK, _) => {
            let mut by_value: Vec<(f64, usize)> = digests.iter().map(|(idx, d)| (d.unit(0), *idx)).collect();
            by_value.sort_by(|a, b| a.0.total_cmp(&b.0));
            by_value.into_iter().take(k).map(|(_, idx)| idx).collect()
        }
    };
    chosen.sort_unstable();
    chosen.dedup();
    chosen.into_iter().map(|i| Key::new(keys[i].as_ref())).collect()
}
