//! Subsets of a ground set, addressed by key index.

use rand::Rng;

/// A subset of `0..universe` with O(1) membership and insertion-ordered iteration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSet {
    bits: Vec<u64>,
    items: Vec<u32>,
    universe: usize,
}

impl IndexSet {
    pub fn new(universe: usize) -> Self {
        IndexSet {
            bits: vec![0; universe.div_ceil(64)],
            items: Vec::new(),
            universe,
        }
    }

    pub fn from_indices(universe: usize, indices: impl IntoIterator<Item = u32>) -> Self {
        let mut s = IndexSet::new(universe);
        for i in indices {
            s.insert(i);
        }
        s
    }

    pub fn full(universe: usize) -> Self {
        IndexSet::from_indices(universe, 0..universe as u32)
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    #[inline]
    pub fn contains(&self, i: u32) -> bool {
        let i = i as usize;
        i < self.universe && self.bits[i >> 6] & (1 << (i & 63)) != 0
    }

    /// Returns `true` if `i` was not already present.
    pub fn insert(&mut self, i: u32) -> bool {
        assert!((i as usize) < self.universe, "index {i} outside universe {}", self.universe);
        let (w, b) = (i as usize >> 6, i & 63);
        if self.bits[w] & (1 << b) != 0 {
            return false;
        }
        self.bits[w] |= 1 << b;
        self.items.push(i);
        true
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Members in insertion order.
    pub fn as_slice(&self) -> &[u32] {
        &self.items
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.items.iter().copied()
    }

    pub fn clear(&mut self) {
        for &i in &self.items {
            self.bits[i as usize >> 6] = 0;
        }
        self.items.clear();
    }
}

/// Includes each of `0..universe` independently with probability `q`.
pub fn sample_bernoulli<R: Rng + ?Sized>(universe: usize, q: f64, rng: &mut R) -> IndexSet {
    let mut out = IndexSet::new(universe);
    sample_bernoulli_into(&mut out, q, rng);
    out
}

/// As [`sample_bernoulli`], reusing the allocation of `out`.
pub fn sample_bernoulli_into<R: Rng + ?Sized>(out: &mut IndexSet, q: f64, rng: &mut R) {
    out.clear();
    let n = out.universe;
    if q >= 1.0 {
        (0..n as u32).for_each(|i| {
            out.insert(i);
        });
    } else if q == 0.5 {
        for w in 0..n.div_ceil(64) {
            let mut bits: u64 = rng.random();
            while bits != 0 {
                let i = w * 64 + bits.trailing_zeros() as usize;
                if i >= n {
                    break;
                }
                out.insert(i as u32);
                bits &= bits - 1;
            }
        }
    } else if q > 0.0 {
        // geometric skips between successive members
        let log_miss = (-q).ln_1p();
        let mut i = 0usize;
        loop {
            let u: f64 = 1.0 - rng.random::<f64>();
            let gap = (u.ln() / log_miss).floor();
            if gap >= (n - i) as f64 {
                break;
            }
            i += gap as usize;
            out.insert(i as u32);
            i += 1;
            if i >= n {
                break;
            }
        }
    }
}
