//! Seeded, deterministic hashing of keys to priorities.
//!
//! A [`Seed`] fixes the sketch randomness. Every priority is a pure function of
//! `(seed, hashmap index, key bytes)`, which lets the attack experiments replay
//! the exact same hash functions across runs.

use std::fmt;
use std::hash::Hasher;

use serde::{Deserialize, Serialize};
use siphasher::sip128::{Hasher128, SipHasher13};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Opaque key. Experiments use short lowercase strings, but any byte string is accepted.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Key(Vec<u8>);

impl Key {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Self {
        Key(bytes.into())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl AsRef<[u8]> for Key {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match std::str::from_utf8(&self.0) {
            Ok(s) => write!(f, "Key({s:?})"),
            Err(_) => write!(f, "Key({:02x?})", self.0),
        }
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&String::from_utf8_lossy(&self.0))
    }
}

impl From<&str> for Key {
    fn from(s: &str) -> Self {
        Key(s.as_bytes().to_vec())
    }
}

impl From<String> for Key {
    fn from(s: String) -> Self {
        Key(s.into_bytes())
    }
}

impl From<&[u8]> for Key {
    fn from(b: &[u8]) -> Self {
        Key(b.to_vec())
    }
}

impl From<u64> for Key {
    fn from(v: u64) -> Self {
        Key(v.to_le_bytes().to_vec())
    }
}

/// The sketch randomness. Sketches built with equal seeds are identical functions of sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u128);

impl Seed {
    /// Derives a child seed, e.g. one per Monte Carlo trial.
    pub fn derive(self, stream: u64) -> Seed {
        let lo = self.0 as u64;
        let hi = (self.0 >> 64) as u64;
        let a = mix64(lo ^ mix64(stream.wrapping_add(GOLDEN_GAMMA)));
        let b = mix64(hi.wrapping_add(a) ^ stream.rotate_left(32));
        Seed(((b as u128) << 64) | a as u128)
    }

    pub fn digest(self, key: &[u8]) -> KeyDigest {
        let mut h = SipHasher13::new_with_keys(self.0 as u64, (self.0 >> 64) as u64);
        h.write(key);
        let out = h.finish128();
        KeyDigest {
            lo: out.h1,
            hi: out.h2,
        }
    }

    /// Raw 64-bit hash of `key` under hashmap `index`.
    pub fn hash_word(self, index: u64, key: &[u8]) -> u64 {
        self.digest(key).word(index)
    }

    /// Priority of `key` under hashmap `index`, uniform on the open interval (0, 1).
    pub fn hash_priority(self, index: u64, key: &[u8]) -> f64 {
        word_to_unit(self.hash_word(index, key))
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v as u128)
    }
}

/// 128-bit keyed digest of a key. Per-hashmap words are derived from it, so a key
/// is run through SipHash once no matter how many hashmaps the sketch uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeyDigest {
    lo: u64,
    hi: u64,
}

impl KeyDigest {
    pub fn word(self, index: u64) -> u64 {
        let z = mix64(
            self.lo
                .wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        );
        mix64(z ^ self.hi)
    }

    pub fn unit(self, index: u64) -> f64 {
        word_to_unit(self.word(index))
    }

    pub fn exp1(self, index: u64) -> f64 {
        unit_to_exp1(self.unit(index))
    }
}

/// Maps a word to an odd multiple of 2^-53, so the result is never 0 or 1.
pub fn word_to_unit(w: u64) -> f64 {
    (((w >> 12) << 1) | 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Inverse CDF of Exp[1]: `-ln(1 - u)`.
pub fn unit_to_exp1(u: f64) -> f64 {
    -(-u).ln_1p()
}

/// HLL register value: leading zeros of the word plus one.
pub fn word_to_exponent(w: u64) -> u8 {
    (w.leading_zeros() + 1).min(u8::MAX as u32) as u8
}

// splitmix64 finalizer
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
