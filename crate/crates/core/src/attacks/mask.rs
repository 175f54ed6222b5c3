use std::io::Write;

use crate::error::Result;
use crate::rank_domain::GroundSet;
use crate::subset::IndexSet;

/// A growing subset `M` of the ground set, remembering the step at which each key joined.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    members: IndexSet,
    // parallel to `members.as_slice()`
    added_at: Vec<usize>,
}

impl Mask {
    pub fn new(universe: usize) -> Self {
        Mask {
            members: IndexSet::new(universe),
            added_at: Vec::new(),
        }
    }

    pub fn from_indices(universe: usize, indices: impl IntoIterator<Item = u32>, step: usize) -> Self {
        let mut m = Mask::new(universe);
        for x in indices {
            m.insert(x, step);
        }
        m
    }

    /// Adds `x` at `step`; a key already present keeps its original step.
    pub fn insert(&mut self, x: u32, step: usize) -> bool {
        let fresh = self.members.insert(x);
        if fresh {
            self.added_at.push(step);
        }
        fresh
    }

    #[inline]
    pub fn contains(&self, x: u32) -> bool {
        self.members.contains(x)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &IndexSet {
        &self.members
    }

    /// Members in insertion order.
    pub fn indices(&self) -> &[u32] {
        self.members.as_slice()
    }

    pub fn added_at(&self, x: u32) -> Option<usize> {
        self.members.as_slice().iter().position(|&m| m == x).map(|p| self.added_at[p])
    }

    /// Mask as it stood after `step`.
    pub fn snapshot(&self, step: usize) -> Mask {
        let mut m = Mask::new(self.members.universe());
        for (&x, &s) in self.members.as_slice().iter().zip(&self.added_at) {
            if s <= step {
                m.insert(x, s);
            }
        }
        m
    }

    /// Newline-delimited key file, in insertion order.
    pub fn write_keys<W: Write>(&self, ground: &GroundSet, mut out: W) -> Result<()> {
        for &x in self.members.as_slice() {
            out.write_all(ground.key(x).as_bytes())?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}
