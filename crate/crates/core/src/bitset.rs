use std::fmt;

use crate::frontend::StmtId;

/// Dense set of statement ids.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct StmtSet {
    words: Vec<u64>,
    len: usize,
}

impl StmtSet {
    /// Empty set over a universe of `len` statements.
    pub fn new(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_ids(len: usize, ids: impl IntoIterator<Item = StmtId>) -> Self {
        let mut s = Self::new(len);
        for id in ids {
            s.insert(id);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.len
    }

    /// Panics if `id` is outside the universe.
    pub fn insert(&mut self, id: StmtId) {
        assert!(
            id.0 < self.len,
            "{id} outside statement universe of {}",
            self.len
        );
        self.words[id.0 / 64] |= 1 << (id.0 % 64);
    }

    pub fn remove(&mut self, id: StmtId) {
        if id.0 < self.len {
            self.words[id.0 / 64] &= !(1 << (id.0 % 64));
        }
    }

    pub fn contains(&self, id: StmtId) -> bool {
        id.0 < self.len && self.words[id.0 / 64] & (1 << (id.0 % 64)) != 0
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn union_with(&mut self, other: &StmtSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = StmtId> + '_ {
        (0..self.len).map(StmtId).filter(|&id| self.contains(id))
    }
}

impl fmt::Debug for StmtSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|i| i.0)).finish()
    }
}
