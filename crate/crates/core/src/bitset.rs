//! Fixed-length bitsets backed by `u64` words. Adjacency rows, vertex
//! subsets and DP reachability tables all live on this type, so the hot
//! operations (`and_count`, in-place boolean ops) avoid allocation.

use serde::{Deserialize, Serialize, Serializer};

const WORD_BITS: usize = 64;

/// A set over `0..len` stored as packed 64-bit words.
///
/// Invariant: bits at positions `>= len` are always zero, so popcounts and
/// equality never see garbage in the tail word.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Bitset {
    len: usize,
    words: Vec<u64>,
}

impl Bitset {
    /// Empty set over `0..len`.
    pub fn new(len: usize) -> Self {
        Bitset {
            len,
            words: vec![0; len.div_ceil(WORD_BITS)],
        }
    }

    /// Full set `{0, .., len-1}`.
    pub fn full(len: usize) -> Self {
        let mut s = Bitset::new(len);
        for w in &mut s.words {
            *w = u64::MAX;
        }
        s.mask_tail();
        s
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(len: usize, indices: I) -> Self {
        let mut s = Bitset::new(len);
        for i in indices {
            s.insert(i);
        }
        s
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        debug_assert!(i < self.len, "bit {i} out of range (len {})", self.len);
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range (len {})", self.len);
        self.words[i / WORD_BITS] |= 1 << (i % WORD_BITS);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range (len {})", self.len);
        self.words[i / WORD_BITS] &= !(1 << (i % WORD_BITS));
    }

    /// Number of elements (popcount over all words).
    #[inline]
    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `|self ∩ other|` without materializing the intersection.
    #[inline]
    pub fn and_count(&self, other: &Bitset) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// `|self \ other|`.
    #[inline]
    pub fn diff_count(&self, other: &Bitset) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & !b).count_ones() as usize)
            .sum()
    }

    pub fn intersection(&self, other: &Bitset) -> Bitset {
        let mut out = self.clone();
        out.intersect_with(other);
        out
    }

    pub fn union(&self, other: &Bitset) -> Bitset {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    /// `self \ other`.
    pub fn difference(&self, other: &Bitset) -> Bitset {
        let mut out = self.clone();
        out.subtract(other);
        out
    }

    pub fn symmetric_difference(&self, other: &Bitset) -> Bitset {
        debug_assert_eq!(self.len, other.len);
        let mut out = self.clone();
        for (a, b) in out.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
        out
    }

    pub fn complement(&self) -> Bitset {
        let mut out = self.clone();
        for w in &mut out.words {
            *w = !*w;
        }
        out.mask_tail();
        out
    }

    pub fn intersect_with(&mut self, other: &Bitset) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn union_with(&mut self, other: &Bitset) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// In-place `self \ other`.
    pub fn subtract(&mut self, other: &Bitset) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn is_subset_of(&self, other: &Bitset) -> bool {
        debug_assert_eq!(self.len, other.len);
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint_from(&self, other: &Bitset) -> bool {
        debug_assert_eq!(self.len, other.len);
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    /// Iterate set bits in increasing order.
    pub fn iter(&self) -> BitIter<'_> {
        BitIter {
            set: self,
            word_idx: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    pub fn indices(&self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Lowest set bit, if any.
    pub fn first(&self) -> Option<usize> {
        self.iter().next()
    }

    /// Uniformly random subset of `0..len`: each element included
    /// independently with probability 1/2.
    pub fn random_half(len: usize, rng: &mut impl rand::RngCore) -> Bitset {
        let mut s = Bitset::new(len);
        for w in &mut s.words {
            *w = rng.next_u64();
        }
        s.mask_tail();
        s
    }

    fn mask_tail(&mut self) {
        let tail = self.len % WORD_BITS;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
        if self.len == 0 {
            self.words.clear();
        }
    }
}

pub struct BitIter<'a> {
    set: &'a Bitset,
    word_idx: usize,
    current: u64,
}

impl Iterator for BitIter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        while self.current == 0 {
            self.word_idx += 1;
            if self.word_idx >= self.set.words.len() {
                return None;
            }
            self.current = self.set.words[self.word_idx];
        }
        let bit = self.current.trailing_zeros() as usize;
        self.current &= self.current - 1;
        Some(self.word_idx * WORD_BITS + bit)
    }
}

impl std::fmt::Debug for Bitset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

// Serialized as a sorted index array; the length travels separately in the
// enclosing type (graphs and witnesses both know their class sizes).
impl Serialize for Bitset {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for Bitset {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let indices = Vec::<usize>::deserialize(deserializer)?;
        let len = indices.iter().max().map_or(0, |m| m + 1);
        Ok(Bitset::from_indices(len, indices))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_contains_count() {
        let mut s = Bitset::new(130);
        s.insert(0);
        s.insert(64);
        s.insert(129);
        assert!(s.contains(0) && s.contains(64) && s.contains(129));
        assert!(!s.contains(1));
        assert_eq!(s.count(), 3);
        assert_eq!(s.indices(), vec![0, 64, 129]);
    }

    #[test]
    fn full_masks_tail() {
        let s = Bitset::full(70);
        assert_eq!(s.count(), 70);
        assert_eq!(s.complement().count(), 0);
    }

    #[test]
    fn boolean_ops() {
        let a = Bitset::from_indices(10, [1, 2, 3, 7]);
        let b = Bitset::from_indices(10, [2, 3, 4]);
        assert_eq!(a.intersection(&b).indices(), vec![2, 3]);
        assert_eq!(a.union(&b).indices(), vec![1, 2, 3, 4, 7]);
        assert_eq!(a.difference(&b).indices(), vec![1, 7]);
        assert_eq!(a.symmetric_difference(&b).indices(), vec![1, 4, 7]);
        assert_eq!(a.and_count(&b), 2);
        assert_eq!(a.diff_count(&b), 2);
    }

    #[test]
    fn subset_and_disjoint() {
        let a = Bitset::from_indices(8, [1, 2]);
        let b = Bitset::from_indices(8, [1, 2, 5]);
        let c = Bitset::from_indices(8, [0, 3]);
        assert!(a.is_subset_of(&b));
        assert!(!b.is_subset_of(&a));
        assert!(a.is_disjoint_from(&c));
        assert!(!a.is_disjoint_from(&b));
    }

    #[test]
    fn empty_set() {
        let s = Bitset::new(0);
        assert!(s.is_empty());
        assert_eq!(s.iter().count(), 0);
    }
}
