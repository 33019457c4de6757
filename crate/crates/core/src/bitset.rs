//! Fixed-width, word-packed bit sets.
//!
//! Bit `i` lives in word `i / 64` at position `i % 64`, so the lowest index
//! is the least significant bit of word 0. Every binary operation requires
//! both operands to have the same width; callers that accept user data check
//! widths before reaching this layer.

use std::fmt;

const WORD_BITS: usize = u64::BITS as usize;

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

#[inline]
fn location(bit: usize) -> (usize, u64) {
    (bit / WORD_BITS, 1u64 << (bit % WORD_BITS))
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitSet {
    len: usize,
    words: Vec<u64>,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn full(len: usize) -> Self {
        let mut set = Self {
            len,
            words: vec![u64::MAX; words_for(len)],
        };
        set.clear_tail();
        set
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(len: usize, indices: I) -> Self {
        let mut set = Self::new(len);
        for i in indices {
            set.insert(i);
        }
        set
    }

    /// Builds a set from raw words; bits at or above `len` are discarded.
    pub fn from_words(len: usize, mut words: Vec<u64>) -> Self {
        words.resize(words_for(len), 0);
        let mut set = Self { len, words };
        set.clear_tail();
        set
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD_BITS;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    /// Number of addressable bits.
    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn contains(&self, bit: usize) -> bool {
        debug_assert!(bit < self.len);
        let (w, mask) = location(bit);
        self.words[w] & mask != 0
    }

    /// Returns `true` if the bit was newly set.
    #[inline]
    pub fn insert(&mut self, bit: usize) -> bool {
        assert!(bit < self.len, "bit {bit} out of range for width {}", self.len);
        let (w, mask) = location(bit);
        let was = self.words[w] & mask != 0;
        self.words[w] |= mask;
        !was
    }

    #[inline]
    pub fn remove(&mut self, bit: usize) -> bool {
        assert!(bit < self.len, "bit {bit} out of range for width {}", self.len);
        let (w, mask) = location(bit);
        let was = self.words[w] & mask != 0;
        self.words[w] &= !mask;
        was
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.len
    }

    #[inline]
    pub fn intersect_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= *b;
        }
    }

    #[inline]
    pub fn union_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }

    #[inline]
    pub fn difference_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !*b;
        }
    }

    pub fn intersection(&self, other: &BitSet) -> BitSet {
        let mut out = self.clone();
        out.intersect_with(other);
        out
    }

    pub fn union(&self, other: &BitSet) -> BitSet {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    pub fn difference(&self, other: &BitSet) -> BitSet {
        let mut out = self.clone();
        out.difference_with(other);
        out
    }

    /// `self ⊆ other`, with early exit on the first offending word.
    #[inline]
    pub fn is_subset(&self, other: &BitSet) -> bool {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    #[inline]
    pub fn is_superset(&self, other: &BitSet) -> bool {
        other.is_subset(self)
    }

    /// Clears every bit with index `>= bound`.
    pub fn retain_below(&mut self, bound: usize) {
        if bound >= self.len {
            return;
        }
        let (w, mask) = location(bound);
        self.words[w] &= mask - 1;
        for word in &mut self.words[w + 1..] {
            *word = 0;
        }
    }

    /// Whether `self` and `other` agree on every bit with index `< bound`.
    pub fn eq_below(&self, other: &BitSet, bound: usize) -> bool {
        debug_assert_eq!(self.len, other.len);
        let bound = bound.min(self.len);
        let full = bound / WORD_BITS;
        if self.words[..full] != other.words[..full] {
            return false;
        }
        let rem = bound % WORD_BITS;
        if rem == 0 {
            return true;
        }
        let mask = (1u64 << rem) - 1;
        (self.words[full] ^ other.words[full]) & mask == 0
    }

    /// Smallest index at which the two sets differ.
    pub fn first_difference(&self, other: &BitSet) -> Option<usize> {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .enumerate()
            .find_map(|(w, (a, b))| {
                let x = a ^ b;
                (x != 0).then(|| w * WORD_BITS + x.trailing_zeros() as usize)
            })
    }

    pub fn first(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find_map(|(w, &x)| (x != 0).then(|| w * WORD_BITS + x.trailing_zeros() as usize))
    }

    pub fn last(&self) -> Option<usize> {
        self.words.iter().enumerate().rev().find_map(|(w, &x)| {
            (x != 0).then(|| w * WORD_BITS + (WORD_BITS - 1 - x.leading_zeros() as usize))
        })
    }

    pub fn iter(&self) -> Ones<'_> {
        Ones {
            words: &self.words,
            index: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Ascending iterator over set bits.
pub struct Ones<'a> {
    words: &'a [u64],
    index: usize,
    current: u64,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(self.index * WORD_BITS + bit);
            }
            self.index += 1;
            if self.index >= self.words.len() {
                return None;
            }
            self.current = self.words[self.index];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn full_clears_tail_bits() {
        let s = BitSet::full(70);
        assert_eq!(s.count(), 70);
        assert!(s.is_full());
        assert_eq!(s.last(), Some(69));
        assert!(BitSet::full(0).is_empty());
    }

    #[test]
    fn retain_below_and_eq_below() {
        let mut s = BitSet::from_indices(130, [1, 63, 64, 65, 129]);
        let t = BitSet::from_indices(130, [1, 63, 64, 100]);
        assert!(s.eq_below(&t, 65));
        assert!(!s.eq_below(&t, 66));
        s.retain_below(64);
        assert_eq!(s.to_vec(), vec![1, 63]);
        s.retain_below(500);
        assert_eq!(s.to_vec(), vec![1, 63]);
    }

    #[test]
    fn first_difference_finds_lowest() {
        let a = BitSet::from_indices(8, [0, 2, 4, 6]);
        let b = BitSet::from_indices(8, [0, 1, 4, 6]);
        assert_eq!(a.first_difference(&b), Some(1));
        assert_eq!(a.first_difference(&a), None);
    }

    proptest! {
        #[test]
        fn ops_match_btreeset(len in 1usize..200, xs in prop::collection::vec(0usize..200, 0..40), ys in prop::collection::vec(0usize..200, 0..40)) {
            use std::collections::BTreeSet;
            let xs: BTreeSet<usize> = xs.into_iter().filter(|&x| x < len).collect();
            let ys: BTreeSet<usize> = ys.into_iter().filter(|&y| y < len).collect();
            let a = BitSet::from_indices(len, xs.iter().copied());
            let b = BitSet::from_indices(len, ys.iter().copied());
            prop_assert_eq!(a.intersection(&b).to_vec(), xs.intersection(&ys).copied().collect::<Vec<_>>());
            prop_assert_eq!(a.union(&b).to_vec(), xs.union(&ys).copied().collect::<Vec<_>>());
            prop_assert_eq!(a.difference(&b).to_vec(), xs.difference(&ys).copied().collect::<Vec<_>>());
            prop_assert_eq!(a.is_subset(&b), xs.is_subset(&ys));
            prop_assert_eq!(a.first(), xs.iter().next().copied());
            prop_assert_eq!(a.last(), xs.iter().next_back().copied());
            prop_assert_eq!(a.count(), xs.len());
            prop_assert_eq!(a.first_difference(&b), xs.symmetric_difference(&ys).min().copied());
        }
    }
}
