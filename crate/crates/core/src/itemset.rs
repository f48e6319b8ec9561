//! Growable bitset of item indices.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A set of 0-based item indices. Trailing zero words are never stored, so
/// structural equality and hashing coincide with set equality.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ItemSet {
    words: Vec<u64>,
}

impl ItemSet {
    pub fn new() -> Self {
        ItemSet { words: Vec::new() }
    }

    pub fn singleton(item: usize) -> Self {
        let mut s = ItemSet::new();
        s.insert(item);
        s
    }

    /// `{0, 1, ..., m-1}`.
    pub fn full(m: usize) -> Self {
        (0..m).collect()
    }

    pub fn from_mask(mask: u64) -> Self {
        let mut s = ItemSet { words: vec![mask] };
        s.trim();
        s
    }

    /// Bitmask form, available while every member is below 64.
    pub fn mask(&self) -> Option<u64> {
        match self.words.len() {
            0 => Some(0),
            1 => Some(self.words[0]),
            _ => None,
        }
    }

    /// Bitmask restricted to items `< bits`.
    pub fn mask_below(&self, bits: usize) -> u64 {
        debug_assert!(bits <= 64);
        let w = self.words.first().copied().unwrap_or(0);
        if bits == 64 {
            w
        } else {
            w & ((1u64 << bits) - 1)
        }
    }

    pub fn insert(&mut self, item: usize) -> bool {
        let (w, b) = (item / 64, item % 64);
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        let fresh = self.words[w] & (1 << b) == 0;
        self.words[w] |= 1 << b;
        fresh
    }

    pub fn remove(&mut self, item: usize) -> bool {
        let (w, b) = (item / 64, item % 64);
        if w >= self.words.len() {
            return false;
        }
        let had = self.words[w] & (1 << b) != 0;
        self.words[w] &= !(1 << b);
        self.trim();
        had
    }

    pub fn contains(&self, item: usize) -> bool {
        let (w, b) = (item / 64, item % 64);
        w < self.words.len() && self.words[w] & (1 << b) != 0
    }

    pub fn with(&self, item: usize) -> ItemSet {
        let mut s = self.clone();
        s.insert(item);
        s
    }

    pub fn without(&self, item: usize) -> ItemSet {
        let mut s = self.clone();
        s.remove(item);
        s
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * 64 + b)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn min(&self) -> Option<usize> {
        self.iter().next()
    }

    pub fn max(&self) -> Option<usize> {
        self.iter().last()
    }

    pub fn union(&self, other: &ItemSet) -> ItemSet {
        let n = self.words.len().max(other.words.len());
        let words = (0..n)
            .map(|i| self.word(i) | other.word(i))
            .collect();
        ItemSet { words }
    }

    pub fn intersection(&self, other: &ItemSet) -> ItemSet {
        let n = self.words.len().min(other.words.len());
        let mut s = ItemSet {
            words: (0..n).map(|i| self.word(i) & other.word(i)).collect(),
        };
        s.trim();
        s
    }

    pub fn difference(&self, other: &ItemSet) -> ItemSet {
        let mut s = ItemSet {
            words: (0..self.words.len())
                .map(|i| self.word(i) & !other.word(i))
                .collect(),
        };
        s.trim();
        s
    }

    pub fn is_disjoint(&self, other: &ItemSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & b == 0)
    }

    pub fn is_subset(&self, other: &ItemSet) -> bool {
        (0..self.words.len()).all(|i| self.word(i) & !other.word(i) == 0)
    }

    /// Keeps only items `< m`.
    pub fn restrict(&self, m: usize) -> ItemSet {
        self.iter().filter(|&g| g < m).collect()
    }

    /// Lexicographic comparison of the sorted member lists.
    pub fn lex_cmp(&self, other: &ItemSet) -> std::cmp::Ordering {
        self.iter().cmp(other.iter())
    }

    fn word(&self, i: usize) -> u64 {
        self.words.get(i).copied().unwrap_or(0)
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }
}

impl FromIterator<usize> for ItemSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = ItemSet::new();
        for g in iter {
            s.insert(g);
        }
        s
    }
}

impl fmt::Debug for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for ItemSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_vec().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ItemSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        Ok(v.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_ops() {
        let mut s = ItemSet::new();
        assert!(s.insert(3));
        assert!(!s.insert(3));
        s.insert(70);
        assert_eq!(s.to_vec(), vec![3, 70]);
        assert_eq!(s.mask(), None);
        s.remove(70);
        assert_eq!(s.mask(), Some(8));
        assert_eq!(s, ItemSet::singleton(3));
        assert!(ItemSet::new().is_empty());
        assert_eq!(ItemSet::full(3).to_vec(), vec![0, 1, 2]);
    }

    proptest! {
        #[test]
        fn set_algebra_matches_btreeset(a in proptest::collection::btree_set(0usize..150, 0..20),
                                        b in proptest::collection::btree_set(0usize..150, 0..20)) {
            let sa: ItemSet = a.iter().copied().collect();
            let sb: ItemSet = b.iter().copied().collect();
            prop_assert_eq!(sa.union(&sb).to_vec(), a.union(&b).copied().collect::<Vec<_>>());
            prop_assert_eq!(sa.intersection(&sb).to_vec(), a.intersection(&b).copied().collect::<Vec<_>>());
            prop_assert_eq!(sa.difference(&sb).to_vec(), a.difference(&b).copied().collect::<Vec<_>>());
            prop_assert_eq!(sa.is_disjoint(&sb), a.is_disjoint(&b));
            prop_assert_eq!(sa.is_subset(&sb), a.is_subset(&b));
            prop_assert_eq!(sa.len(), a.len());
            // equality is structural after trimming
            let rebuilt: ItemSet = sa.union(&sb).difference(&sb).union(&sa.intersection(&sb));
            prop_assert_eq!(rebuilt, sa);
        }
    }
}
