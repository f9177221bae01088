use std::fmt;

use fixedbitset::FixedBitSet;

use crate::StateId;

/// A set of abstract states, stored densely by state id.
#[derive(Clone, Default)]
pub struct StateSet {
    bits: FixedBitSet,
}

impl StateSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        StateSet {
            bits: FixedBitSet::with_capacity(n),
        }
    }

    pub fn insert(&mut self, q: StateId) -> bool {
        let i = q as usize;
        if i >= self.bits.len() {
            self.bits.grow(i + 1);
        }
        !self.bits.put(i)
    }

    pub fn remove(&mut self, q: StateId) -> bool {
        let i = q as usize;
        if i < self.bits.len() && self.bits[i] {
            self.bits.set(i, false);
            true
        } else {
            false
        }
    }

    #[inline]
    pub fn contains(&self, q: StateId) -> bool {
        self.bits.contains(q as usize)
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn iter(&self) -> impl Iterator<Item = StateId> + '_ {
        self.bits.ones().map(|i| i as StateId)
    }

    fn aligned(&self, other: &Self) -> (FixedBitSet, FixedBitSet) {
        let n = self.bits.len().max(other.bits.len());
        let mut a = self.bits.clone();
        let mut b = other.bits.clone();
        a.grow(n);
        b.grow(n);
        (a, b)
    }

    pub fn union(&self, other: &Self) -> Self {
        let (mut a, b) = self.aligned(other);
        a.union_with(&b);
        StateSet { bits: a }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let (mut a, b) = self.aligned(other);
        a.intersect_with(&b);
        StateSet { bits: a }
    }

    pub fn difference(&self, other: &Self) -> Self {
        let (mut a, b) = self.aligned(other);
        a.difference_with(&b);
        StateSet { bits: a }
    }

    pub fn union_with(&mut self, other: &Self) {
        if other.bits.len() > self.bits.len() {
            self.bits.grow(other.bits.len());
        }
        self.bits.union_with(&other.bits);
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.iter().all(|q| other.contains(q))
    }

    pub fn to_vec(&self) -> Vec<StateId> {
        self.iter().collect()
    }
}

impl PartialEq for StateSet {
    fn eq(&self, other: &Self) -> bool {
        // equal as sets, regardless of the allocated capacity
        let (a, b) = self.aligned(other);
        a == b
    }
}

impl Eq for StateSet {}

impl FromIterator<StateId> for StateSet {
    fn from_iter<I: IntoIterator<Item = StateId>>(iter: I) -> Self {
        let mut s = StateSet::new();
        for q in iter {
            s.insert(q);
        }
        s
    }
}

impl Extend<StateId> for StateSet {
    fn extend<I: IntoIterator<Item = StateId>>(&mut self, iter: I) {
        for q in iter {
            self.insert(q);
        }
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equality_ignores_capacity() {
        let mut a = StateSet::with_capacity(100);
        a.insert(3);
        let b: StateSet = [3].into_iter().collect();
        assert_eq!(a, b);
        assert_ne!(a, StateSet::new());
    }

    #[test]
    fn set_algebra() {
        let a: StateSet = [1, 2, 3].into_iter().collect();
        let b: StateSet = [3, 40].into_iter().collect();
        assert_eq!(a.union(&b).to_vec(), vec![1, 2, 3, 40]);
        assert_eq!(a.intersection(&b).to_vec(), vec![3]);
        assert_eq!(a.difference(&b).to_vec(), vec![1, 2]);
        assert!(a.intersection(&b).is_subset(&b));
        assert!(!a.is_subset(&b));
    }
}
