//! The chain index set `I_L = {(l, i) : 1 <= l <= L, 0 <= i <= l}` and dense
//! triangular storage over it.
//!
//! `l` is the chain length in cellobiose units and `i` the number of landing
//! sites on the chain. Enumeration is row-major: all of `l = 1`, then `l = 2`,
//! and so on, with `i` increasing inside a row.

use serde::{Deserialize, Serialize};

/// The index set `I_L`, optionally restricted to `i >= FIRST`.
///
/// `FIRST = 0` is the full chain set (counts `N_{l,i}`); `FIRST = 1` is the
/// set of chain states that carry at least one site (attached enzyme
/// `e22^{l,i}`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triangle<const FIRST: usize> {
    max_len: usize,
}

pub type IndexSetIL = Triangle<0>;
pub type SiteIndexSet = Triangle<1>;

impl<const FIRST: usize> Triangle<FIRST> {
    pub fn new(max_len: usize) -> Self {
        Self { max_len }
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// Number of members. For the full set this is `L(L+3)/2`.
    pub fn len(&self) -> usize {
        let l = self.max_len;
        l * (l + 1) / 2 + l * (1 - FIRST)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, l: usize, i: usize) -> bool {
        l >= 1 && l <= self.max_len && i >= FIRST && i <= l
    }

    /// Same as [`contains`](Self::contains) but accepts signed indices, so
    /// neighbours like `(l, i - 1)` can be probed without underflow.
    pub fn contains_signed(&self, l: i64, i: i64) -> bool {
        l >= 1 && i >= 0 && self.contains(l as usize, i as usize)
    }

    /// Flat offset of `(l, i)`, or `None` outside the set.
    #[inline]
    pub fn index(&self, l: usize, i: usize) -> Option<usize> {
        if self.contains(l, i) {
            Some(self.offset_unchecked(l, i))
        } else {
            None
        }
    }

    #[inline]
    pub(crate) fn offset_unchecked(&self, l: usize, i: usize) -> usize {
        (l - 1) * l / 2 + (l - 1) * (1 - FIRST) + (i - FIRST)
    }

    /// Members in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> {
        (1..=self.max_len).flat_map(|l| (FIRST..=l).map(move |i| (l, i)))
    }
}

/// A real value attached to every member of a [`Triangle`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriTable<const FIRST: usize> {
    max_len: usize,
    values: Vec<f64>,
}

/// Values over the full chain set `I_L`.
pub type ChainTable = TriTable<0>;
/// Values over the chain states with `i >= 1`.
pub type SiteTable = TriTable<1>;

impl<const FIRST: usize> TriTable<FIRST> {
    pub fn zeros(max_len: usize) -> Self {
        Self::uniform(max_len, 0.0)
    }

    /// One value broadcast over the whole set.
    pub fn uniform(max_len: usize, value: f64) -> Self {
        let n = Triangle::<FIRST>::new(max_len).len();
        Self {
            max_len,
            values: vec![value; n],
        }
    }

    /// Builds a table from a function of `(l, i)`.
    pub fn from_fn(max_len: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let set = Triangle::<FIRST>::new(max_len);
        let values = set.iter().map(|(l, i)| f(l, i)).collect();
        Self { max_len, values }
    }

    /// Wraps a flat row-major slice; `None` if the length does not match.
    pub fn from_flat(max_len: usize, values: &[f64]) -> Option<Self> {
        (values.len() == Triangle::<FIRST>::new(max_len).len()).then(|| Self {
            max_len,
            values: values.to_vec(),
        })
    }

    pub fn index_set(&self) -> Triangle<FIRST> {
        Triangle::new(self.max_len)
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// Value at `(l, i)`; zero outside the set.
    #[inline]
    pub fn get(&self, l: usize, i: usize) -> f64 {
        self.index_set()
            .index(l, i)
            .map_or(0.0, |k| self.values[k])
    }

    /// Panics if `(l, i)` is outside the set.
    pub fn set(&mut self, l: usize, i: usize, value: f64) {
        let k = self
            .index_set()
            .index(l, i)
            .unwrap_or_else(|| panic!("({l},{i}) outside index set (L = {})", self.max_len));
        self.values[k] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.index_set().iter().zip(self.values.iter().copied())
    }

    pub fn is_uniform(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }

    /// The broadcast value when uniform.
    pub fn uniform_value(&self) -> Option<f64> {
        if self.is_uniform() {
            self.values.first().copied()
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_matches_triangle() {
        let set = IndexSetIL::new(3);
        assert!(set.contains(1, 0));
        assert!(set.contains(1, 1));
        assert!(set.contains(3, 3));
        assert!(!set.contains(0, 0));
        assert!(!set.contains(2, 3));
        assert!(!set.contains(4, 0));
        assert!(!set.contains_signed(2, -1));
        let sites = SiteIndexSet::new(3);
        assert!(!sites.contains(2, 0));
        assert!(sites.contains(2, 2));
    }

    #[test]
    fn enumeration_is_row_major_and_dense() {
        let set = IndexSetIL::new(3);
        let members: Vec<_> = set.iter().collect();
        assert_eq!(
            members,
            vec![(1, 0), (1, 1), (2, 0), (2, 1), (2, 2), (3, 0), (3, 1), (3, 2), (3, 3)]
        );
        for (k, (l, i)) in set.iter().enumerate() {
            assert_eq!(set.index(l, i), Some(k));
        }
        let sites = SiteIndexSet::new(3);
        for (k, (l, i)) in sites.iter().enumerate() {
            assert_eq!(sites.index(l, i), Some(k));
        }
    }

    #[test]
    fn member_counts() {
        for l in 0..40 {
            assert_eq!(IndexSetIL::new(l).len(), l * (l + 3) / 2);
            assert_eq!(IndexSetIL::new(l).iter().count(), l * (l + 3) / 2);
            assert_eq!(SiteIndexSet::new(l).len(), l * (l + 1) / 2);
            assert_eq!(SiteIndexSet::new(l).iter().count(), l * (l + 1) / 2);
        }
    }

    #[test]
    fn table_outside_reads_zero() {
        let mut t = ChainTable::uniform(2, 3.0);
        assert_eq!(t.get(3, 0), 0.0);
        assert_eq!(t.get(1, 2), 0.0);
        t.set(2, 1, 7.0);
        assert_eq!(t.get(2, 1), 7.0);
        assert!(!t.is_uniform());
        assert_eq!(ChainTable::uniform(4, 1.5).uniform_value(), Some(1.5));
    }
}
