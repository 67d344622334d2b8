//! Sparse vectors over `Q` and the coefficient trait used by the series types.

use std::collections::BTreeMap;
use std::fmt::Debug;

use num_traits::Zero;

use crate::scalar::Q;

/// Coefficient ring element for series: either a scalar or a module vector.
pub trait Coeff: Clone + PartialEq + Debug + Send + Sync {
    fn nil() -> Self;
    fn is_nil(&self) -> bool;
    fn add_assign(&mut self, other: &Self);
    fn add_scaled(&mut self, other: &Self, s: &Q);
    fn scale(&self, s: &Q) -> Self;
}

impl Coeff for Q {
    fn nil() -> Self {
        Zero::zero()
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn add_scaled(&mut self, other: &Self, s: &Q) {
        *self += other * s;
    }
    fn scale(&self, s: &Q) -> Self {
        self * s
    }
}

/// Finitely supported vector with basis labels `K`; zero entries are never stored.
#[derive(Clone, PartialEq, Eq, Debug, Default, Hash, PartialOrd, Ord)]
pub struct SparseVec<K: Ord> {
    entries: BTreeMap<K, Q>,
}

impl<K: Ord + Clone> SparseVec<K> {
    pub fn new() -> Self {
        Self { entries: BTreeMap::new() }
    }

    pub fn basis(k: K) -> Self {
        Self::term(k, crate::scalar::q(1))
    }

    pub fn term(k: K, c: Q) -> Self {
        let mut v = Self::new();
        v.add_term(k, c);
        v
    }

    pub fn add_term(&mut self, k: K, c: Q) {
        if c.is_zero() {
            return;
        }
        let slot = self.entries.entry(k.clone()).or_insert_with(Q::zero);
        *slot += c;
        if slot.is_zero() {
            self.entries.remove(&k);
        }
    }

    pub fn get(&self, k: &K) -> Q {
        self.entries.get(k).cloned().unwrap_or_else(Q::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &Q)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.entries.keys()
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled_vec(other, &crate::scalar::q(-1));
        out
    }

    pub fn add_scaled_vec(&mut self, other: &Self, s: &Q) {
        if s.is_zero() {
            return;
        }
        for (k, c) in &other.entries {
            self.add_term(k.clone(), c * s);
        }
    }
}

impl<K: Ord + Clone + Debug + Send + Sync> Coeff for SparseVec<K> {
    fn nil() -> Self {
        Self::new()
    }
    fn is_nil(&self) -> bool {
        self.entries.is_empty()
    }
    fn add_assign(&mut self, other: &Self) {
        self.add_scaled_vec(other, &crate::scalar::q(1));
    }
    fn add_scaled(&mut self, other: &Self, s: &Q) {
        self.add_scaled_vec(other, s);
    }
    fn scale(&self, s: &Q) -> Self {
        let mut out = Self::new();
        out.add_scaled_vec(self, s);
        out
    }
}

impl<K: Ord + Clone> FromIterator<(K, Q)> for SparseVec<K> {
    fn from_iter<I: IntoIterator<Item = (K, Q)>>(iter: I) -> Self {
        let mut v = Self::new();
        for (k, c) in iter {
            v.add_term(k, c);
        }
        v
    }
}
