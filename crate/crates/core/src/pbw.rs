//! Lazily straightened PBW modules over a mode algebra.
//!
//! A monomial `[(m1,k1), (m2,k2), ...]` stands for `x1 x2 ... v0`, where
//! `(m,k)` is the `k`-th basis element of the mode space at `m`. A mode is a
//! creation operator when `sign * m >= 1` and then has degree `sign * m`.
//! Monomials are kept nonincreasing in degree, with equal degrees sorted by
//! basis index ascending.

use std::cmp::Reverse;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, RwLock};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::liealg::ModeAlgebra;
use crate::scalar::Q;
use crate::sparse::{Coeff, SparseVec};

pub type ModeKey = (i64, usize);
pub type Mono = Vec<ModeKey>;
pub type Vector = SparseVec<Mono>;

type Bracket = (Vec<Q>, Q);

#[derive(Debug)]
pub struct PbwModule {
    alg: Arc<ModeAlgebra>,
    sign: i64,
    limit: usize,
    memo: RwLock<HashMap<(ModeKey, Mono), Vector>>,
    brackets: RwLock<HashMap<(ModeKey, ModeKey), Arc<Bracket>>>,
}

impl PbwModule {
    /// `sign = 1` gives lowest-weight modules generated by positive modes,
    /// `sign = -1` the vacuum module generated by negative modes.
    pub fn new(alg: Arc<ModeAlgebra>, sign: i64, limit: usize) -> Self {
        assert!(sign == 1 || sign == -1);
        Self { alg, sign, limit, memo: RwLock::new(HashMap::new()), brackets: RwLock::new(HashMap::new()) }
    }

    pub fn alg(&self) -> &Arc<ModeAlgebra> {
        &self.alg
    }

    pub fn sign(&self) -> i64 {
        self.sign
    }

    /// Highest degree any computation may reach.
    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn vacuum(&self) -> Vector {
        SparseVec::basis(Vec::new())
    }

    pub fn mode_degree(&self, m: i64) -> i64 {
        self.sign * m
    }

    fn rank(&self, k: &ModeKey) -> (i64, Reverse<usize>) {
        (self.sign * k.0, Reverse(k.1))
    }

    pub fn mono_degree(&self, mono: &Mono) -> i64 {
        mono.iter().map(|k| self.sign * k.0).sum()
    }

    /// Degree of a homogeneous vector; `None` for zero or mixed vectors.
    pub fn degree(&self, v: &Vector) -> Option<i64> {
        let mut ds = v.keys().map(|m| self.mono_degree(m));
        let d = ds.next()?;
        ds.all(|e| e == d).then_some(d)
    }

    pub fn max_degree(&self, v: &Vector) -> Option<i64> {
        v.keys().map(|m| self.mono_degree(m)).max()
    }

    fn bracket(&self, x: ModeKey, y: ModeKey) -> Arc<Bracket> {
        if let Some(b) = self.brackets.read().unwrap().get(&(x, y)) {
            return b.clone();
        }
        let u = self.alg.basis_vec(x.0, x.1);
        let v = self.alg.basis_vec(y.0, y.1);
        let (vec, c) = self.alg.bracket_vectors(x.0, &u, y.0, &v);
        let b = Arc::new((self.alg.coords(x.0 + y.0, &vec), c));
        self.brackets.write().unwrap().insert((x, y), b.clone());
        b
    }

    /// Apply the basis mode `x` to a monomial.
    pub fn apply_basis(&self, x: ModeKey, mono: &Mono) -> Result<Vector> {
        let d = self.mono_degree(mono) + self.sign * x.0;
        if d < 0 {
            return Ok(Vector::new());
        }
        if d as usize > self.limit {
            return Err(Error::WatermarkExceeded { degree: d as usize, limit: self.limit });
        }
        let creation = self.sign * x.0 >= 1;
        if mono.is_empty() {
            return Ok(if creation { SparseVec::basis(vec![x]) } else { Vector::new() });
        }
        if creation && self.rank(&x) >= self.rank(&mono[0]) {
            let mut m = Vec::with_capacity(mono.len() + 1);
            m.push(x);
            m.extend_from_slice(mono);
            return Ok(SparseVec::basis(m));
        }
        let key = (x, mono.clone());
        if let Some(v) = self.memo.read().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let y = mono[0];
        let rest: Mono = mono[1..].to_vec();
        let inner = self.apply_basis(x, &rest)?;
        let mut out = self.apply_key_vec(y, &inner)?;
        let br = self.bracket(x, y);
        for (k, c) in br.0.iter().enumerate() {
            if !c.is_zero() {
                out.add_scaled(&self.apply_basis((x.0 + y.0, k), &rest)?, c);
            }
        }
        if !br.1.is_zero() {
            out.add_term(rest, br.1.clone());
        }
        self.memo.write().unwrap().insert(key, out.clone());
        Ok(out)
    }

    pub fn apply_key_vec(&self, x: ModeKey, v: &Vector) -> Result<Vector> {
        let mut out = Vector::new();
        for (m, c) in v.iter() {
            out.add_scaled(&self.apply_basis(x, m)?, c);
        }
        Ok(out)
    }

    /// Apply the mode `u_m` for an arbitrary `u` in the Lie algebra.
    pub fn apply(&self, m: i64, u: &[Q], v: &Vector) -> Result<Vector> {
        let mut out = Vector::new();
        for (k, c) in self.alg.coords(m, u).iter().enumerate() {
            if !c.is_zero() {
                out.add_scaled(&self.apply_key_vec((m, k), v)?, c);
            }
        }
        Ok(out)
    }

    /// Apply the Lie basis mode `e_i(m)`.
    pub fn apply_generator(&self, i: usize, m: i64, v: &Vector) -> Result<Vector> {
        self.apply(m, &self.alg.lie().basis_vec(i), v)
    }

    /// Creation keys of degree `d`, highest rank first.
    fn keys_of_degree(&self, d: i64) -> Vec<ModeKey> {
        let m = self.sign * d;
        (0..self.alg.mode_dim(m)).map(|k| (m, k)).collect()
    }

    /// PBW monomials of degree `d`.
    pub fn basis(&self, d: usize) -> Vec<Mono> {
        let mut out = Vec::new();
        self.extend_basis(d as i64, None, &mut Vec::new(), &mut out);
        out
    }

    fn extend_basis(&self, left: i64, cap: Option<ModeKey>, cur: &mut Mono, out: &mut Vec<Mono>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for part in (1..=left).rev() {
            for key in self.keys_of_degree(part) {
                if cap.is_none_or(|c| self.rank(&key) <= self.rank(&c)) {
                    cur.push(key);
                    self.extend_basis(left - part, Some(key), cur, out);
                    cur.pop();
                }
            }
        }
    }

    pub fn dims(&self, max: usize) -> Vec<usize> {
        (0..=max).map(|d| self.basis(d).len()).collect()
    }

    /// Label of a basis mode: the Lie label when the mode-space vector is a
    /// unit vector, otherwise its coordinates.
    pub fn key_label(&self, k: ModeKey) -> String {
        let v = self.alg.basis_vec(k.0, k.1);
        let nz: Vec<usize> = (0..v.len()).filter(|&i| !v[i].is_zero()).collect();
        let name = if nz.len() == 1 && v[nz[0]].is_one() {
            self.alg.lie().labels[nz[0]].clone()
        } else {
            crate::linalg::fmt_vec(&v)
        };
        format!("{name}({})", k.0)
    }

    pub fn mono_label(&self, m: &Mono) -> String {
        let mut s = String::new();
        for k in m {
            s.push_str(&self.key_label(*k));
        }
        s.push_str(if self.sign > 0 { "v0" } else { "1" });
        s
    }

    pub fn vector_label(&self, v: &Vector) -> String {
        if v.is_empty() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, (m, c)) in v.iter().enumerate() {
            let _ = write!(s, "{}{}*{}", if i > 0 { " + " } else { "" }, c, self.mono_label(m));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::{GammaData, LieData};
    use crate::scalar::q;
    use proptest::prelude::*;

    fn partitions(n: usize, odd_only: bool) -> usize {
        let mut p = vec![0usize; n + 1];
        p[0] = 1;
        for part in 1..=n {
            if odd_only && part % 2 == 0 {
                continue;
            }
            for k in part..=n {
                p[k] += p[k - part];
            }
        }
        p[n]
    }

    fn module(lie: LieData, gamma: GammaData, level: Q, sign: i64) -> PbwModule {
        PbwModule::new(Arc::new(ModeAlgebra::new(lie, gamma, level)), sign, 8)
    }

    #[test]
    fn fock_dimensions_are_partition_numbers() {
        let m = module(LieData::abelian(1), GammaData::trivial(1), q(1), 1);
        assert_eq!(m.dims(4), vec![1, 1, 2, 3, 5]);
        for d in 0..=7 {
            assert_eq!(m.basis(d).len(), partitions(d, false));
        }
    }

    #[test]
    fn twisted_dimensions_count_odd_partitions() {
        let m = module(LieData::abelian(1), GammaData::z2_negation(1), q(1), 1);
        for d in 0..=7 {
            assert_eq!(m.basis(d).len(), partitions(d, true), "degree {d}");
        }
    }

    #[test]
    fn sl2_vacuum_dimensions() {
        let m = module(LieData::sl2(), GammaData::trivial(3), q(1), -1);
        assert_eq!(m.dims(2), vec![1, 3, 9]);
        assert!(m.basis(2).iter().all(|b| b.windows(2).all(|w| w[0].0 < w[1].0 || (w[0].0 == w[1].0 && w[0].1 <= w[1].1))));
    }

    #[test]
    fn lowering_after_raising_gives_minus_level() {
        for l in [q(1), q(2), q(-1)] {
            let m = module(LieData::abelian(1), GammaData::trivial(1), l.clone(), 1);
            let raised = m.apply_generator(0, 1, &m.vacuum()).unwrap();
            let back = m.apply_generator(0, -1, &raised).unwrap();
            assert_eq!(back, SparseVec::term(vec![], -l));
        }
    }

    #[test]
    fn low_modes_kill_the_lowest_vector() {
        let m = module(LieData::sl2(), GammaData::trivial(3), q(1), 1);
        for n in -3..=0 {
            for i in 0..3 {
                assert!(m.apply_generator(i, n, &m.vacuum()).unwrap().is_empty());
            }
        }
    }

    #[test]
    fn even_twisted_modes_vanish() {
        let m = module(LieData::abelian(1), GammaData::z2_negation(1), q(1), 1);
        let w = m.apply_generator(0, 3, &m.apply_generator(0, 1, &m.vacuum()).unwrap()).unwrap();
        for n in [-4, -2, 0, 2] {
            assert!(m.apply_generator(0, n, &w).unwrap().is_empty());
        }
    }

    #[test]
    fn watermark_is_enforced() {
        let m = module(LieData::abelian(1), GammaData::trivial(1), q(1), 1);
        assert!(matches!(m.apply_generator(0, 9, &m.vacuum()), Err(Error::WatermarkExceeded { degree: 9, limit: 8 })));
    }

    fn commutator_holds(m: &PbwModule, a: usize, i: i64, b: usize, j: i64, w: &Vector) -> bool {
        let ab = m.apply_generator(a, i, &m.apply_generator(b, j, w).unwrap()).unwrap();
        let ba = m.apply_generator(b, j, &m.apply_generator(a, i, w).unwrap()).unwrap();
        let alg = m.alg();
        let act = |k: i64, u: &[Q], v: &Vector| m.apply(k, u, v).unwrap();
        let rhs = alg.mode_bracket_apply(a, i, b, j, w, &act, -(m.limit() as i64) - 1);
        ab.sub(&ba) == rhs
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn modes_satisfy_the_bracket_sl2(a in 0usize..3, b in 0usize..3, i in -2i64..3, j in -2i64..3, d in 0usize..3, pick in 0usize..64, sign in prop::sample::select(vec![1i64, -1])) {
            let m = module(LieData::sl2(), GammaData::trivial(3), q(2), sign);
            let basis = m.basis(d);
            let w = SparseVec::basis(basis[pick % basis.len()].clone());
            prop_assert!(commutator_holds(&m, a, i, b, j, &w));
        }

        #[test]
        fn modes_satisfy_the_bracket_twisted(i in -4i64..5, j in -4i64..5, d in 0usize..5, pick in 0usize..64) {
            // degree can reach 4 + 4 + 4
            let m = PbwModule::new(Arc::new(ModeAlgebra::new(LieData::abelian(1), GammaData::z2_negation(1), q(3))), 1, 12);
            let basis = m.basis(d);
            let w = SparseVec::basis(basis[pick % basis.len()].clone());
            prop_assert!(commutator_holds(&m, 0, i, 0, j, &w));
        }
    }
}
