//! The vacuum vertex algebra `V(ℓ, 0)` of an affine algebra, truncated by degree.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::liealg::{GammaData, LieData, ModeAlgebra};
use crate::pbw::{Mono, PbwModule, Vector};
use crate::report::{CheckEntry, Counterexample};
use crate::scalar::{binom, factorial, q, qpow, Q};
use crate::sparse::{Coeff, SparseVec};

#[derive(Debug)]
pub struct VacuumVA {
    pbw: Arc<PbwModule>,
    cutoff: usize,
    memo: RwLock<HashMap<(Mono, i64, Mono), Vector>>,
}

/// PBW basis in modes `a(-n)`, `n >= 1`, with the vertex operators
/// reconstructed from the generators.
pub fn build_vacuum(lie: LieData, level: Q, cutoff: usize) -> VacuumVA {
    let dim = lie.dim();
    let alg = Arc::new(ModeAlgebra::new(lie, GammaData::trivial(dim), level));
    VacuumVA { pbw: Arc::new(PbwModule::new(alg, -1, 2 * cutoff + 2)), cutoff, memo: RwLock::new(HashMap::new()) }
}

impl VacuumVA {
    pub fn pbw(&self) -> &Arc<PbwModule> {
        &self.pbw
    }

    pub fn lie(&self) -> &LieData {
        self.pbw.alg().lie()
    }

    pub fn level(&self) -> &Q {
        self.pbw.alg().level()
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn vacuum(&self) -> Vector {
        self.pbw.vacuum()
    }

    /// `e_i(-1) 1`.
    pub fn generator(&self, i: usize) -> Vector {
        SparseVec::basis(vec![(-1, i)])
    }

    pub fn basis(&self, d: usize) -> Vec<Mono> {
        self.pbw.basis(d)
    }

    pub fn dims(&self) -> Vec<usize> {
        self.pbw.dims(self.cutoff)
    }

    pub fn degree(&self, v: &Vector) -> Option<i64> {
        self.pbw.degree(v)
    }

    fn max_degree(&self, v: &Vector) -> i64 {
        self.pbw.max_degree(v).unwrap_or(0)
    }

    /// `u_n v`.
    pub fn vertex_mode(&self, u: &Vector, n: i64, v: &Vector) -> Result<Vector> {
        let mut out = Vector::new();
        for (mu, cu) in u.iter() {
            for (mv, cv) in v.iter() {
                out.add_scaled(&self.mode_basis(mu, n, mv)?, &(cu * cv));
            }
        }
        Ok(out)
    }

    fn mode_basis(&self, u: &Mono, n: i64, v: &Mono) -> Result<Vector> {
        let (du, dv) = (self.pbw.mono_degree(u), self.pbw.mono_degree(v));
        let d = du + dv - n - 1;
        if d < 0 {
            return Ok(Vector::new());
        }
        if d as usize > self.pbw.limit() {
            return Err(Error::WatermarkExceeded { degree: d as usize, limit: self.pbw.limit() });
        }
        let vv = SparseVec::basis(v.clone());
        if u.is_empty() {
            return Ok(if n == -1 { vv } else { Vector::new() });
        }
        let key = (u.clone(), n, v.clone());
        if let Some(r) = self.memo.read().unwrap().get(&key) {
            return Ok(r.clone());
        }
        // (a_p u')_n v = Σ_i (-1)^i C(p,i) [a_{p-i} u'_{n+i} v - (-1)^p u'_{p+n-i} a_i v]
        let (p, k) = u[0];
        let rest: Vector = SparseVec::basis(u[1..].to_vec());
        let drest = du + p;
        let sign_p = if p % 2 == 0 { q(1) } else { q(-1) };
        let mut out = Vector::new();
        let imax = (drest + dv - 1 - n).max(dv);
        for i in 0..=imax {
            let c = binom(p, i) * if i % 2 == 0 { q(1) } else { q(-1) };
            if c.is_zero() {
                continue;
            }
            if n + i < drest + dv {
                let inner = self.vertex_mode(&rest, n + i, &vv)?;
                out.add_scaled(&self.pbw.apply_key_vec((p - i, k), &inner)?, &c);
            }
            if i <= dv {
                let av = self.pbw.apply_key_vec((i, k), &vv)?;
                out.add_scaled(&self.vertex_mode(&rest, p + n - i, &av)?, &(-&c * &sign_p));
            }
        }
        self.memo.write().unwrap().insert(key, out.clone());
        Ok(out)
    }

    /// `u_n v` for every `n` whose result has degree at most the cutoff.
    pub fn vertex_modes(&self, u: &Vector, v: &Vector) -> Result<BTreeMap<i64, Vector>> {
        let top = self.max_degree(u) + self.max_degree(v) - 1;
        let bottom = top - self.cutoff as i64;
        let mut out = BTreeMap::new();
        for n in bottom..=top {
            let r = self.vertex_mode(u, n, v)?;
            if !r.is_empty() {
                out.insert(n, r);
            }
        }
        Ok(out)
    }

    /// Translation `T v = v_{-2} 1`.
    pub fn translate(&self, v: &Vector) -> Result<Vector> {
        self.vertex_mode(v, -2, &self.vacuum())
    }

    /// `L(γ) = φ(γ)^{L(0)} γ`.
    pub fn gamma_action(&self, gamma: &GammaData, g: usize, v: &Vector) -> Result<Vector> {
        let phi = gamma.phi(g);
        let mut out = Vector::new();
        for (mono, c) in v.iter() {
            let mut acc = self.vacuum();
            for &(m, k) in mono.iter().rev() {
                let gv = gamma.act(g, &self.lie().basis_vec(k));
                acc = self.pbw.apply(m, &gv, &acc)?;
            }
            out.add_scaled(&acc, &(c * qpow(&phi, self.pbw.mono_degree(mono))));
        }
        Ok(out)
    }

    pub fn label(&self, v: &Vector) -> String {
        self.pbw.vector_label(v)
    }

    /// `[u_m, v_n] w = Σ_i C(m,i) (u_i v)_{m+n-i} w` on every probe.
    pub fn borcherds_commutator_check(&self, u: &Vector, v: &Vector, m: i64, n: i64, probes: &[Vector]) -> Result<Option<Counterexample>> {
        let imax = self.max_degree(u) + self.max_degree(v) - 1;
        for w in probes {
            let lhs = self
                .vertex_mode(u, m, &self.vertex_mode(v, n, w)?)?
                .sub(&self.vertex_mode(v, n, &self.vertex_mode(u, m, w)?)?);
            let mut rhs = Vector::new();
            for i in 0..=imax {
                let c = binom(m, i);
                if !c.is_zero() {
                    let uv = self.vertex_mode(u, i, v)?;
                    rhs.add_scaled(&self.vertex_mode(&uv, m + n - i, w)?, &c);
                }
            }
            if lhs != rhs {
                return Ok(Some(Counterexample {
                    vector: self.label(w),
                    exponents: Some((m, n)),
                    expected: self.label(&lhs),
                    actual: self.label(&rhs),
                }));
            }
        }
        Ok(None)
    }

    /// `u_n v = Σ_j (-1)^{n+j+1} T^j (v_{n+j} u) / j!`.
    pub fn skew_symmetry_check(&self, u: &Vector, v: &Vector, n: i64) -> Result<bool> {
        let lhs = self.vertex_mode(u, n, v)?;
        let top = self.max_degree(u) + self.max_degree(v) - 1;
        let mut rhs = Vector::new();
        for j in 0..=(top - n).max(0) {
            let mut t = self.vertex_mode(v, n + j, u)?;
            for _ in 0..j {
                t = self.translate(&t)?;
            }
            let s = if (n + j + 1) % 2 == 0 { q(1) } else { q(-1) };
            rhs.add_scaled(&t, &(s / factorial(j as u32)));
        }
        Ok(lhs == rhs)
    }

    /// Grading, creation, skew-symmetry, commutator formula on generators,
    /// and `L` as a vacuum-fixing homomorphism.
    pub fn spot_checks(&self, gamma: &GammaData, modes: std::ops::RangeInclusive<i64>) -> Result<Vec<CheckEntry>> {
        let dim = self.lie().dim();
        let gens: Vec<Vector> = (0..dim).map(|i| self.generator(i)).collect();
        let probes: Vec<Vector> =
            (0..=self.cutoff.saturating_sub(2)).flat_map(|d| self.basis(d)).map(SparseVec::basis).collect();
        let mut out = Vec::new();

        let mut bad = None;
        'grading: for d1 in 0..=self.cutoff / 2 {
            for u in self.basis(d1) {
                let u = SparseVec::basis(u);
                for v in self.basis(self.cutoff / 2) {
                    let v = SparseVec::basis(v);
                    for (n, r) in self.vertex_modes(&u, &v)? {
                        if self.degree(&r) != Some(d1 as i64 + (self.cutoff / 2) as i64 - n - 1) {
                            bad = Some(format!("{}_{n} {}", self.label(&u), self.label(&v)));
                            break 'grading;
                        }
                    }
                }
            }
        }
        out.push(match bad {
            None => CheckEntry::pass("va.grading", "deg u_n v = deg u + deg v - n - 1", "all sampled pairs"),
            Some(d) => CheckEntry::fail("va.grading", "deg u_n v = deg u + deg v - n - 1", d),
        });

        let mut bad = None;
        for d in 0..=self.cutoff {
            for m in self.basis(d) {
                let u = SparseVec::basis(m);
                if self.vertex_mode(&u, -1, &self.vacuum())? != u
                    || (0..3).any(|n| !self.vertex_mode(&u, n, &self.vacuum()).map(|r| r.is_empty()).unwrap_or(false))
                {
                    bad = Some(self.label(&u));
                }
            }
        }
        out.push(match bad {
            None => CheckEntry::pass("va.creation", "u_{-1}1 = u and u_n 1 = 0 for n >= 0", "all basis vectors"),
            Some(d) => CheckEntry::fail("va.creation", "u_{-1}1 = u and u_n 1 = 0 for n >= 0", d),
        });

        let mut bad = None;
        for (i, a) in gens.iter().enumerate() {
            for (j, b) in gens.iter().enumerate() {
                for n in -2..=1 {
                    if bad.is_none() && !self.skew_symmetry_check(a, b, n)? {
                        bad = Some(format!("({}, {}) n = {n}", self.lie().labels[i], self.lie().labels[j]));
                    }
                }
            }
        }
        out.push(match bad {
            None => CheckEntry::pass("va.skew-symmetry", "u_n v = sum_j (-1)^(n+j+1) T^j(v_(n+j) u)/j!", "generator pairs"),
            Some(d) => CheckEntry::fail("va.skew-symmetry", "u_n v = sum_j (-1)^(n+j+1) T^j(v_(n+j) u)/j!", d),
        });

        let mut cx = None;
        'comm: for a in &gens {
            for b in &gens {
                for m in modes.clone() {
                    for n in modes.clone() {
                        if let Some(c) = self.borcherds_commutator_check(a, b, m, n, &probes)? {
                            cx = Some(c);
                            break 'comm;
                        }
                    }
                }
            }
        }
        let anchor = "[u_m, v_n] = sum_i C(m,i) (u_i v)_(m+n-i)";
        out.push(match cx {
            None => CheckEntry::pass("va.commutator", anchor, format!("generator pairs, modes {modes:?}")),
            Some(c) => CheckEntry::fail("va.commutator", anchor, "mismatch").with_counterexample(c),
        });

        let mut bad = None;
        for g in 0..gamma.len() {
            if self.gamma_action(gamma, g, &self.vacuum())? != self.vacuum() {
                bad = Some(format!("L({}) moves the vacuum", gamma.elements()[g].name));
            }
            for h in 0..gamma.len() {
                let Some(gh) = gamma.mul(g, h) else { continue };
                for d in 0..=self.cutoff.min(3) {
                    for m in self.basis(d) {
                        let v = SparseVec::basis(m);
                        let two = self.gamma_action(gamma, g, &self.gamma_action(gamma, h, &v)?)?;
                        if bad.is_none() && two != self.gamma_action(gamma, gh, &v)? {
                            bad = Some(format!("L({})L({}) on {}", gamma.elements()[g].name, gamma.elements()[h].name, self.label(&v)));
                        }
                    }
                }
            }
        }
        out.push(match bad {
            None => CheckEntry::pass("va.gamma-action", "L(g) = phi(g)^L(0) g is a homomorphism fixing 1", "all pairs"),
            Some(d) => CheckEntry::fail("va.gamma-action", "L(g) = phi(g)^L(0) g is a homomorphism fixing 1", d),
        });
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn all_upto(va: &VacuumVA, d: usize) -> Vec<Vector> {
        (0..=d).flat_map(|k| va.basis(k)).map(SparseVec::basis).collect()
    }

    #[test]
    fn dimensions() {
        assert_eq!(build_vacuum(LieData::abelian(1), q(1), 4).dims(), vec![1, 1, 2, 3, 5]);
        assert_eq!(build_vacuum(LieData::sl2(), q(1), 1).dims(), vec![1, 3]);
        let va = build_vacuum(LieData::sl2(), q(1), 3);
        assert_eq!(va.basis(0), vec![Vec::<(i64, usize)>::new()]);
    }

    #[test]
    fn first_mode_of_generators_is_the_level() {
        for l in [1, 2, -3] {
            let va = build_vacuum(LieData::abelian(1), q(l), 3);
            let a = va.generator(0);
            assert_eq!(va.vertex_mode(&a, 1, &a).unwrap(), va.vacuum().scale(&q(l)));
        }
    }

    #[test]
    fn opposite_algebra_modes() {
        let lie = LieData::sl2();
        let l = q(2);
        let va = build_vacuum(lie.opposite(), -l.clone(), 3);
        for i in 0..3 {
            for j in 0..3 {
                let (u, v) = (va.generator(i), va.generator(j));
                let br = lie.bracket(&lie.basis_vec(i), &lie.basis_vec(j));
                let mut want = Vector::new();
                for (k, c) in br.iter().enumerate() {
                    want.add_term(vec![(-1, k)], -c);
                }
                assert_eq!(va.vertex_mode(&u, 0, &v).unwrap(), want);
                let f = lie.form(&lie.basis_vec(i), &lie.basis_vec(j));
                assert_eq!(va.vertex_mode(&u, 1, &v).unwrap(), va.vacuum().scale(&(-&l * f)));
            }
        }
    }

    #[test]
    fn creation_property() {
        let va = build_vacuum(LieData::sl2(), q(1), 3);
        for u in all_upto(&va, 3) {
            assert_eq!(va.vertex_mode(&u, -1, &va.vacuum()).unwrap(), u);
            for n in 0..4 {
                assert!(va.vertex_mode(&u, n, &va.vacuum()).unwrap().is_empty());
            }
        }
    }

    /// `:ab:_n = Σ_{k<0} a_k b_{n-k-1} + Σ_{k>=0} b_{n-k-1} a_k` on generators.
    #[test]
    fn composite_modes_match_normal_ordering() {
        let va = build_vacuum(LieData::sl2(), q(3), 4);
        let p = va.pbw().clone();
        for (i, j) in [(0, 2), (2, 0), (1, 1)] {
            let ab = p.apply_generator(i, -1, &va.generator(j)).unwrap();
            for w in all_upto(&va, 2) {
                let dw = va.max_degree(&w);
                for n in -2..=2 {
                    let mut want = Vector::new();
                    for k in (-(dw + 4))..0 {
                        let bw = p.apply_generator(j, n - k - 1, &w).unwrap();
                        want.add_scaled(&p.apply_generator(i, k, &bw).unwrap(), &q(1));
                    }
                    for k in 0..=dw {
                        let aw = p.apply_generator(i, k, &w).unwrap();
                        want.add_scaled(&p.apply_generator(j, n - k - 1, &aw).unwrap(), &q(1));
                    }
                    assert_eq!(va.vertex_mode(&ab, n, &w).unwrap(), want, "({i},{j}) n={n}");
                }
            }
        }
    }

    #[test]
    fn borcherds_examples() {
        let va = build_vacuum(LieData::abelian(1), q(2), 4);
        let a = va.generator(0);
        assert!(va.borcherds_commutator_check(&a, &a, 1, -1, &[va.vacuum()]).unwrap().is_none());
        let lhs = va.vertex_mode(&a, 1, &va.vertex_mode(&a, -1, &va.vacuum()).unwrap()).unwrap();
        assert_eq!(lhs, va.vacuum().scale(&q(2)));
        let one = va.vacuum();
        assert!(va.borcherds_commutator_check(&one, &a, 0, -2, &all_upto(&va, 2)).unwrap().is_none());
        let sl = build_vacuum(LieData::sl2(), q(1), 4);
        assert!(sl.borcherds_commutator_check(&sl.generator(0), &sl.generator(2), 0, 0, &all_upto(&sl, 2)).unwrap().is_none());
    }

    #[test]
    fn sl2_spot_checks_pass() {
        let va = build_vacuum(LieData::sl2(), q(1), 3);
        let entries = va.spot_checks(&GammaData::trivial(3), -1..=1).unwrap();
        assert!(entries.iter().all(|e| e.passed), "{entries:?}");
    }

    #[test]
    fn twisted_gamma_action() {
        let va = build_vacuum(LieData::abelian(1), q(1), 4);
        let gamma = GammaData::z2_negation(1);
        let a = va.generator(0);
        assert_eq!(va.gamma_action(&gamma, 1, &va.vacuum()).unwrap(), va.vacuum());
        assert_eq!(va.gamma_action(&gamma, 1, &a).unwrap(), a);
        let t = va.translate(&a).unwrap();
        assert_eq!(va.gamma_action(&gamma, 1, &t).unwrap(), t.scale(&q(-1)));
        let phi = gamma.phi(1);
        for n in -3..=3 {
            let lhs = va.gamma_action(&gamma, 1, &va.vertex_mode(&a, n, &a).unwrap()).unwrap();
            let la = va.gamma_action(&gamma, 1, &a).unwrap();
            let rhs = va.vertex_mode(&la, n, &la).unwrap().scale(&qpow(&phi, -n - 1));
            assert_eq!(lhs, rhs, "n = {n}");
        }
        assert!(va.spot_checks(&gamma, -2..=2).unwrap().iter().all(|e| e.passed));
    }

    #[test]
    fn watermark_is_reported() {
        let va = build_vacuum(LieData::abelian(1), q(1), 2);
        let a = va.generator(0);
        assert!(matches!(va.vertex_mode(&a, -9, &a), Err(Error::WatermarkExceeded { .. })));
    }

    #[test]
    fn broken_bracket_fails_the_commutator_check() {
        let mut lie = LieData::sl2();
        lie.structure[0][2][1] = q(2);
        lie.structure[2][0][1] = q(-2);
        let va = build_vacuum(lie, q(1), 3);
        let e = va.spot_checks(&GammaData::trivial(3), -1..=1).unwrap();
        assert!(e.iter().any(|e| !e.passed));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn grading_law(i in 0usize..3, j in 0usize..3, d in 0usize..2, pick in 0usize..16, n in -3i64..3) {
            let va = build_vacuum(LieData::sl2(), q(1), 4);
            let b = va.basis(d);
            let v = SparseVec::basis(b[pick % b.len()].clone());
            let u = va.pbw().apply_generator(i, -1, &va.generator(j)).unwrap();
            let r = va.vertex_mode(&u, n, &v).unwrap();
            if !r.is_empty() {
                prop_assert_eq!(va.degree(&r), Some(2 + d as i64 - n - 1));
            }
        }
    }
}
