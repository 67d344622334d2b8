//! Finite-dimensional Lie algebras with an invariant form, finite automorphism
//! groups with an affine character, and the twisted mode algebra they define.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lingroup::LinearMap;
use crate::linalg::{self, fmt_vec, Matrix};
use crate::report::{CheckEntry, Counterexample};
use crate::scalar::{binom, q, qpow, Q};

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct LieData {
    pub labels: Vec<String>,
    /// `structure[i][j][k]` is the coefficient of `e_k` in `[e_i, e_j]`.
    pub structure: Vec<Vec<Vec<Q>>>,
    pub gram: Matrix,
}

impl LieData {
    pub fn new(labels: Vec<String>, structure: Vec<Vec<Vec<Q>>>, gram: Matrix) -> Self {
        Self { labels, structure, gram }
    }

    /// Abelian algebra of rank `r` with the identity form.
    pub fn abelian(r: usize) -> Self {
        let labels = if r == 1 { vec!["a".to_string()] } else { (1..=r).map(|i| format!("a{i}")).collect() };
        Self { labels, structure: vec![vec![vec![Q::zero(); r]; r]; r], gram: linalg::identity(r) }
    }

    /// `sl2` on the basis `(e, h, f)` with the trace form.
    pub fn sl2() -> Self {
        let z = || vec![Q::zero(); 3];
        let mut c = vec![vec![z(); 3]; 3];
        let (e, h, f) = (0, 1, 2);
        c[e][f][h] = q(1);
        c[f][e][h] = q(-1);
        c[h][e][e] = q(2);
        c[e][h][e] = q(-2);
        c[h][f][f] = q(-2);
        c[f][h][f] = q(2);
        let mut g = linalg::zeros(3, 3);
        g[e][f] = q(1);
        g[f][e] = q(1);
        g[h][h] = q(2);
        Self { labels: vec!["e".into(), "h".into(), "f".into()], structure: c, gram: g }
    }

    /// Same space with the bracket negated.
    pub fn opposite(&self) -> Self {
        let neg = self.structure.iter().map(|a| a.iter().map(|b| b.iter().map(|x| -x).collect()).collect()).collect();
        Self { labels: self.labels.clone(), structure: neg, gram: self.gram.clone() }
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn basis_vec(&self, i: usize) -> Vec<Q> {
        let mut v = vec![Q::zero(); self.dim()];
        v[i] = Q::one();
        v
    }

    pub fn bracket(&self, u: &[Q], v: &[Q]) -> Vec<Q> {
        let n = self.dim();
        let mut out = vec![Q::zero(); n];
        for (i, ui) in u.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
            for (j, vj) in v.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
                let w = ui * vj;
                for (k, c) in self.structure[i][j].iter().enumerate() {
                    if !c.is_zero() {
                        out[k] += c * &w;
                    }
                }
            }
        }
        out
    }

    pub fn form(&self, u: &[Q], v: &[Q]) -> Q {
        let gv = linalg::mat_vec(&self.gram, v);
        u.iter().zip(&gv).map(|(a, b)| a * b).sum()
    }

    /// `⟨[e_i, e_j], e_k⟩ - ⟨e_i, [e_j, e_k]⟩`.
    pub fn invariance_defect(&self, i: usize, j: usize, k: usize) -> Q {
        let (a, b, c) = (self.basis_vec(i), self.basis_vec(j), self.basis_vec(k));
        self.form(&self.bracket(&a, &b), &c) - self.form(&a, &self.bracket(&b, &c))
    }

    fn shape_ok(&self) -> bool {
        let n = self.dim();
        self.structure.len() == n
            && self.structure.iter().all(|r| r.len() == n && r.iter().all(|s| s.len() == n))
            && self.gram.len() == n
            && self.gram.iter().all(|r| r.len() == n)
    }

    /// A nonzero vector orthogonal to everything, taken from the first free
    /// column of the reduced gram matrix.
    fn radical_vector(&self) -> Vec<Q> {
        let (r, pivots) = linalg::rref(&self.gram);
        let n = self.dim();
        let mut v = vec![Q::zero(); n];
        if let Some(f) = (0..n).find(|c| !pivots.contains(c)) {
            v[f] = Q::one();
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = -r[row][f].clone();
            }
        }
        v
    }

    /// Check antisymmetry, Jacobi, symmetry and nondegeneracy of the form, and
    /// invariance; each failure names the first offending basis tuple.
    pub fn validate_algebra(&self) -> Vec<CheckEntry> {
        if !self.shape_ok() {
            return vec![CheckEntry::fail("lie.shape", "structure data of a Lie algebra", "dimension mismatch")];
        }
        let n = self.dim();
        let l = |i: usize| self.labels[i].clone();
        let mut out = Vec::new();
        let anti = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .find(|&(i, j)| (0..n).any(|k| self.structure[i][j][k] != -self.structure[j][i][k].clone()));
        out.push(match anti {
            None => CheckEntry::pass("lie.antisymmetry", "antisymmetry of the bracket", format!("{n}x{n} pairs")),
            Some((i, j)) => CheckEntry::fail("lie.antisymmetry", "antisymmetry of the bracket", format!("pair ({}, {})", l(i), l(j))),
        });
        let mut jac = None;
        'outer: for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let (a, b, c) = (self.basis_vec(i), self.basis_vec(j), self.basis_vec(k));
                    let t1 = self.bracket(&a, &self.bracket(&b, &c));
                    let t2 = self.bracket(&b, &self.bracket(&c, &a));
                    let t3 = self.bracket(&c, &self.bracket(&a, &b));
                    if t1.iter().zip(&t2).zip(&t3).any(|((x, y), z)| !(x + y + z).is_zero()) {
                        jac = Some((i, j, k));
                        break 'outer;
                    }
                }
            }
        }
        out.push(match jac {
            None => CheckEntry::pass("lie.jacobi", "Jacobi identity", "all basis triples"),
            Some((i, j, k)) => CheckEntry::fail("lie.jacobi", "Jacobi identity", format!("triple ({}, {}, {})", l(i), l(j), l(k))),
        });
        let sym = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).find(|&(i, j)| self.gram[i][j] != self.gram[j][i]);
        out.push(match sym {
            None => CheckEntry::pass("lie.form-symmetric", "symmetry of the bilinear form", "gram is symmetric"),
            Some((i, j)) => CheckEntry::fail("lie.form-symmetric", "symmetry of the bilinear form", format!("pair ({}, {})", l(i), l(j))),
        });
        let rank = linalg::rank(&self.gram);
        out.push(if rank == n {
            CheckEntry::pass("lie.form-nondegenerate", "nondegeneracy of the bilinear form", format!("rank {n}"))
        } else {
            CheckEntry::fail("lie.form-nondegenerate", "nondegeneracy of the bilinear form", format!("rank {rank} < {n}"))
                .with_counterexample(Counterexample {
                    vector: linalg::fmt_vec(&self.radical_vector()),
                    exponents: None,
                    expected: "nonzero pairing with some basis vector".into(),
                    actual: "0".into(),
                })
        });
        let inv = (0..n)
            .flat_map(|i| (0..n).flat_map(move |j| (0..n).map(move |k| (i, j, k))))
            .find(|&(i, j, k)| !self.invariance_defect(i, j, k).is_zero());
        out.push(match inv {
            None => CheckEntry::pass("lie.form-invariant", "invariance <[a,b],c> = <a,[b,c]>", "all basis triples"),
            Some((i, j, k)) => CheckEntry::fail(
                "lie.form-invariant",
                "invariance <[a,b],c> = <a,[b,c]>",
                format!("triple ({}, {}, {}): defect {}", l(i), l(j), l(k), self.invariance_defect(i, j, k)),
            )
            .with_counterexample(Counterexample {
                vector: format!("({}, {}, {})", l(i), l(j), l(k)),
                exponents: None,
                expected: "0".into(),
                actual: self.invariance_defect(i, j, k).to_string(),
            }),
        });
        out
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct GammaElement {
    pub name: String,
    pub matrix: Matrix,
    pub psi: LinearMap,
}

/// A finite group acting on the Lie algebra together with `Ψ: Γ → G`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GammaData {
    elements: Vec<GammaElement>,
    /// `table[g][h]` is the index of `g h` when the set is closed.
    table: Vec<Vec<Option<usize>>>,
}

impl GammaData {
    pub fn new(elements: Vec<GammaElement>) -> Self {
        let table = elements
            .iter()
            .map(|g| {
                elements
                    .iter()
                    .map(|h| {
                        let m = linalg::mat_mul(&g.matrix, &h.matrix);
                        let p = g.psi.compose(&h.psi);
                        elements.iter().position(|k| k.matrix == m && k.psi == p)
                    })
                    .collect()
            })
            .collect();
        Self { elements, table }
    }

    pub fn trivial(dim: usize) -> Self {
        Self::new(vec![GammaElement { name: "1".into(), matrix: linalg::identity(dim), psi: LinearMap::identity() }])
    }

    /// `{1, σ}` with `σ = -1` on the algebra and `Ψ(σ)(x) = -x`.
    pub fn z2_negation(dim: usize) -> Self {
        let neg = linalg::scale(&linalg::identity(dim), &q(-1));
        Self::new(vec![
            GammaElement { name: "1".into(), matrix: linalg::identity(dim), psi: LinearMap::identity() },
            GammaElement { name: "s".into(), matrix: neg, psi: LinearMap::scaling(q(-1)) },
        ])
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[GammaElement] {
        &self.elements
    }

    pub fn psi(&self, g: usize) -> &LinearMap {
        &self.elements[g].psi
    }

    /// `φ(g) = Φ(Ψ(g))`.
    pub fn phi(&self, g: usize) -> Q {
        self.elements[g].psi.phi()
    }

    pub fn act(&self, g: usize, v: &[Q]) -> Vec<Q> {
        linalg::mat_vec(&self.elements[g].matrix, v)
    }

    pub fn mul(&self, g: usize, h: usize) -> Option<usize> {
        self.table[g][h]
    }

    pub fn identity_index(&self) -> Option<usize> {
        self.elements.iter().position(|e| e.psi.is_identity() && e.matrix == linalg::identity(e.matrix.len()))
    }

    pub fn is_injective(&self) -> bool {
        (0..self.len()).all(|i| (0..i).all(|j| self.elements[i].psi != self.elements[j].psi))
    }

    pub fn translations_vanish(&self) -> bool {
        self.elements.iter().all(|e| e.psi.is_scaling())
    }

    /// Check that every element is a form-preserving automorphism, the set is a
    /// group, and `Ψ` and `φ` are homomorphisms.
    pub fn validate_gamma(&self, lie: &LieData) -> Vec<CheckEntry> {
        let n = lie.dim();
        let mut out = Vec::new();
        let shape = self.elements.iter().all(|e| e.matrix.len() == n && e.matrix.iter().all(|r| r.len() == n));
        if !shape {
            return vec![CheckEntry::fail("gamma.shape", "group elements act on the algebra", "matrix size mismatch")];
        }
        let mut auto = None;
        let mut form = None;
        for (g, el) in self.elements.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    let (a, b) = (lie.basis_vec(i), lie.basis_vec(j));
                    let (ga, gb) = (self.act(g, &a), self.act(g, &b));
                    if auto.is_none() && self.act(g, &lie.bracket(&a, &b)) != lie.bracket(&ga, &gb) {
                        auto = Some(format!("{} on ({}, {})", el.name, lie.labels[i], lie.labels[j]));
                    }
                    if form.is_none() && lie.form(&ga, &gb) != lie.form(&a, &b) {
                        form = Some(format!(
                            "{} on ({}, {}): {} != {}",
                            el.name,
                            lie.labels[i],
                            lie.labels[j],
                            lie.form(&ga, &gb),
                            lie.form(&a, &b)
                        ));
                    }
                }
            }
        }
        let entry = |id: &str, anchor: &str, bad: Option<String>, ok: &str| match bad {
            None => CheckEntry::pass(id, anchor, ok),
            Some(d) => CheckEntry::fail(id, anchor, d),
        };
        out.push(entry("gamma.automorphism", "g[a,b] = [ga,gb]", auto, "all elements"));
        out.push(entry("gamma.form-preserving", "<ga,gb> = <a,b>", form, "all elements"));
        let ident = self.identity_index();
        out.push(entry("gamma.identity", "group identity", ident.is_none().then(|| "no identity element".to_string()), "present"));
        let mut closure = None;
        let mut character = None;
        for g in 0..self.len() {
            for h in 0..self.len() {
                match self.mul(g, h) {
                    None if closure.is_none() => {
                        closure = Some(format!("{} * {}", self.elements[g].name, self.elements[h].name));
                    }
                    Some(k) if character.is_none() && self.phi(k) != self.phi(g) * self.phi(h) => {
                        character = Some(format!("{} * {}", self.elements[g].name, self.elements[h].name));
                    }
                    _ => {}
                }
            }
        }
        out.push(entry("gamma.closure", "Psi is a group homomorphism", closure, "closed under composition"));
        out.push(entry("gamma.character", "phi(g) = d/dx Psi(g)(x)", character, "phi is multiplicative"));
        out
    }
}

/// Basis of a mode space `g_n`, in reduced row echelon form.
#[derive(Clone, Debug)]
pub struct ModeSpace {
    pub basis: Vec<Vec<Q>>,
    pub pivots: Vec<usize>,
}

/// Bracket data of the Γ-twisted completed affine algebra at level `ℓ`.
///
/// Modes `a_n` satisfy `(γa)_n = φ(γ)^n a_n`, so `a_n` only depends on
/// `P_n a` with `P_n = |Γ|^{-1} Σ_γ φ(γ)^{-n} γ`; the mode space at `n` is
/// the image of `P_n`.
#[derive(Debug)]
pub struct ModeAlgebra {
    lie: LieData,
    gamma: GammaData,
    level: Q,
    spaces: RwLock<HashMap<i64, Arc<ModeSpace>>>,
}

/// A linear combination of modes at a single index plus a central multiple.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ModeCombination {
    pub mode: i64,
    /// Element of `g` representing the mode (already projected).
    pub vector: Vec<Q>,
    pub central: Q,
}

impl ModeAlgebra {
    pub fn new(lie: LieData, gamma: GammaData, level: Q) -> Self {
        Self { lie, gamma, level, spaces: RwLock::new(HashMap::new()) }
    }

    pub fn lie(&self) -> &LieData {
        &self.lie
    }

    pub fn gamma(&self) -> &GammaData {
        &self.gamma
    }

    pub fn level(&self) -> &Q {
        &self.level
    }

    pub fn dim(&self) -> usize {
        self.lie.dim()
    }

    pub fn require_scalings(&self) -> Result<()> {
        match self.gamma.elements().iter().find(|e| !e.psi.is_scaling()) {
            None => Ok(()),
            Some(e) => Err(Error::NonzeroTranslation(format!("Psi({}) = {}", e.name, e.psi))),
        }
    }

    pub fn projector(&self, n: i64) -> Matrix {
        let d = self.dim();
        let mut p = linalg::zeros(d, d);
        for (g, el) in self.gamma.elements().iter().enumerate() {
            p = linalg::add(&p, &linalg::scale(&el.matrix, &qpow(&self.gamma.phi(g), -n)));
        }
        linalg::scale(&p, &Q::from_integer((self.gamma.len() as i64).into()).recip())
    }

    pub fn space(&self, n: i64) -> Arc<ModeSpace> {
        if let Some(s) = self.spaces.read().unwrap().get(&n) {
            return s.clone();
        }
        let (basis, pivots) = linalg::rref(&linalg::transpose(&self.projector(n)));
        let s = Arc::new(ModeSpace { basis, pivots });
        self.spaces.write().unwrap().insert(n, s.clone());
        s
    }

    pub fn mode_dim(&self, n: i64) -> usize {
        self.space(n).basis.len()
    }

    pub fn basis_vec(&self, n: i64, k: usize) -> Vec<Q> {
        self.space(n).basis[k].clone()
    }

    pub fn project(&self, n: i64, v: &[Q]) -> Vec<Q> {
        linalg::mat_vec(&self.projector(n), v)
    }

    /// Coordinates of the mode `v_n` in the basis of the mode space.
    pub fn coords(&self, n: i64, v: &[Q]) -> Vec<Q> {
        let s = self.space(n);
        if s.basis.is_empty() {
            return Vec::new();
        }
        let p = self.project(n, v);
        s.pivots.iter().map(|&i| p[i].clone()).collect()
    }

    /// `[u_m, v_n] = Σ_γ s_γ^m ([γu, v]_{m+n} + ℓ⟨γu, v⟩ m δ_{m+n,0})` where
    /// `s_γ` is the slope of `Ψ(γ)^{-1}`. Requires pure scalings.
    pub fn bracket_vectors(&self, m: i64, u: &[Q], n: i64, v: &[Q]) -> (Vec<Q>, Q) {
        let mut vec = vec![Q::zero(); self.dim()];
        let mut central = Q::zero();
        for g in 0..self.gamma.len() {
            let s = self.gamma.psi(g).invert().alpha().clone();
            let w = qpow(&s, m);
            let gu = self.gamma.act(g, u);
            for (x, y) in vec.iter_mut().zip(self.lie.bracket(&gu, v)) {
                *x += &w * y;
            }
            if m + n == 0 {
                central += &w * &self.level * self.lie.form(&gu, v) * q(m);
            }
        }
        (vec, central)
    }

    /// Symbolic bracket of two basis modes.
    pub fn mode_bracket_symbolic(&self, a: usize, m: i64, b: usize, n: i64) -> Result<ModeCombination> {
        self.require_scalings()?;
        let (v, c) = self.bracket_vectors(m, &self.lie.basis_vec(a), n, &self.lie.basis_vec(b));
        Ok(ModeCombination { mode: m + n, vector: self.project(m + n, &v), central: c })
    }

    /// `[a_m, b_n] w` for arbitrary `Ψ`, using the expansion
    /// `Σ_γ Σ_i C(m,i) s^{m-i} t^i [γa,b]_{m+n-i} + ℓ⟨γa,b⟩ m C(m-1,m+n) s^{-n} t^{m+n}`
    /// with `Ψ(γ)^{-1} = s x + t`. `act(k, u, w)` applies the mode `u_k`, and
    /// modes below `lowest` are known to annihilate `w`.
    pub fn mode_bracket_apply<V: crate::sparse::Coeff>(
        &self,
        a: usize,
        m: i64,
        b: usize,
        n: i64,
        w: &V,
        act: &dyn Fn(i64, &[Q], &V) -> V,
        lowest: i64,
    ) -> V {
        let (ea, eb) = (self.lie.basis_vec(a), self.lie.basis_vec(b));
        let mut out = V::nil();
        for g in 0..self.gamma.len() {
            let inv = self.gamma.psi(g).invert();
            let (s, t) = (inv.alpha(), inv.beta());
            let gu = self.gamma.act(g, &ea);
            let br = self.lie.bracket(&gu, &eb);
            if !linalg::is_zero_vec(&br) {
                let mut i = 0i64;
                while m + n - i >= lowest {
                    let c = binom(m, i) * qpow(s, m - i) * qpow(t, i);
                    if !c.is_zero() {
                        out.add_scaled(&act(m + n - i, &br, w), &c);
                    }
                    if t.is_zero() {
                        break;
                    }
                    i += 1;
                }
            }
            let f = self.lie.form(&gu, &eb);
            if !f.is_zero() && m + n >= 0 {
                let c = &self.level * f * q(m) * binom(m - 1, m + n) * qpow(s, -n) * qpow(t, m + n);
                out.add_scaled(w, &c);
            }
        }
        out
    }
}

/// `act(m, u, w)` applies the mode `u_m` to `w`.
type ActFn<'a, V> = Box<dyn Fn(i64, &[Q], &V) -> Result<V> + Sync + 'a>;

/// Mode operators `u_m` realized on some space, checked against the
/// symbolic brackets of a [`ModeAlgebra`].
pub struct ModeAlgebraAction<'a, V> {
    alg: &'a ModeAlgebra,
    act: ActFn<'a, V>,
}

impl<'a, V: crate::sparse::Coeff> ModeAlgebraAction<'a, V> {
    pub fn new(alg: &'a ModeAlgebra, act: impl Fn(i64, &[Q], &V) -> Result<V> + Sync + 'a) -> Self {
        Self { alg, act: Box::new(act) }
    }

    pub fn alg(&self) -> &ModeAlgebra {
        self.alg
    }

    pub fn act(&self, m: i64, u: &[Q], w: &V) -> Result<V> {
        (self.act)(m, u, w)
    }

    fn commutator(&self, m: i64, u: &[Q], n: i64, v: &[Q], w: &V) -> Result<V> {
        let mut out = self.act(m, u, &self.act(n, v, w)?)?;
        out.add_scaled(&self.act(n, v, &self.act(m, u, w)?)?, &q(-1));
        Ok(out)
    }

    /// `[u_m, v_n]` from the symbolic bracket, applied to `w`.
    fn bracket_act(&self, m: i64, u: &[Q], n: i64, v: &[Q], w: &V) -> Result<V> {
        let (vec, c) = self.alg.bracket_vectors(m, u, n, v);
        let mut out = self.act(m + n, &vec, w)?;
        out.add_scaled(w, &c);
        Ok(out)
    }

    /// Realization, skew-symmetry and Jacobi of the brackets on every probe,
    /// for all basis triples at the given modes.
    pub fn jacobi_check(&self, modes: &[i64], probes: &[V]) -> Result<Vec<CheckEntry>> {
        self.alg.require_scalings()?;
        let lie = self.alg.lie();
        let d = lie.dim();
        let e = |i: usize| lie.basis_vec(i);
        let (mut real, mut skew, mut jac) = (None, None, None);
        for w in probes {
            for i in 0..d {
                for j in 0..d {
                    for &m in modes {
                        for &n in modes {
                            let b = self.bracket_act(m, &e(i), n, &e(j), w)?;
                            if real.is_none() && b != self.commutator(m, &e(i), n, &e(j), w)? {
                                real = Some(format!("[{}({m}), {}({n})]", lie.labels[i], lie.labels[j]));
                            }
                            let mut s = self.bracket_act(n, &e(j), m, &e(i), w)?;
                            s.add_assign(&b);
                            if skew.is_none() && !s.is_nil() {
                                skew = Some(format!("[{}({m}), {}({n})]", lie.labels[i], lie.labels[j]));
                            }
                            for k in 0..d {
                                for &r in modes {
                                    if jac.is_some() {
                                        continue;
                                    }
                                    let (xy, _) = self.alg.bracket_vectors(m, &e(i), n, &e(j));
                                    let lhs = self.bracket_act(m + n, &xy, r, &e(k), w)?;
                                    let (yz, _) = self.alg.bracket_vectors(n, &e(j), r, &e(k));
                                    let (xz, _) = self.alg.bracket_vectors(m, &e(i), r, &e(k));
                                    let mut rhs = self.bracket_act(m, &e(i), n + r, &yz, w)?;
                                    rhs.add_scaled(&self.bracket_act(n, &e(j), m + r, &xz, w)?, &q(-1));
                                    if lhs != rhs {
                                        jac = Some(format!(
                                            "({}({m}), {}({n}), {}({r}))",
                                            lie.labels[i], lie.labels[j], lie.labels[k]
                                        ));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        let entry = |id: &str, anchor: &str, bad: Option<String>| match bad {
            None => CheckEntry::pass(id, anchor, format!("{} probes, modes {modes:?}", probes.len())),
            Some(d) => CheckEntry::fail(id, anchor, d),
        };
        Ok(vec![
            entry("modes.realized", "[u_m, v_n] acts as u_m v_n - v_n u_m", real),
            entry("modes.skew-symmetry", "[u_m, v_n] = -[v_n, u_m]", skew),
            entry("modes.jacobi", "[[x,y],z] = [x,[y,z]] - [y,[x,z]]", jac),
        ])
    }
}

/// Human-readable table of symbolic brackets `[e_i{m}, e_j{n}]` for modes in a range.
pub fn bracket_table(alg: &ModeAlgebra, range: std::ops::RangeInclusive<i64>) -> Result<String> {
    use std::fmt::Write as _;
    let mut out = String::new();
    let l = &alg.lie().labels;
    for a in 0..alg.dim() {
        for b in 0..alg.dim() {
            for m in range.clone() {
                for n in range.clone() {
                    let c = alg.mode_bracket_symbolic(a, m, b, n)?;
                    let _ = writeln!(out, "[{}({m}), {}({n})] = {}({}) + {}", l[a], l[b], fmt_vec(&c.vector), c.mode, c.central);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::frac;
    use proptest::prelude::*;

    #[test]
    fn builtin_algebras_validate() {
        for lie in [LieData::abelian(1), LieData::abelian(3), LieData::sl2()] {
            assert!(lie.validate_algebra().iter().all(|e| e.passed), "{:?}", lie.labels);
        }
    }

    #[test]
    fn sl2_with_identity_gram_breaks_invariance() {
        let mut lie = LieData::sl2();
        lie.gram = linalg::identity(3);
        let entries = lie.validate_algebra();
        let inv = entries.iter().find(|e| e.id == "lie.form-invariant").unwrap();
        assert!(!inv.passed);
        assert!(inv.detail.contains("(e, e, h)"), "{}", inv.detail);
        assert!(!lie.invariance_defect(0, 2, 1).is_zero());
        assert!(entries.iter().filter(|e| e.id != "lie.form-invariant").all(|e| e.passed));
    }

    #[test]
    fn degenerate_gram_is_reported() {
        let mut lie = LieData::abelian(2);
        lie.gram[1][1] = q(0);
        let e = lie.validate_algebra();
        let bad = e.iter().find(|e| e.id == "lie.form-nondegenerate").unwrap();
        assert!(!bad.passed);
        assert_eq!(lie.radical_vector(), vec![q(0), q(1)]);
        assert!(bad.counterexample.is_some());
    }

    #[test]
    fn stretched_swap_is_not_form_preserving() {
        let m = vec![vec![q(0), q(2)], vec![crate::scalar::frac(1, 2), q(0)]];
        let els = vec![
            GammaElement { name: "1".into(), matrix: linalg::identity(2), psi: LinearMap::identity() },
            GammaElement { name: "t".into(), matrix: m, psi: LinearMap::scaling(q(-1)) },
        ];
        let e = GammaData::new(els).validate_gamma(&LieData::abelian(2));
        assert!(!e.iter().find(|e| e.id == "gamma.form-preserving").unwrap().passed);
        assert!(e.iter().find(|e| e.id == "gamma.closure").unwrap().passed);
    }

    #[test]
    fn jacobi_check_accepts_pbw_and_rejects_doubled_action() {
        use crate::pbw::PbwModule;
        use crate::sparse::{Coeff, SparseVec};
        let alg = Arc::new(ModeAlgebra::new(LieData::sl2(), GammaData::trivial(3), q(1)));
        let pbw = PbwModule::new(alg.clone(), 1, 12);
        let probes: Vec<_> = (0..=1).flat_map(|d| pbw.basis(d)).map(SparseVec::basis).collect();
        let good = ModeAlgebraAction::new(&alg, |m, u: &[Q], w: &crate::pbw::Vector| pbw.apply(m, u, w));
        assert!(good.jacobi_check(&[-1, 0, 1], &probes).unwrap().iter().all(|e| e.passed));
        let doubled = ModeAlgebraAction::new(&alg, |m, u: &[Q], w: &crate::pbw::Vector| Ok(pbw.apply(m, u, w)?.scale(&q(2))));
        let es = doubled.jacobi_check(&[-1, 0, 1], &probes).unwrap();
        assert!(!es.iter().find(|e| e.id == "modes.realized").unwrap().passed);
    }

    #[test]
    fn broken_jacobi_is_reported() {
        let mut lie = LieData::sl2();
        lie.structure[1][0][0] = q(3);
        lie.structure[0][1][0] = q(-3);
        let e = lie.validate_algebra();
        assert!(!e.iter().find(|e| e.id == "lie.jacobi").unwrap().passed);
        assert!(e.iter().find(|e| e.id == "lie.antisymmetry").unwrap().passed);
    }

    #[test]
    fn gamma_builtins_validate() {
        let lie = LieData::abelian(2);
        for g in [GammaData::trivial(2), GammaData::z2_negation(2)] {
            assert!(g.validate_gamma(&lie).iter().all(|e| e.passed));
            assert!(g.is_injective());
        }
        // negation is not an automorphism of sl2
        let bad = GammaData::z2_negation(3).validate_gamma(&LieData::sl2());
        assert!(!bad.iter().find(|e| e.id == "gamma.automorphism").unwrap().passed);
    }

    #[test]
    fn non_closed_set_is_reported() {
        let els = vec![
            GammaElement { name: "1".into(), matrix: linalg::identity(1), psi: LinearMap::identity() },
            GammaElement { name: "t".into(), matrix: linalg::identity(1), psi: LinearMap::new(q(1), q(1)) },
        ];
        let e = GammaData::new(els).validate_gamma(&LieData::abelian(1));
        assert!(!e.iter().find(|e| e.id == "gamma.closure").unwrap().passed);
    }

    #[test]
    fn twisted_mode_spaces_are_odd() {
        let alg = ModeAlgebra::new(LieData::abelian(1), GammaData::z2_negation(1), q(1));
        for n in -5..=5 {
            assert_eq!(alg.mode_dim(n), if n % 2 == 0 { 0 } else { 1 }, "n = {n}");
        }
    }

    #[test]
    fn twisted_heisenberg_brackets() {
        for l in [q(1), q(2), q(-1), frac(1, 3)] {
            let alg = ModeAlgebra::new(LieData::abelian(1), GammaData::z2_negation(1), l.clone());
            let c = alg.mode_bracket_symbolic(0, 1, 0, -1).unwrap();
            assert_eq!(c.central, q(2) * &l);
            let c = alg.mode_bracket_symbolic(0, 3, 0, -3).unwrap();
            assert_eq!(c.central, q(6) * &l);
            let c = alg.mode_bracket_symbolic(0, 2, 0, -2).unwrap();
            assert!(c.central.is_zero());
        }
    }

    #[test]
    fn untwisted_sl2_brackets() {
        let alg = ModeAlgebra::new(LieData::sl2(), GammaData::trivial(3), q(1));
        let c = alg.mode_bracket_symbolic(0, 2, 2, -2).unwrap();
        assert_eq!(c.vector, vec![q(0), q(1), q(0)]);
        assert_eq!(c.central, q(2));
        let c = alg.mode_bracket_symbolic(1, 1, 0, 3).unwrap();
        assert_eq!((c.mode, c.vector), (4, vec![q(2), q(0), q(0)]));
    }

    #[test]
    fn translations_are_rejected_symbolically() {
        let els = vec![GammaElement { name: "t".into(), matrix: linalg::identity(1), psi: LinearMap::new(q(1), q(1)) }];
        let alg = ModeAlgebra::new(LieData::abelian(1), GammaData::new(els), q(1));
        assert!(matches!(alg.mode_bracket_symbolic(0, 1, 0, -1), Err(Error::NonzeroTranslation(_))));
    }

    #[test]
    fn general_bracket_matches_symbolic_without_translation() {
        let alg = ModeAlgebra::new(LieData::sl2(), GammaData::trivial(3), q(2));
        let act = |k: i64, u: &[Q], _w: &Q| -> Q { q(k) * u.iter().enumerate().map(|(i, x)| x * q(i as i64 + 1)).sum::<Q>() };
        for (m, n) in [(1, -1), (2, 0), (-1, 3)] {
            let sym = alg.mode_bracket_symbolic(0, m, 2, n).unwrap();
            let want = act(sym.mode, &sym.vector, &q(1)) + sym.central;
            assert_eq!(alg.mode_bracket_apply(0, m, 2, n, &q(1), &act, -10), want);
        }
    }

    proptest! {
        #[test]
        fn coords_round_trip(n in -6i64..6, a in -5i64..5, b in -5i64..5) {
            let alg = ModeAlgebra::new(LieData::abelian(2), GammaData::z2_negation(2), q(1));
            let v = vec![q(a), q(b)];
            let c = alg.coords(n, &v);
            let mut back = vec![Q::zero(); 2];
            for (k, x) in c.iter().enumerate() {
                for (y, z) in back.iter_mut().zip(alg.basis_vec(n, k)) { *y += x * z; }
            }
            prop_assert_eq!(back, alg.project(n, &v));
        }

        #[test]
        fn projector_is_idempotent(n in -6i64..6) {
            let alg = ModeAlgebra::new(LieData::abelian(2), GammaData::z2_negation(2), q(1));
            let p = alg.projector(n);
            prop_assert_eq!(linalg::mat_mul(&p, &p), p);
        }
    }
}
