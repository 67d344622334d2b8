//! Operator fields `a(x) = Σ a_n x^{-n-1}` on a PBW module, lower-truncated in
//! `x^{-1}`: application to vectors, locality witnesses, n-th products, the
//! left action of substitutions, and commutators as delta distributions.
//!
//! Fields are lazy expression trees. Applying a field to a basis vector is
//! memoized at the deepest floor requested so far.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use num_traits::{One, Zero};

use crate::delta::{check_annihilated, decompose, delta_term, DeltaTerm, StreamSource};
use crate::error::{Error, Result};
use crate::lingroup::LinearMap;
use crate::pbw::{Mono, PbwModule, Vector};
use crate::scalar::{binom, Q};
use crate::series::{iota_expand, LinearForm, Poly2, Rect, Region, Var, WindowedSeries};
use crate::sparse::{Coeff, SparseVec};

/// Vector-valued series in one variable.
pub type VSeries = WindowedSeries<Vector>;

/// `Π (x1 - g(x2))^k`.
pub type Witness = Vec<(LinearMap, u32)>;

#[derive(Clone, Debug)]
pub enum FieldKind {
    Identity,
    /// The field of the Lie basis element with this index.
    Generator(usize),
    Scaled(Q, Field),
    Sum(Vec<Field>),
    /// `x ↦ a(g^{-1}(x))`.
    Translate(LinearMap, Field),
    NthProduct { a: Field, b: Field, n: i64, witness: Witness },
}

#[derive(Debug)]
struct Node {
    kind: FieldKind,
    module: Arc<PbwModule>,
    /// Lower bound on the conformal weight of every component.
    weight: i64,
    memo: RwLock<HashMap<Mono, Arc<VSeries>>>,
}

#[derive(Clone, Debug)]
pub struct Field(Arc<Node>);

fn x_series(floor: i64) -> VSeries {
    WindowedSeries::zero(Var::X, floor)
}

impl Field {
    fn make(module: Arc<PbwModule>, kind: FieldKind, weight: i64) -> Self {
        Field(Arc::new(Node { kind, module, weight, memo: RwLock::new(HashMap::new()) }))
    }

    pub fn identity(module: Arc<PbwModule>) -> Self {
        Self::make(module, FieldKind::Identity, 0)
    }

    pub fn generator(module: Arc<PbwModule>, i: usize) -> Self {
        Self::make(module, FieldKind::Generator(i), 1)
    }

    pub fn scaled(&self, c: Q) -> Self {
        Self::make(self.0.module.clone(), FieldKind::Scaled(c, self.clone()), self.0.weight)
    }

    /// Sum of fields on the same module; an empty sum is not allowed.
    pub fn sum(parts: Vec<Field>) -> Self {
        assert!(!parts.is_empty(), "empty field sum");
        if parts.len() == 1 {
            return parts.into_iter().next().unwrap();
        }
        let w = parts.iter().map(|f| f.0.weight).min().unwrap();
        Self::make(parts[0].0.module.clone(), FieldKind::Sum(parts), w)
    }

    /// The left action `L_g a(x) = a(g^{-1}(x))`.
    pub fn l_action(&self, g: &LinearMap) -> Self {
        if g.is_identity() {
            return self.clone();
        }
        Self::make(self.0.module.clone(), FieldKind::Translate(g.clone(), self.clone()), self.0.weight)
    }

    /// `a(x)_n b(x)` defined through the witness `p` of `p·[a(x1), b(x2)] = 0`.
    pub fn nth_product(a: &Field, b: &Field, n: i64, witness: Witness) -> Self {
        let w = a.0.weight + b.0.weight - n - 1;
        Self::make(a.0.module.clone(), FieldKind::NthProduct { a: a.clone(), b: b.clone(), n, witness }, w)
    }

    pub fn kind(&self) -> &FieldKind {
        &self.0.kind
    }

    pub fn module(&self) -> &Arc<PbwModule> {
        &self.0.module
    }

    pub fn weight(&self) -> i64 {
        self.0.weight
    }

    /// Exponents above this vanish on a vector of degree `d`.
    pub fn max_exp(&self, d: i64) -> i64 {
        d - self.0.weight
    }

    pub fn ptr_eq(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// `Σ (a_n w) x^{-n-1}`, exact at exponents `>= floor`.
    pub fn apply_series(&self, w: &Vector, floor: i64) -> Result<VSeries> {
        let mut out = x_series(floor);
        for (mono, c) in w.iter() {
            let s = self.apply_basis(mono, floor)?;
            out = out.add_scaled(&s.truncate(floor), c)?;
        }
        Ok(out)
    }

    /// The mode `a_n w`.
    pub fn mode(&self, n: i64, w: &Vector) -> Result<Vector> {
        let e = -n - 1;
        let mut out = Vector::new();
        for (mono, c) in w.iter() {
            if e > self.max_exp(self.0.module.mono_degree(mono)) {
                continue;
            }
            out.add_scaled(&self.apply_basis(mono, e)?.coeff(e), c);
        }
        Ok(out)
    }

    fn apply_basis(&self, mono: &Mono, floor: i64) -> Result<Arc<VSeries>> {
        if let Some(s) = self.0.memo.read().unwrap().get(mono) {
            if s.floor() <= floor {
                return Ok(s.clone());
            }
        }
        let s = Arc::new(self.compute(mono, floor)?);
        let mut memo = self.0.memo.write().unwrap();
        match memo.get(mono) {
            Some(old) if old.floor() <= s.floor() => {}
            _ => {
                memo.insert(mono.clone(), s.clone());
            }
        }
        Ok(s)
    }

    fn compute(&self, mono: &Mono, floor: i64) -> Result<VSeries> {
        let m = &self.0.module;
        let w = SparseVec::basis(mono.clone());
        let d = m.mono_degree(mono);
        match &self.0.kind {
            FieldKind::Identity => Ok(WindowedSeries::from_terms(Var::X, [(0, w)], floor)),
            FieldKind::Generator(i) => {
                let mut terms = Vec::new();
                for e in floor..=self.max_exp(d) {
                    terms.push((e, m.apply_generator(*i, -e - 1, &w)?));
                }
                Ok(WindowedSeries::from_terms(Var::X, terms, floor))
            }
            FieldKind::Scaled(c, a) => Ok(a.apply_series(&w, floor)?.scale(c)),
            FieldKind::Sum(parts) => {
                let mut out = x_series(floor);
                for p in parts {
                    out = out.add(&p.apply_series(&w, floor)?)?;
                }
                Ok(out)
            }
            FieldKind::Translate(g, a) => Ok(a.apply_series(&w, floor)?.substitute_linear_to(&g.invert(), floor)),
            FieldKind::NthProduct { a, b, n, witness } => nth_product_series(a, b, *n, witness, &w, d, floor),
        }
    }
}

/// Coefficients `c_{e1,e2}` of `p(x1,x2) a(x1) b(x2) w` for a fixed vector `w`.
struct ProductTable {
    /// `f2 ↦ a(x1) b_{-f2-1} w`
    rows: BTreeMap<i64, VSeries>,
    poly: Poly2,
    f2_floor: i64,
}

impl ProductTable {
    /// Known for `e2 >= e2_lo` and `e1 + e2 >= sum_lo`.
    fn new(a: &Field, b: &Field, poly: &Poly2, w: &Vector, e2_lo: i64, sum_lo: i64) -> Result<Self> {
        let (_, deg1, _, deg2) = poly.degree_box();
        let f2_floor = e2_lo - deg2;
        let bw = b.apply_series(w, f2_floor)?;
        let mut rows = BTreeMap::new();
        for (f2, v) in bw.terms() {
            rows.insert(f2, a.apply_series(v, sum_lo - deg1 - deg2 - f2)?);
        }
        Ok(Self { rows, poly: poly.clone(), f2_floor })
    }

    fn ab(&self, f1: i64, f2: i64) -> Result<Vector> {
        if f2 < self.f2_floor {
            return Err(Error::WindowTooShallow { needed: f2, have: self.f2_floor });
        }
        match self.rows.get(&f2) {
            None => Ok(Vector::new()),
            Some(r) => r.try_coeff(f1).ok_or(Error::WindowTooShallow { needed: f1, have: r.floor() }),
        }
    }

    fn c(&self, e1: i64, e2: i64) -> Result<Vector> {
        let mut out = Vector::new();
        for ((i, j), p) in self.poly.terms() {
            out.add_scaled(&self.ab(e1 - i, e2 - j)?, p);
        }
        Ok(out)
    }
}

fn id_multiplicity(witness: &[(LinearMap, u32)]) -> u32 {
    witness.iter().filter(|(g, _)| g.is_identity()).map(|(_, k)| *k).sum()
}

fn x1_bound(a: &Field, poly: &Poly2, d: i64) -> i64 {
    a.max_exp(d) + poly.degree_box().1
}

fn x2_bound(b: &Field, poly: &Poly2, d: i64) -> i64 {
    b.max_exp(d) + poly.degree_box().3
}

/// `G_t(x) = [x0^t] (p(x1,x) a(x1) b(x) w)|_{x1 = x + x0}` for `t = 0..=tmax`, exact from `floor`.
pub fn shifted_coefficients(a: &Field, b: &Field, witness: &[(LinearMap, u32)], w: &Vector, floor: i64, tmax: i64) -> Result<Vec<VSeries>> {
    let poly = Poly2::from_factors(witness);
    let mut out = vec![x_series(floor); (tmax + 1) as usize];
    let mut by_degree: BTreeMap<i64, Vector> = BTreeMap::new();
    for (mono, c) in w.iter() {
        by_degree.entry(a.module().mono_degree(mono)).or_default().add_term(mono.clone(), c.clone());
    }
    for (d, wd) in by_degree {
        let (m1, m2) = (x1_bound(a, &poly, d), x2_bound(b, &poly, d));
        let table = ProductTable::new(a, b, &poly, &wd, floor - m1, floor)?;
        for t in 0..=tmax {
            let mut terms = Vec::new();
            for e in floor..=m1 + m2 - t {
                let mut acc = Vector::new();
                for e1 in (e + t - m2)..=m1 {
                    let c = binom(e1, t);
                    if !c.is_zero() {
                        acc.add_scaled(&table.c(e1, e + t - e1)?, &c);
                    }
                }
                terms.push((e, acc));
            }
            let g = WindowedSeries::from_terms(Var::X, terms, floor);
            out[t as usize] = out[t as usize].add(&g)?;
        }
    }
    Ok(out)
}

fn nth_product_series(a: &Field, b: &Field, n: i64, witness: &[(LinearMap, u32)], w: &Vector, d: i64, floor: i64) -> Result<VSeries> {
    let k = id_multiplicity(witness) as i64;
    if n >= k {
        return Ok(x_series(floor));
    }
    let tmax = k - n - 1;
    let poly = Poly2::from_factors(witness);
    let top = x1_bound(a, &poly, d) + x2_bound(b, &poly, d);
    let g = shifted_coefficients(a, b, witness, w, floor, tmax)?;
    // 1/p(x + x0, x) = x0^{-k} R(x, x0) with R regular in x0
    let forms: Vec<(LinearForm, u32)> = witness
        .iter()
        .filter(|(g, _)| !g.is_identity())
        .map(|(g, m)| (LinearForm { c1: Q::one() - g.alpha(), c2: Q::one(), c0: -g.beta().clone() }, *m))
        .collect();
    let lo = (floor - top).min(0);
    let r = iota_expand(&Poly2::one(), &forms, Region::InvFirstSecond, ((lo, 0), (0, tmax)))?;
    let mut out: BTreeMap<i64, Vector> = BTreeMap::new();
    for (t, gt) in g.iter().enumerate() {
        let row = tmax - t as i64;
        for er in lo..=0 {
            let rc = r.coeff(er, row).unwrap_or_else(Q::zero);
            if rc.is_zero() {
                continue;
            }
            for (e, v) in gt.terms() {
                if e + er >= floor {
                    out.entry(e + er).or_default().add_scaled(v, &rc);
                }
            }
        }
    }
    Ok(WindowedSeries::from_terms(Var::X, out, floor))
}

/// Check `p(x1,x2) a(x1) b(x2) w` has no terms with `e1` or `e2` up to
/// `probe` past the bounds implied by locality, on exponents `>= lo`.
pub fn compatibility_check(a: &Field, b: &Field, witness: &[(LinearMap, u32)], w: &Vector, lo: i64, probe: i64) -> Result<()> {
    let poly = Poly2::from_factors(witness);
    let m = a.module();
    for (mono, _) in w.iter() {
        let d = m.mono_degree(mono);
        let wd = SparseVec::basis(mono.clone());
        let (m1, m2) = (x1_bound(a, &poly, d), x2_bound(b, &poly, d));
        let table = ProductTable::new(a, b, &poly, &wd, lo, 2 * lo)?;
        for e1 in lo..=m1 + probe {
            for e2 in lo..=m2 + probe {
                if (e1 > m1 || e2 > m2) && !table.c(e1, e2)?.is_empty() {
                    return Err(Error::CompatibilityFails(format!(
                        "term x1^{e1} x2^{e2} on {} beyond bound ({m1}, {m2})",
                        m.mono_label(mono)
                    )));
                }
            }
        }
    }
    Ok(())
}

/// `a(x)_n b(x)` for every `n` from `lowest` up to the last possibly nonzero
/// product, after checking compatibility of the witness on `probes`.
pub fn nth_products(a: &Field, b: &Field, witness: &Witness, lowest: i64, probes: &[Vector], lo: i64) -> Result<BTreeMap<i64, Field>> {
    for w in probes {
        compatibility_check(a, b, witness, w, lo, 2)?;
    }
    let k = id_multiplicity(witness) as i64;
    Ok((lowest..k).map(|n| (n, Field::nth_product(a, b, n, witness.clone()))).collect())
}

/// Rows of `[a(x1), b(x2)] w` in `x2`, cached per `x1`-exponent.
pub struct CommutatorStream {
    a: Field,
    b: Field,
    w: Vector,
    cache: RwLock<HashMap<i64, Arc<VSeries>>>,
}

impl CommutatorStream {
    pub fn new(a: &Field, b: &Field, w: &Vector) -> Self {
        Self { a: a.clone(), b: b.clone(), w: w.clone(), cache: RwLock::new(HashMap::new()) }
    }

    fn compute(&self, e1: i64, floor2: i64) -> Result<VSeries> {
        let n = -e1 - 1;
        let bw = self.b.apply_series(&self.w, floor2)?;
        let mut terms = Vec::new();
        for (e2, v) in bw.terms() {
            terms.push((e2, self.a.mode(n, v)?));
        }
        let first = WindowedSeries::from_terms(Var::X, terms, floor2);
        let second = self.b.apply_series(&self.a.mode(n, &self.w)?, floor2)?;
        Ok(first.sub(&second)?.with_var(Var::X2))
    }
}

impl StreamSource<Vector> for CommutatorStream {
    fn row(&self, e1: i64, floor2: i64) -> Result<VSeries> {
        if let Some(r) = self.cache.read().unwrap().get(&e1) {
            if r.floor() <= floor2 {
                return Ok(r.truncate(floor2));
            }
        }
        let r = self.compute(e1, floor2)?;
        self.cache.write().unwrap().insert(e1, Arc::new(r.clone()));
        Ok(r)
    }
}

/// Multiplicity vectors with entries `<= max`, by total degree and then lexicographically.
pub fn multiplicity_vectors(len: usize, max: u32) -> Vec<Vec<u32>> {
    let mut all: Vec<Vec<u32>> = vec![Vec::new()];
    for _ in 0..len {
        all = all.into_iter().flat_map(|v| (0..=max).map(move |k| [v.clone(), vec![k]].concat())).collect();
    }
    all.sort_by_key(|v| (v.iter().sum::<u32>(), v.clone()));
    all
}

/// The first product `Π (x1 - g(x2))^k` over `candidates` (by total degree,
/// then lexicographically) that annihilates the commutator on every probe
/// vector within `window`; `None` when no multiplicity vector up to `max` works.
pub fn locality_witness(
    a: &Field,
    b: &Field,
    candidates: &[LinearMap],
    max_multiplicity: u32,
    probes: &[Vector],
    window: Rect,
) -> Result<Option<Witness>> {
    let streams: Vec<CommutatorStream> = probes.iter().map(|w| CommutatorStream::new(a, b, w)).collect();
    for ks in multiplicity_vectors(candidates.len(), max_multiplicity) {
        let p: Witness = candidates.iter().cloned().zip(ks).filter(|(_, k)| *k > 0).collect();
        if annihilates(&streams, &p, window)? {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

fn annihilates(streams: &[CommutatorStream], p: &[(LinearMap, u32)], window: Rect) -> Result<bool> {
    for s in streams {
        match check_annihilated(s, p, window) {
            Ok(()) => {}
            Err(Error::AnnihilationFails { .. }) => return Ok(false),
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

/// Whether `p` annihilates `[a(x1), b(x2)]` on the probes and window.
pub fn is_locality_witness(a: &Field, b: &Field, p: &[(LinearMap, u32)], probes: &[Vector], window: Rect) -> Result<bool> {
    let streams: Vec<CommutatorStream> = probes.iter().map(|w| CommutatorStream::new(a, b, w)).collect();
    annihilates(&streams, p, window)
}

/// `[a(x1), b(x2)] w` as delta terms, coefficients exact from `coeff_floor`.
pub fn commutator_distribution(
    a: &Field,
    b: &Field,
    witness: &[(LinearMap, u32)],
    w: &Vector,
    check: Rect,
    coeff_floor: i64,
) -> Result<Vec<DeltaTerm<Vector>>> {
    decompose(&CommutatorStream::new(a, b, w), witness, check, coeff_floor)
}

/// `c(x2) (1/j!) ∂^j x1^{-1} δ(g(x2)/x1)` with `c(x2) = f(x2) w`.
pub fn field_delta_term(f: &Field, g: &LinearMap, j: u32, w: &Vector, floor: i64) -> Result<DeltaTerm<Vector>> {
    Ok(delta_term(g.clone(), j, f.apply_series(w, floor)?.with_var(Var::X2)))
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.kind {
            FieldKind::Identity => write!(f, "1"),
            FieldKind::Generator(i) => write!(f, "{}(x)", self.0.module.alg().lie().labels[*i]),
            FieldKind::Scaled(c, a) => write!(f, "{c}*{a}"),
            FieldKind::Sum(ps) => {
                for (i, p) in ps.iter().enumerate() {
                    write!(f, "{}{p}", if i > 0 { " + " } else { "" })?;
                }
                Ok(())
            }
            FieldKind::Translate(g, a) => write!(f, "L[{g}]({a})"),
            FieldKind::NthProduct { a, b, n, .. } => write!(f, "({a})_{n}({b})"),
        }
    }
}

pub fn fmt_witness(p: &[(LinearMap, u32)]) -> String {
    if p.is_empty() {
        return "1".into();
    }
    p.iter().map(|(g, k)| format!("(x1 - {})^{k}", g.to_string().replace('x', "x2"))).collect::<Vec<_>>().join("")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::{GammaData, LieData, ModeAlgebra};
    use crate::scalar::q;

    fn module(lie: LieData, gamma: GammaData, level: Q) -> Arc<PbwModule> {
        Arc::new(PbwModule::new(Arc::new(ModeAlgebra::new(lie, gamma, level)), 1, 40))
    }

    fn heis(l: i64) -> Arc<PbwModule> {
        module(LieData::abelian(1), GammaData::trivial(1), q(l))
    }

    fn twisted(l: i64) -> Arc<PbwModule> {
        module(LieData::abelian(1), GammaData::z2_negation(1), q(l))
    }

    fn probes(m: &PbwModule, max: usize) -> Vec<Vector> {
        (0..=max).flat_map(|d| m.basis(d)).map(SparseVec::basis).collect()
    }

    fn id2() -> Witness {
        vec![(LinearMap::identity(), 2)]
    }

    fn agree(f: &Field, g: &Field, ws: &[Vector], floor: i64) {
        for w in ws {
            let (a, b) = (f.apply_series(w, floor).unwrap(), g.apply_series(w, floor).unwrap());
            assert!(a.agrees_with(&b), "{f} vs {g} on {:?}: {:?}", w, a.first_disagreement(&b));
        }
    }

    #[test]
    fn identity_field_is_constant() {
        let m = heis(1);
        let one = Field::identity(m.clone());
        for w in probes(&m, 3) {
            let s = one.apply_series(&w, -5).unwrap();
            assert_eq!(s.terms().map(|(e, v)| (e, v.clone())).collect::<Vec<_>>(), vec![(0, w.clone())]);
        }
        assert!(one.apply_series(&Vector::new(), -5).unwrap().is_zero());
    }

    #[test]
    fn generator_on_lowest_vector_has_negative_exponents() {
        let m = heis(1);
        let a = Field::generator(m.clone(), 0);
        let s = a.apply_series(&m.vacuum(), -6).unwrap();
        assert!(s.ceiling() <= -2);
        for n in 1..=5 {
            assert_eq!(s.coeff(-n - 1), m.apply_generator(0, n, &m.vacuum()).unwrap());
        }
    }

    #[test]
    fn heisenberg_and_twisted_witnesses() {
        let m = heis(1);
        let a = Field::generator(m.clone(), 0);
        let cands = [LinearMap::identity()];
        let p = locality_witness(&a, &a, &cands, 4, &probes(&m, 2), ((-4, 4), (-4, 4))).unwrap();
        assert_eq!(p, Some(id2()));
        let m = twisted(1);
        let a = Field::generator(m.clone(), 0);
        let neg = LinearMap::scaling(q(-1));
        let cands = [LinearMap::identity(), neg.clone()];
        let p = locality_witness(&a, &a, &cands, 4, &probes(&m, 3), ((-4, 4), (-4, 4))).unwrap();
        assert_eq!(p, Some(vec![(LinearMap::identity(), 2), (neg, 2)]));
    }

    #[test]
    fn commuting_fields_need_no_witness() {
        let m = module(LieData::abelian(2), GammaData::trivial(2), q(1));
        let (a, b) = (Field::generator(m.clone(), 0), Field::generator(m.clone(), 1));
        let p = locality_witness(&a, &b, &[LinearMap::identity()], 4, &probes(&m, 2), ((-4, 4), (-4, 4))).unwrap();
        assert_eq!(p, Some(vec![]));
    }

    #[test]
    fn first_product_is_minus_level() {
        for l in [1, 2, -1] {
            let m = heis(l);
            let a = Field::generator(m.clone(), 0);
            let one = Field::identity(m.clone());
            let ws = probes(&m, 3);
            agree(&Field::nth_product(&a, &a, 1, id2()), &one.scaled(q(-l)), &ws, -4);
            let p3 = vec![(LinearMap::identity(), 3)];
            agree(&Field::nth_product(&a, &a, 2, p3.clone()), &one.scaled(q(0)), &ws, -4);
            agree(&Field::nth_product(&a, &a, 3, p3), &one.scaled(q(0)), &ws, -4);
        }
    }

    #[test]
    fn zeroth_product_is_minus_bracket() {
        let m = module(LieData::sl2(), GammaData::trivial(3), q(1));
        let g = |i| Field::generator(m.clone(), i);
        let ws = probes(&m, 1);
        agree(&Field::nth_product(&g(0), &g(2), 0, id2()), &g(1).scaled(q(-1)), &ws, -3);
        agree(&Field::nth_product(&g(1), &g(0), 0, id2()), &g(0).scaled(q(-2)), &ws, -3);
        agree(&Field::nth_product(&g(0), &g(2), 1, id2()), &Field::identity(m.clone()).scaled(q(-1)), &ws, -3);
    }

    /// `(a_{-1}b)(x) = b(x) a_+(x) + a_-(x) b(x)` evaluated mode by mode.
    fn normal_ordered(a: &Field, b: &Field, w: &Vector, d: i64, e: i64) -> Vector {
        let mut out = Vector::new();
        for k in 0..d.max(0) {
            let v = a.mode(-k - 1, w).unwrap();
            out.add_scaled(&b.mode(-(e - k) - 1, &v).unwrap(), &q(1));
        }
        let bs = b.apply_series(w, e + 1).unwrap();
        for (f, v) in bs.terms() {
            let k = f - e - 1;
            if k >= 0 {
                out.add_scaled(&a.mode(k, v).unwrap(), &q(1));
            }
        }
        out
    }

    #[test]
    fn minus_first_product_matches_normal_ordering() {
        let m = module(LieData::sl2(), GammaData::trivial(3), q(2));
        let g = |i| Field::generator(m.clone(), i);
        for (i, j) in [(0, 2), (1, 1), (2, 0)] {
            let prod = Field::nth_product(&g(i), &g(j), -1, id2());
            for d in 0..=2 {
                for mono in m.basis(d) {
                    let w = SparseVec::basis(mono);
                    let s = prod.apply_series(&w, -3).unwrap();
                    for e in -3..=d as i64 {
                        assert_eq!(s.coeff(e), normal_ordered(&g(i), &g(j), &w, d as i64, e), "({i},{j}) deg {d} exp {e}");
                    }
                }
            }
        }
    }

    #[test]
    fn products_do_not_depend_on_the_witness() {
        let m = heis(2);
        let a = Field::generator(m.clone(), 0);
        let ws = probes(&m, 3);
        for n in -3..=1 {
            let p2 = Field::nth_product(&a, &a, n, id2());
            let p3 = Field::nth_product(&a, &a, n, vec![(LinearMap::identity(), 3)]);
            agree(&p2, &p3, &ws, -3);
        }
        let m = twisted(1);
        let a = Field::generator(m.clone(), 0);
        let ws = probes(&m, 3);
        let neg = LinearMap::scaling(q(-1));
        for n in -2..=1 {
            let p = Field::nth_product(&a, &a, n, vec![(LinearMap::identity(), 2), (neg.clone(), 2)]);
            let p2 = Field::nth_product(&a, &a, n, vec![(LinearMap::identity(), 3), (neg.clone(), 2)]);
            agree(&p, &p2, &ws, -3);
        }
    }

    #[test]
    fn left_action_law() {
        let m = heis(1);
        let a = Field::generator(m.clone(), 0);
        let (g, h) = (LinearMap::scaling(q(2)), LinearMap::new(q(1), q(1)));
        let ws = probes(&m, 3);
        agree(&a.l_action(&h).l_action(&g), &a.l_action(&g.compose(&h)), &ws, -5);
        agree(&a.l_action(&LinearMap::identity()), &a, &ws, -5);
        // a(x/2): the mode a_n picks up 2^{n+1}
        let s = a.l_action(&g);
        for w in &ws {
            let (x, y) = (s.apply_series(w, -5).unwrap(), a.apply_series(w, -5).unwrap());
            for (e, v) in y.terms() {
                assert_eq!(x.coeff(e), v.scale(&crate::scalar::qpow(&q(2), -e)));
            }
        }
    }

    #[test]
    fn heisenberg_commutator_is_one_derivative_term() {
        let m = heis(3);
        let a = Field::generator(m.clone(), 0);
        for w in probes(&m, 2) {
            let terms = commutator_distribution(&a, &a, &id2(), &w, ((-3, 3), (-3, 3)), -4).unwrap();
            assert_eq!(terms.len(), 1);
            assert_eq!((terms[0].support().clone(), terms[0].order()), (LinearMap::identity(), 1));
            let c = terms[0].coefficient();
            assert_eq!(c.terms().map(|(e, v)| (e, v.clone())).collect::<Vec<_>>(), vec![(0, w.scale(&q(3)))]);
        }
    }

    #[test]
    fn twisted_commutator_has_two_support_points() {
        let m = twisted(1);
        let a = Field::generator(m.clone(), 0);
        let neg = LinearMap::scaling(q(-1));
        let p = vec![(LinearMap::identity(), 2), (neg.clone(), 2)];
        for w in probes(&m, 2) {
            let terms = commutator_distribution(&a, &a, &p, &w, ((-3, 3), (-3, 3)), -3).unwrap();
            let supp: Vec<_> = terms.iter().map(|t| (t.support().clone(), t.order())).collect();
            assert_eq!(supp, vec![(LinearMap::identity(), 1), (neg.clone(), 1)]);
        }
    }

    #[test]
    fn decomposed_coefficients_are_minus_products() {
        let m = module(LieData::sl2(), GammaData::trivial(3), q(1));
        let g = |i| Field::generator(m.clone(), i);
        for (i, j) in [(0, 2), (1, 0), (1, 1)] {
            for w in probes(&m, 1) {
                let terms = commutator_distribution(&g(i), &g(j), &id2(), &w, ((-3, 3), (-3, 3)), -3).unwrap();
                for n in 0..2 {
                    let want = Field::nth_product(&g(i), &g(j), n, id2()).apply_series(&w, -3).unwrap().scale(&q(-1));
                    let got = terms
                        .iter()
                        .find(|t| t.order() == n as u32)
                        .map(|t| t.coefficient().clone().with_var(Var::X))
                        .unwrap_or_else(|| x_series(-3));
                    assert!(got.agrees_with(&want), "({i},{j}) n={n}");
                }
            }
        }
    }

    #[test]
    fn incompatible_witness_is_rejected() {
        let m = heis(1);
        let a = Field::generator(m.clone(), 0);
        let r = nth_products(&a, &a, &vec![(LinearMap::identity(), 1)], -1, &probes(&m, 1), -3);
        assert!(matches!(r, Err(Error::CompatibilityFails(_))), "{r:?}");
        let ok = nth_products(&a, &a, &id2(), -1, &probes(&m, 1), -3).unwrap();
        assert_eq!(ok.keys().copied().collect::<Vec<_>>(), vec![-1, 0, 1]);
    }
}
