//! Quasi modules at infinity for affine vertex algebras: construction from
//! Lie data, extension of the vertex operator map, and checks of every axiom.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_traits::{One, Zero};

use crate::delta::Grid;
use crate::eocalc::{
    commutator_distribution, compatibility_check, field_delta_term, fmt_witness, is_locality_witness, locality_witness,
    shifted_coefficients, CommutatorStream, Field, VSeries, Witness,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::liealg::{GammaData, LieData, ModeAlgebra, ModeAlgebraAction};
use crate::lingroup::LinearMap;
use crate::pbw::{Mono, PbwModule, Vector};
use crate::report::{CheckEntry, Counterexample, VerificationReport};
use crate::scalar::{binom, q, Q};
use crate::series::{Poly2, Rect, Var, WindowedSeries};
use crate::sparse::{Coeff, SparseVec};
use crate::vacuumva::VacuumVA;

/// Parameters of the locality-witness search.
#[derive(Clone, Debug)]
pub struct SearchSettings {
    pub max_multiplicity: u32,
    /// Probe vectors are all basis vectors up to this degree.
    pub probe_degree: usize,
    /// Half-width of the exponent window on which annihilation is checked.
    pub window: i64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self { max_multiplicity: 4, probe_degree: 2, window: 3 }
    }
}

/// Highest degree any intermediate computation on the module may reach.
pub const MODULE_CAPACITY: usize = 64;

pub struct ModuleAtInfinity {
    pbw: Arc<PbwModule>,
    gamma: GammaData,
    cutoff: usize,
    generators: Vec<Field>,
    candidates: Vec<LinearMap>,
    settings: SearchSettings,
    ymap: RwLock<HashMap<Mono, Field>>,
    witnesses: RwLock<HashMap<(Mono, Mono), Witness>>,
}

fn failed_ids(entries: &[CheckEntry]) -> Option<String> {
    let bad: Vec<String> = entries.iter().filter(|e| !e.passed).map(|e| format!("{}: {}", e.id, e.detail)).collect();
    (!bad.is_empty()).then(|| bad.join("; "))
}

/// The module induced from the one-dimensional representation of the
/// non-positive modes on which `k` acts as `ℓ`, spanned by PBW monomials in
/// the positive modes, with its generator fields `a_W(x) = Σ a_n x^{-n-1}`.
pub fn build_induced_infinity(lie: LieData, gamma: GammaData, level: Q, cutoff: usize) -> Result<ModuleAtInfinity> {
    if let Some(bad) = failed_ids(&lie.validate_algebra()) {
        return Err(Error::ValidationFailed(bad));
    }
    if let Some(bad) = failed_ids(&gamma.validate_gamma(&lie)) {
        return Err(Error::ValidationFailed(bad));
    }
    let alg = ModeAlgebra::new(lie, gamma.clone(), level);
    alg.require_scalings()?;
    let dim = alg.dim();
    let pbw = Arc::new(PbwModule::new(Arc::new(alg), 1, MODULE_CAPACITY.max(4 * cutoff + 16)));
    let generators = (0..dim).map(|i| Field::generator(pbw.clone(), i)).collect();
    let mut candidates = vec![LinearMap::identity()];
    for e in gamma.elements() {
        let g = e.psi.invert();
        if !candidates.contains(&g) {
            candidates.push(g);
        }
    }
    Ok(ModuleAtInfinity {
        pbw,
        gamma,
        cutoff,
        generators,
        candidates,
        settings: SearchSettings::default(),
        ymap: RwLock::new(HashMap::new()),
        witnesses: RwLock::new(HashMap::new()),
    })
}

impl ModuleAtInfinity {
    pub fn with_settings(mut self, settings: SearchSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn pbw(&self) -> &Arc<PbwModule> {
        &self.pbw
    }

    pub fn gamma(&self) -> &GammaData {
        &self.gamma
    }

    pub fn level(&self) -> &Q {
        self.pbw.alg().level()
    }

    pub fn lie(&self) -> &LieData {
        self.pbw.alg().lie()
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dims(&self) -> Vec<usize> {
        self.pbw.dims(self.cutoff)
    }

    pub fn generator(&self, i: usize) -> &Field {
        &self.generators[i]
    }

    pub fn candidates(&self) -> &[LinearMap] {
        &self.candidates
    }

    /// Basis vectors up to degree `d`.
    pub fn basis_upto(&self, d: usize) -> Vec<Vector> {
        (0..=d).flat_map(|k| self.pbw.basis(k)).map(SparseVec::basis).collect()
    }

    pub fn probes(&self) -> Vec<Vector> {
        self.basis_upto(self.settings.probe_degree)
    }

    /// Widened by the field weights: coefficients of derivative-like fields
    /// start further from the origin.
    fn search_window(&self, a: &Field, b: &Field) -> Rect {
        let w = self.settings.window + a.weight().max(0) + b.weight().max(0);
        ((-w, w), (-w, w))
    }

    /// Minimal locality witness of two fields over the `Ψ(Γ)^{-1}`-orbit candidates.
    pub fn find_witness(&self, a: &Field, b: &Field) -> Result<Option<Witness>> {
        locality_witness(a, b, &self.candidates, self.settings.max_multiplicity, &self.probes(), self.search_window(a, b))
    }

    fn witness_for(&self, u: &Mono, v: &Mono) -> Result<Witness> {
        let key = (u.clone(), v.clone());
        if let Some(p) = self.witnesses.read().unwrap().get(&key) {
            return Ok(p.clone());
        }
        let (a, b) = (self.ymap_mono(u)?, self.ymap_mono(v)?);
        let p = self
            .find_witness(&a, &b)?
            .ok_or_else(|| Error::WitnessNotFound(format!("no witness for ({a}, {b})")))?;
        self.witnesses.write().unwrap().insert(key, p.clone());
        Ok(p)
    }

    /// `Y_W` on a PBW monomial of the vertex algebra, following its structure:
    /// `Y_W(a(n) u) = Y_W(a)_n Y_W(u)`.
    pub fn ymap_mono(&self, mono: &Mono) -> Result<Field> {
        if let Some(f) = self.ymap.read().unwrap().get(mono) {
            return Ok(f.clone());
        }
        let f = match mono.as_slice() {
            [] => Field::identity(self.pbw.clone()),
            [(-1, k)] => self.generators[*k].clone(),
            [(m, k), rest @ ..] => {
                let head = vec![(-1, *k)];
                let p = self.witness_for(&head, &rest.to_vec())?;
                Field::nth_product(&self.generators[*k], &self.ymap_mono(&rest.to_vec())?, *m, p)
            }
        };
        self.ymap.write().unwrap().insert(mono.clone(), f.clone());
        Ok(f)
    }

    /// `Y_W` on an arbitrary vertex-algebra vector.
    pub fn ymap(&self, v: &Vector) -> Result<Field> {
        let mut parts = Vec::new();
        for (m, c) in v.iter() {
            let f = self.ymap_mono(m)?;
            parts.push(if c.is_one() { f } else { f.scaled(c.clone()) });
        }
        if parts.is_empty() {
            return Ok(Field::identity(self.pbw.clone()).scaled(Q::zero()));
        }
        Ok(Field::sum(parts))
    }

    /// Witness used when `Y_W(u)` and `Y_W(v)` are multiplied.
    pub fn pair_witness(&self, u: &Vector, v: &Vector) -> Result<Witness> {
        if let (Some(mu), Some(mv)) = (single(u), single(v)) {
            return self.witness_for(mu, mv);
        }
        let (a, b) = (self.ymap(u)?, self.ymap(v)?);
        self.find_witness(&a, &b)?.ok_or_else(|| Error::WitnessNotFound(format!("no witness for ({a}, {b})")))
    }
}

fn single(v: &Vector) -> Option<&Mono> {
    let mut it = v.iter();
    match (it.next(), it.next()) {
        (Some((m, _)), None) => Some(m),
        _ => None,
    }
}

/// Number of nested n-th products used for a monomial.
pub fn nesting_depth(mono: &Mono) -> usize {
    match mono.as_slice() {
        [] | [(-1, _)] => 0,
        [_, rest @ ..] => 1 + nesting_depth(&rest.to_vec()),
    }
}

fn check_pairing(m: &ModuleAtInfinity, va: &VacuumVA) -> Result<()> {
    if va.lie() != &m.lie().opposite() || va.level() != &-m.level().clone() {
        return Err(Error::HypothesisViolated(
            "the vertex algebra must be built from the opposite Lie algebra at level -l".into(),
        ));
    }
    Ok(())
}

/// Define `Y_W` on every basis monomial of `va` up to the cutoff whose
/// nesting depth is at most `depth`; returns the number of fields built.
pub fn extend_ymap(m: &ModuleAtInfinity, va: &VacuumVA, depth: usize) -> Result<usize> {
    check_pairing(m, va)?;
    let mut count = 0;
    for d in 0..=va.cutoff() {
        for mono in va.basis(d) {
            if nesting_depth(&mono) <= depth {
                m.ymap_mono(&mono)?;
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Knobs for [`verify_axioms`].
#[derive(Clone, Debug)]
pub struct AxiomOptions {
    /// Pairs `(u, v)` of vertex-algebra vectors to check.
    pub pairs: Vec<(Vector, Vector)>,
    /// Lowest exponent compared in every series.
    pub floor: i64,
    /// Highest `x0`-power compared in weak associativity.
    pub max_x0_power: i64,
    /// Mode indices `m, n, r` for the opposite Jacobi identity.
    pub jacobi_modes: std::ops::RangeInclusive<i64>,
    /// Range of `n` for the homomorphism check `Y_W(u_n v) = Y_W(u)_n Y_W(v)`.
    pub product_modes: std::ops::RangeInclusive<i64>,
    /// Covariance is checked on every basis vector up to this degree.
    pub covariance_degree: usize,
    pub exec: Exec,
}

/// Generator pairs, pairs with the vacuum, and each generator against the
/// first `composite` degree-two vectors.
pub fn default_pairs(va: &VacuumVA, composite: usize) -> Vec<(Vector, Vector)> {
    let dim = va.lie().dim();
    let gens: Vec<Vector> = (0..dim).map(|i| va.generator(i)).collect();
    let mut out = vec![(va.vacuum(), gens[0].clone())];
    for a in &gens {
        for b in &gens {
            out.push((a.clone(), b.clone()));
        }
    }
    if va.cutoff() >= 2 {
        for m in va.basis(2).into_iter().take(composite) {
            for a in &gens {
                out.push((a.clone(), SparseVec::basis(m.clone())));
            }
        }
    }
    out
}

impl AxiomOptions {
    pub fn new(va: &VacuumVA) -> Self {
        Self {
            pairs: default_pairs(va, 2),
            floor: -4,
            max_x0_power: 3,
            jacobi_modes: -1..=1,
            product_modes: -2..=1,
            covariance_degree: 2,
            exec: Exec::default(),
        }
    }
}

fn zero_series(floor: i64) -> VSeries {
    WindowedSeries::zero(Var::X, floor)
}

/// First place where `got` and `want` differ, as a counterexample.
fn series_mismatch(label: &str, got: &VSeries, want: &VSeries, m: &PbwModule) -> Option<Counterexample> {
    got.first_disagreement(want).map(|(e, g, w)| Counterexample {
        vector: label.to_string(),
        exponents: Some((e, 0)),
        expected: m.vector_label(&w),
        actual: m.vector_label(&g),
    })
}

/// Compare two fields on each probe vector from `floor` upward.
pub fn compare_fields(f: &Field, g: &Field, probes: &[Vector], floor: i64) -> Result<Option<Counterexample>> {
    let m = f.module();
    for w in probes {
        let (a, b) = (f.apply_series(w, floor)?.truncate(floor), g.apply_series(w, floor)?.truncate(floor));
        if let Some(c) = series_mismatch(&m.vector_label(w), &a, &b, m) {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

fn entry_from(id: &str, anchor: &str, pass: String, res: Result<Option<Counterexample>>) -> CheckEntry {
    match res {
        Ok(None) => CheckEntry::pass(id, anchor, pass),
        Ok(Some(c)) => CheckEntry::fail(id, anchor, format!("{pass}: mismatch")).with_counterexample(c),
        Err(e) => CheckEntry::fail(id, anchor, format!("{pass}: {e}")),
    }
}

/// The first witness (same search order as locality) passing the compatibility check.
pub fn compatibility_witness(m: &ModuleAtInfinity, a: &Field, b: &Field, lo: i64) -> Result<Option<Witness>> {
    let probes = m.probes();
    for ks in crate::eocalc::multiplicity_vectors(m.candidates.len(), m.settings.max_multiplicity) {
        let p: Witness = m.candidates.iter().cloned().zip(ks).filter(|(_, k)| *k > 0).collect();
        let mut ok = true;
        for w in &probes {
            match compatibility_check(a, b, &p, w, lo, 2) {
                Ok(()) => {}
                Err(Error::CompatibilityFails(_)) => {
                    ok = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if ok {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

/// `p(x0 + x2, x2) = Σ_s x0^s π_s(x2)`.
fn shifted_parts(p: &[(LinearMap, u32)]) -> Vec<(i64, WindowedSeries<Q>)> {
    let mut by_s: std::collections::BTreeMap<i64, Vec<(i64, Q)>> = Default::default();
    for ((s, j), c) in Poly2::from_factors(p).shift_first().terms() {
        by_s.entry(s).or_default().push((j, c.clone()));
    }
    by_s.into_iter().map(|(s, cs)| (s, WindowedSeries::polynomial(Var::X, &cs))).collect()
}

/// Weak associativity: the `x0^t` coefficients of
/// `p(x0+x2,x2) Y_W(Y(u,x0)v,x2) w` and `(p(x1,x2) Y_W(u,x1) Y_W(v,x2) w)|_{x1=x2+x0}`
/// agree for `t` in `-2..=tmax`.
pub fn weak_associativity_check(
    m: &ModuleAtInfinity,
    va: &VacuumVA,
    u: &Vector,
    v: &Vector,
    floor: i64,
    max_x0_power: i64,
) -> Result<Option<Counterexample>> {
    let (a, b) = (m.ymap(u)?, m.ymap(v)?);
    let p = m.pair_witness(u, v)?;
    let parts = shifted_parts(&p);
    let degp: i64 = p.iter().map(|(_, k)| *k as i64).sum();
    let du = va.pbw().max_degree(u).unwrap_or(0);
    let dv = va.pbw().max_degree(v).unwrap_or(0);
    let tmax = max_x0_power.min(va.cutoff() as i64 - du - dv);
    for w in m.probes() {
        let g = if tmax >= 0 { shifted_coefficients(&a, &b, &p, &w, floor, tmax)? } else { Vec::new() };
        for t in -2..=tmax {
            let mut lhs = zero_series(floor);
            for (s, pi) in &parts {
                let uv = va.vertex_mode(u, s - t - 1, v)?;
                if uv.is_empty() {
                    continue;
                }
                let y = m.ymap(&uv)?.apply_series(&w, floor - degp)?;
                lhs = lhs.add(&y.scalar_mul(pi)?.truncate(floor))?;
            }
            let want = if t >= 0 { g[t as usize].truncate(floor) } else { zero_series(floor) };
            let label = format!("{} at x0^{t}", m.pbw.vector_label(&w));
            if let Some(c) = series_mismatch(&label, &lhs.truncate(floor), &want, &m.pbw) {
                return Ok(Some(c));
            }
        }
    }
    Ok(None)
}

fn sign(k: i64) -> Q {
    if k.rem_euclid(2) == 0 { q(1) } else { q(-1) }
}

/// Opposite Jacobi identity in modes (trivial `Γ`):
/// `Σ_i C(r,i)(-1)^i [v_{n+i} u_{m+r-i} - (-1)^r u_{m+i} v_{n+r-i}] w = Σ_i C(m,i) (u_{r+i}v)_{m+n-i} w`.
pub fn opposite_jacobi_check(
    m: &ModuleAtInfinity,
    va: &VacuumVA,
    u: &Vector,
    v: &Vector,
    modes: std::ops::RangeInclusive<i64>,
) -> Result<Option<Counterexample>> {
    let (a, b) = (m.ymap(u)?, m.ymap(v)?);
    let du = va.pbw().max_degree(u).unwrap_or(0);
    let dv = va.pbw().max_degree(v).unwrap_or(0);
    let mut products: HashMap<i64, Field> = HashMap::new();
    for w in m.probes() {
        let d = m.pbw.max_degree(&w).unwrap_or(0);
        for mm in modes.clone() {
            for n in modes.clone() {
                for r in modes.clone() {
                    if du + dv - r - 1 > va.cutoff() as i64 {
                        continue;
                    }
                    let span = d + mm.abs() + n.abs() + 2 * r.abs() + du + dv + 4;
                    let mut lhs = Vector::new();
                    for i in 0..=span {
                        let c = binom(r, i) * sign(i);
                        if c.is_zero() {
                            continue;
                        }
                        let vu = b.mode(n + i, &a.mode(mm + r - i, &w)?)?;
                        let uv = a.mode(mm + i, &b.mode(n + r - i, &w)?)?;
                        lhs.add_scaled(&vu, &c);
                        lhs.add_scaled(&uv, &(-&c * sign(r)));
                    }
                    let mut rhs = Vector::new();
                    for i in 0..=(du + dv - r - 1).max(-1) {
                        let c = binom(mm, i);
                        if c.is_zero() {
                            continue;
                        }
                        let f = match products.get(&(r + i)) {
                            Some(f) => f.clone(),
                            None => {
                                let f = m.ymap(&va.vertex_mode(u, r + i, v)?)?;
                                products.insert(r + i, f.clone());
                                f
                            }
                        };
                        rhs.add_scaled(&f.mode(mm + n - i, &w)?, &c);
                    }
                    if lhs != rhs {
                        return Ok(Some(Counterexample {
                            vector: format!("{} with (m,n,r)=({mm},{n},{r})", m.pbw.vector_label(&w)),
                            exponents: None,
                            expected: m.pbw.vector_label(&rhs),
                            actual: m.pbw.vector_label(&lhs),
                        }));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// `Y_W(L(γ)v, x) = Y_W(v, Ψ(γ)^{-1}(x))` for one group element.
pub fn covariance_check(m: &ModuleAtInfinity, va: &VacuumVA, g: usize, v: &Vector, floor: i64) -> Result<Option<Counterexample>> {
    let lhs = m.ymap(&va.gamma_action(&m.gamma, g, v)?)?;
    let rhs = m.ymap(v)?.l_action(m.gamma.psi(g));
    Ok(compare_fields(&lhs, &rhs, &m.probes(), floor)?.map(|mut c| {
        c.vector = format!("{} on {}", va.label(v), c.vector);
        c
    }))
}

/// Coefficients of `[a(x1), b(x2)] w = Σ A_ij (1/j!) ∂^j x1^{-1} δ(g_i(x2)/x1)` satisfy
/// `A_ij = -Φ(g_i) a(g_i(x))_j b(x) w`.
pub fn delta_coefficient_check(m: &ModuleAtInfinity, a: &Field, b: &Field, p: &Witness, floor: i64) -> Result<Option<Counterexample>> {
    let window = ((floor, -floor), (floor, -floor));
    for w in m.probes() {
        let terms = commutator_distribution(a, b, p, &w, window, floor)?;
        for (gi, ki) in p {
            let inv = gi.invert();
            let shifted: Witness = p.iter().map(|(g, k)| (inv.compose(g), *k)).collect();
            let ag = a.l_action(&inv);
            for j in 0..*ki {
                let got = terms
                    .iter()
                    .find(|t| t.support() == gi && t.order() == j)
                    .map(|t| t.coefficient().clone().with_var(Var::X).truncate(floor))
                    .unwrap_or_else(|| zero_series(floor));
                let want = Field::nth_product(&ag, b, j as i64, shifted.clone())
                    .apply_series(&w, floor)?
                    .truncate(floor)
                    .scale(&-gi.phi());
                let label = format!("{} at ({gi}, {j})", m.pbw.vector_label(&w));
                if let Some(c) = series_mismatch(&label, &got, &want, &m.pbw) {
                    return Ok(Some(c));
                }
            }
        }
    }
    Ok(None)
}

/// `Y_W(u_n v) = Y_W(u)_n Y_W(v)` with the product taken directly on the two fields.
pub fn homomorphism_check(
    m: &ModuleAtInfinity,
    va: &VacuumVA,
    u: &Vector,
    v: &Vector,
    n: i64,
    floor: i64,
) -> Result<Option<Counterexample>> {
    let uv = va.vertex_mode(u, n, v)?;
    if va.pbw().max_degree(&uv).unwrap_or(0) > va.cutoff() as i64 {
        return Ok(None);
    }
    let direct = Field::nth_product(&m.ymap(u)?, &m.ymap(v)?, n, m.pair_witness(u, v)?);
    Ok(compare_fields(&direct, &m.ymap(&uv)?, &m.probes(), floor)?.map(|mut c| {
        c.vector = format!("n={n} on {}", c.vector);
        c
    }))
}

fn pair_entries(m: &ModuleAtInfinity, va: &VacuumVA, u: &Vector, v: &Vector, opts: &AxiomOptions) -> Vec<CheckEntry> {
    let pair = format!("({}, {})", va.label(u), va.label(v));
    let mut out = Vec::new();
    let fields = m.ymap(u).and_then(|a| Ok((a, m.ymap(v)?)));
    let (a, b) = match fields {
        Ok(f) => f,
        Err(e) => return vec![CheckEntry::fail("qm.locality", "locality", format!("{pair}: {e}"))],
    };
    let p = match m.pair_witness(u, v) {
        Ok(p) => p,
        Err(e) => return vec![CheckEntry::fail("qm.locality", "locality", format!("{pair}: {e}"))],
    };
    out.push(CheckEntry::pass("qm.locality", "locality", format!("{pair}: p = {}", fmt_witness(&p))));
    let compat = m.probes().iter().try_for_each(|w| compatibility_check(&a, &b, &p, w, opts.floor, 2));
    out.push(CheckEntry::from_result("qm.compatibility", "compatibility", compat.map(|_| pair.clone())));
    let lemma = compatibility_witness(m, &a, &b, opts.floor).and_then(|c| match c {
        None => Ok(format!("{pair}: no compatibility witness")),
        Some(c) => {
            if is_locality_witness(&a, &b, &c, &m.probes(), m.search_window(&a, &b))? {
                Ok(format!("{pair}: {} is also a locality witness", fmt_witness(&c)))
            } else {
                Err(Error::WitnessNotFound(format!("{pair}: compatibility witness {} is not local", fmt_witness(&c))))
            }
        }
    });
    out.push(CheckEntry::from_result("qm.compatibility-implies-locality", "weak locality suffices", lemma));
    out.push(entry_from(
        "qm.weak-associativity",
        "weak associativity",
        pair.clone(),
        weak_associativity_check(m, va, u, v, opts.floor, opts.max_x0_power),
    ));
    if m.gamma.len() == 1 {
        out.push(entry_from(
            "qm.opposite-jacobi",
            "opposite Jacobi identity",
            pair.clone(),
            opposite_jacobi_check(m, va, u, v, opts.jacobi_modes.clone()),
        ));
    }
    let generator = |x: &Vector| single(x).is_some_and(|mono| matches!(mono.as_slice(), [(-1, _)]));
    if generator(u) && generator(v) {
        out.push(entry_from(
            "qm.delta-coefficients",
            "commutator delta coefficients",
            pair.clone(),
            delta_coefficient_check(m, &a, &b, &p, opts.floor),
        ));
    }
    let hom = opts.product_modes.clone().try_fold(None, |acc, n| match acc {
        Some(c) => Ok(Some(c)),
        None => homomorphism_check(m, va, u, v, n, opts.floor),
    });
    out.push(entry_from("qm.homomorphism", "homomorphism property", pair, hom));
    out
}

/// Every quasi-module-at-infinity axiom on the sampled pairs, plus vacuum and
/// covariance checks. Failures become report entries.
pub fn verify_axioms(m: &ModuleAtInfinity, va: &VacuumVA, opts: &AxiomOptions) -> VerificationReport {
    if let Err(e) = check_pairing(m, va) {
        return VerificationReport::new(vec![CheckEntry::fail("qm.pairing", "vertex algebra pairing", e.to_string())]);
    }
    let mut entries = Vec::new();
    let one = m.ymap(&va.vacuum());
    let vac = one.and_then(|f| {
        let id = Field::identity(m.pbw.clone());
        compare_fields(&f, &id, &m.probes(), opts.floor)
    });
    entries.push(entry_from("qm.vacuum", "vacuum property", "Y_W(1, x) = 1".into(), vac));
    for es in opts.exec.map(&opts.pairs, |(u, v)| pair_entries(m, va, u, v, opts)) {
        entries.extend(es);
    }
    let top = opts.covariance_degree.min(va.cutoff());
    let vectors: Vec<(usize, Vector)> = (0..m.gamma.len())
        .flat_map(|g| (0..=top).flat_map(move |d| va.basis(d).into_iter().map(move |b| (g, SparseVec::basis(b)))))
        .collect();
    let cov = opts.exec.map(&vectors, |(g, v)| covariance_check(m, va, *g, v, opts.floor));
    let mut first_bad = None;
    for (res, (g, v)) in cov.into_iter().zip(&vectors) {
        match res {
            Ok(None) => {}
            other => {
                first_bad = Some((other, *g, v.clone()));
                break;
            }
        }
    }
    let detail = format!("{} vectors up to degree {top}, {} group elements", vectors.len() / m.gamma.len(), m.gamma.len());
    entries.push(match first_bad {
        None => CheckEntry::pass("qm.covariance", "Gamma covariance", detail),
        Some((res, g, v)) => {
            entry_from("qm.covariance", "Gamma covariance", format!("{} for {}", va.label(&v), m.gamma.elements()[g].name), res)
        }
    });
    VerificationReport::new(entries)
}

/// The commutator formula: `[Y_W(u,x1), Y_W(v,x2)]` equals
/// `-Σ_{σ,j} φ(σ)^{-1} Y_W((L(σ)u)_j v, x2) (1/j!) ∂_{x2}^j x1^{-1} δ(Ψ(σ)^{-1}(x2)/x1)`
/// on every probe within `window`. Also returns how many group elements contribute.
pub fn commutator_formula_check(
    m: &ModuleAtInfinity,
    va: &VacuumVA,
    u: &Vector,
    v: &Vector,
    window: Rect,
) -> Result<(CheckEntry, usize)> {
    if !m.gamma.is_injective() {
        return Err(Error::HypothesisViolated("the map from the group to substitutions is not injective".into()));
    }
    check_pairing(m, va)?;
    let pair = format!("({}, {})", va.label(u), va.label(v));
    let (a, b) = (m.ymap(u)?, m.ymap(v)?);
    let ((lo1, _), (lo2, _)) = window;
    let mut rhs_fields = Vec::new();
    for g in 0..m.gamma.len() {
        let lu = va.gamma_action(&m.gamma, g, u)?;
        let scale = -m.gamma.phi(g).recip();
        let mut j = 0u32;
        loop {
            let d = va.pbw().max_degree(&lu).unwrap_or(0) + va.pbw().max_degree(v).unwrap_or(0) - j as i64 - 1;
            if d < 0 {
                break;
            }
            let c = va.vertex_mode(&lu, j as i64, v)?;
            if !c.is_empty() {
                rhs_fields.push((g, j, m.ymap(&c)?.scaled(scale.clone())));
            }
            j += 1;
        }
    }
    let contributing = {
        let mut gs: Vec<usize> = rhs_fields.iter().map(|(g, _, _)| *g).collect();
        gs.dedup();
        gs.len()
    };
    let max_j = rhs_fields.iter().map(|(_, j, _)| *j as i64).max().unwrap_or(0);
    let floor = lo1 + lo2 - 2 * max_j - 4;
    for w in m.probes() {
        let lhs = Grid::from_source(&CommutatorStream::new(&a, &b, &w), window)?;
        let mut rhs = Grid::zero(window);
        for (g, j, f) in &rhs_fields {
            let t = field_delta_term(f, &m.gamma.psi(*g).invert(), *j, &w, floor)?;
            rhs.add_scaled(&t.coeff_stream(window)?, &Q::one());
        }
        if let Some((e, got, want)) = lhs.first_disagreement(&rhs) {
            let c = Counterexample {
                vector: m.pbw.vector_label(&w),
                exponents: Some(e),
                expected: m.pbw.vector_label(&want),
                actual: m.pbw.vector_label(&got),
            };
            let entry = CheckEntry::fail("qm.commutator-formula", "commutator formula", pair).with_counterexample(c);
            return Ok((entry, contributing));
        }
    }
    let detail = format!("{pair}: {} terms from {contributing} group elements on {window:?}", rhs_fields.len());
    Ok((CheckEntry::pass("qm.commutator-formula", "commutator formula", detail), contributing))
}

/// Mode actions read off the generator fields: `u_n w = Σ_k u_k Res_x x^n Y_W(a_k, x) w`.
pub fn extracted_action(m: &ModuleAtInfinity) -> ModeAlgebraAction<'_, Vector> {
    let fields = m.generators.clone();
    ModeAlgebraAction::new(m.pbw.alg(), move |n, u: &[Q], w: &Vector| {
        let mut out = Vector::new();
        for (k, c) in u.iter().enumerate() {
            if !c.is_zero() {
                out.add_scaled(&fields[k].mode(n, w)?, c);
            }
        }
        Ok(out)
    })
}

/// Recover the mode algebra action from the fields and check it: the group
/// relation `(γu)_n = φ(γ)^n u_n`, the brackets with Jacobi, the level, and
/// equality with the action the module was built from on degrees up to
/// `degree`.
pub fn extract_mode_algebra<'a>(m: &'a ModuleAtInfinity, modes: &[i64], degree: usize) -> (ModeAlgebraAction<'a, Vector>, VerificationReport) {
    let action = extracted_action(m);
    let alg = m.pbw.alg();
    let dim = alg.dim();
    let basis = m.basis_upto(degree);
    let probes = m.basis_upto(m.settings.probe_degree);
    let mut entries = Vec::new();

    let relation = (|| -> Result<Option<String>> {
        for g in 0..m.gamma.len() {
            for k in 0..dim {
                let e = alg.lie().basis_vec(k);
                let ge = m.gamma.act(g, &e);
                for &n in modes {
                    for w in &probes {
                        let lhs = action.act(n, &ge, w)?;
                        let rhs = action.act(n, &e, w)?.scale(&crate::scalar::qpow(&m.gamma.phi(g), n));
                        if lhs != rhs {
                            let name = &m.gamma.elements()[g].name;
                            return Ok(Some(format!("{name}·{}({n}) on {}", alg.lie().labels[k], m.pbw.vector_label(w))));
                        }
                    }
                }
            }
        }
        Ok(None)
    })();
    entries.push(match relation {
        Ok(None) => CheckEntry::pass("qm.extract.relation", "(γu)_n = φ(γ)^n u_n", format!("modes {modes:?}")),
        Ok(Some(d)) => CheckEntry::fail("qm.extract.relation", "(γu)_n = φ(γ)^n u_n", d),
        Err(e) => CheckEntry::fail("qm.extract.relation", "(γu)_n = φ(γ)^n u_n", e.to_string()),
    });

    match action.jacobi_check(modes, &probes) {
        Ok(es) => entries.extend(es),
        Err(e) => entries.push(CheckEntry::fail("modes.realized", "mode brackets", e.to_string())),
    }

    let round_trip = (|| -> Result<Option<Counterexample>> {
        let lo = *modes.iter().min().unwrap_or(&0);
        let hi = *modes.iter().max().unwrap_or(&0);
        for w in &basis {
            for k in 0..dim {
                for n in lo.min(-(degree as i64))..=hi {
                    let got = action.act(n, &alg.lie().basis_vec(k), w)?;
                    let want = m.pbw.apply_generator(k, n, w)?;
                    if got != want {
                        return Ok(Some(Counterexample {
                            vector: format!("{}({n}) on {}", alg.lie().labels[k], m.pbw.vector_label(w)),
                            exponents: None,
                            expected: m.pbw.vector_label(&want),
                            actual: m.pbw.vector_label(&got),
                        }));
                    }
                }
            }
        }
        Ok(None)
    })();
    entries.push(entry_from(
        "qm.extract.round-trip",
        "extracted action equals the inducing action",
        format!("{} basis vectors up to degree {degree}", basis.len()),
        round_trip,
    ));

    entries.push(match extracted_level(m, &action) {
        Ok(Some(l)) if &l == m.level() => CheckEntry::pass("qm.extract.level", "central element acts as the level", format!("level {l}")),
        Ok(Some(l)) => CheckEntry::fail("qm.extract.level", "central element acts as the level", format!("got {l}, built with {}", m.level())),
        Ok(None) => CheckEntry::pass("qm.extract.level", "central element acts as the level", "no central bracket in range"),
        Err(e) => CheckEntry::fail("qm.extract.level", "central element acts as the level", e.to_string()),
    });
    (action, VerificationReport::new(entries))
}

/// The scalar by which the central element acts, read off
/// `[u_j, v_{-j}] v0 - ([u,v]-part)_0 v0` against the unit-level bracket.
pub fn extracted_level(m: &ModuleAtInfinity, action: &ModeAlgebraAction<'_, Vector>) -> Result<Option<Q>> {
    let alg = m.pbw.alg();
    let unit = ModeAlgebra::new(alg.lie().clone(), m.gamma.clone(), Q::one());
    let v0 = m.pbw.vacuum();
    for j in 1..=4i64 {
        for a in 0..alg.dim() {
            for b in 0..alg.dim() {
                if unit.mode_dim(j) == 0 || unit.mode_dim(-j) == 0 {
                    continue;
                }
                let (u, v) = (unit.project(j, &alg.lie().basis_vec(a)), unit.project(-j, &alg.lie().basis_vec(b)));
                let (vec, kappa) = unit.bracket_vectors(j, &u, -j, &v);
                if kappa.is_zero() {
                    continue;
                }
                let mut c = action.act(j, &u, &action.act(-j, &v, &v0)?)?;
                c.add_scaled(&action.act(-j, &v, &action.act(j, &u, &v0)?)?, &q(-1));
                c.add_scaled(&action.act(0, &vec, &v0)?, &q(-1));
                return Ok(Some(c.get(&Mono::new()) / kappa));
            }
        }
    }
    Ok(None)
}
