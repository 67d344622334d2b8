//! Named verification suites driven by a [`RunConfig`].

use std::sync::Arc;

use crate::config::{RunConfig, Suite};
use crate::delta::{decompose, delta_term, DeltaDistribution, DeltaTerm, Grid, StreamSource};
use crate::eocalc::{fmt_witness, nth_products, Field, Witness};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::liealg::{ModeAlgebra, ModeAlgebraAction};
use crate::lingroup::LinearMap;
use crate::pbw::{PbwModule, Vector};
use crate::poly::neg_map_power;
use crate::qmiverify::{
    build_induced_infinity, commutator_formula_check, compare_fields, delta_coefficient_check, extend_ymap,
    extract_mode_algebra, verify_axioms, AxiomOptions, ModuleAtInfinity,
};
use crate::report::{CheckEntry, Counterexample, VerificationReport};
use crate::scalar::{binom, frac, q, qpow, Q};
use crate::series::{Rect, Var, WindowedSeries, EXACT_FLOOR};
use crate::sparse::SparseVec;
use crate::vacuumva::{build_vacuum, VacuumVA};

/// Supports used by the delta-calculus suite: `x, -x, 2x, x + 1`.
pub fn delta_supports() -> Vec<LinearMap> {
    vec![
        LinearMap::identity(),
        LinearMap::scaling(q(-1)),
        LinearMap::scaling(q(2)),
        LinearMap::new(q(1), q(1)),
    ]
}

fn sample_coefficient(seed: usize) -> WindowedSeries<Q> {
    let s = seed as i64;
    WindowedSeries::polynomial(Var::X2, &[(0, q(1 + s % 3)), (-1, q(2 - s % 2)), (-3, frac(1 - s, 2))])
}

/// Every choice of a nonempty subset of the supports with one order in
/// `0..=max_order` per chosen point, each with its own coefficient.
pub fn generated_distributions(max_order: u32) -> Vec<Vec<DeltaTerm<Q>>> {
    let pts = delta_supports();
    let mut out = Vec::new();
    for mask in 1u32..(1 << pts.len()) {
        let chosen: Vec<&LinearMap> = pts.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, g)| g).collect();
        let combos = (max_order + 1).pow(chosen.len() as u32);
        for c in 0..combos {
            let mut rest = c;
            let terms = chosen
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    let j = rest % (max_order + 1);
                    rest /= max_order + 1;
                    delta_term((*g).clone(), j, sample_coefficient(out.len() + i))
                })
                .collect();
            out.push(terms);
        }
    }
    out
}

/// `Res_{x1} (x1 - g(x2))^l A`.
fn residue_against(src: &dyn StreamSource<Q>, g: &LinearMap, l: u32, floor: i64) -> Result<WindowedSeries<Q>> {
    let mut acc = WindowedSeries::zero(Var::X2, EXACT_FLOOR);
    for i in 0..=l {
        let row = src.row(-1 - i as i64, floor - (l - i) as i64)?;
        let p = neg_map_power(g, l - i, Var::X2);
        acc = acc.add(&row.scalar_mul(&p)?.scale(&binom(l as i64, i as i64)))?;
    }
    Ok(acc.truncate(floor))
}

fn grid_mismatch(what: String, a: &Grid<Q>, b: &Grid<Q>) -> Option<Counterexample> {
    a.first_disagreement(b).map(|(e, x, y)| Counterexample {
        vector: what,
        exponents: Some(e),
        expected: y.to_string(),
        actual: x.to_string(),
    })
}

fn describe(terms: &[DeltaTerm<Q>]) -> String {
    terms.iter().map(|t| format!("d{}[{}]", t.order(), t.support())).collect::<Vec<_>>().join(" + ")
}

/// The four delta-calculus checks on one distribution; `None` when all pass.
fn delta_checks(terms: &[DeltaTerm<Q>], window: Rect) -> Result<[Option<Counterexample>; 4]> {
    let d = DeltaDistribution::from_terms(terms.to_vec())?;
    let name = describe(terms);
    let p: Vec<(LinearMap, u32)> = terms.iter().map(|t| (t.support().clone(), t.order() + 1)).collect();
    let mut annihilation = None;
    if !d.poly_mul(&p)?.is_zero() {
        annihilation = Some(Counterexample { vector: name.clone(), exponents: None, expected: "0".into(), actual: "nonzero".into() });
    }
    for (i, t) in terms.iter().enumerate() {
        let mut short = p.clone();
        short[i].1 = t.order();
        if annihilation.is_none() && d.poly_mul(&short)?.is_zero() {
            annihilation = Some(Counterexample {
                vector: format!("{name} without one factor at {}", t.support()),
                exponents: None,
                expected: "nonzero".into(),
                actual: "0".into(),
            });
        }
    }
    let mut flip = None;
    for t in terms.iter().filter(|t| t.order() == 0) {
        if flip.is_none() {
            flip = grid_mismatch(format!("flip of d0[{}]", t.support()), &t.flip()?.coeff_stream(window)?, &t.coeff_stream(window)?);
        }
    }
    let floor = -4;
    let mut residue = None;
    for t in terms {
        let g = t.support();
        let got = residue_against(t, g, t.order(), floor)?;
        let want = t.coefficient().scale(&qpow(g.alpha(), t.order() as i64)).truncate(floor);
        let killed = residue_against(t, g, t.order() + 1, floor)?;
        if residue.is_none() {
            if let Some((e, x, y)) = got.first_disagreement(&want) {
                residue = Some(Counterexample {
                    vector: format!("d{}[{g}]", t.order()),
                    exponents: Some((-1, e)),
                    expected: y.to_string(),
                    actual: x.to_string(),
                });
            } else if !killed.is_zero() {
                residue = Some(Counterexample {
                    vector: format!("d{}[{g}] against one extra factor", t.order()),
                    exponents: None,
                    expected: "0".into(),
                    actual: killed.to_string(),
                });
            }
        }
    }
    let coeff_floor = window.0 .0 + window.1 .0 - 4;
    let back = DeltaDistribution::from_terms(decompose(&d, &p, window, coeff_floor)?)?;
    let round = grid_mismatch(format!("decompose of {name}"), &back.grid(window)?, &d.grid(window)?);
    Ok([annihilation, flip, residue, round])
}

/// Annihilation rule, flip identity, residue pairing and the decompose round
/// trip over [`generated_distributions`].
pub fn delta_suite(max_order: u32, window: Rect, exec: Exec) -> Vec<CheckEntry> {
    let dists = generated_distributions(max_order);
    let results = exec.map(&dists, |t| delta_checks(t, window));
    let ids = [
        ("delta.annihilation", "(x1 - g(x2))^{j+1} kills the order-j term, j factors do not"),
        ("delta.flip", "x1^{-1}δ(g(x2)/x1) = Φ(g)^{-1} x2^{-1}δ(g^{-1}(x1)/x2)"),
        ("delta.residue", "Res_{x1} (x1 - g(x2))^j of the order-j term is Φ(g)^j c(x2)"),
        ("delta.round-trip", "decompose then reconstruct is the identity"),
    ];
    let detail = format!("{} distributions on {window:?}", dists.len());
    ids.iter()
        .enumerate()
        .map(|(k, (id, anchor))| {
            for r in &results {
                match r {
                    Err(e) => return CheckEntry::fail(*id, *anchor, e.to_string()),
                    Ok(cs) => {
                        if let Some(c) = &cs[k] {
                            return CheckEntry::fail(*id, *anchor, detail.clone()).with_counterexample(c.clone());
                        }
                    }
                }
            }
            CheckEntry::pass(*id, *anchor, detail.clone())
        })
        .collect()
}

/// `dim(V_d)` for PBW monomials in `rank` generators with modes of every
/// positive degree: the coefficient of `q^d` in `Π_{n>=1} (1 - q^n)^{-rank}`.
pub fn pbw_counts(rank: usize, top: usize) -> Vec<u64> {
    let mut c = vec![0u64; top + 1];
    c[0] = 1;
    for n in 1..=top {
        for _ in 0..rank {
            for d in n..=top {
                c[d] += c[d - n];
            }
        }
    }
    c
}

fn failing(id: &str, anchor: &str, e: Error) -> Vec<CheckEntry> {
    vec![CheckEntry::fail(id, anchor, e.to_string())]
}

fn validation(cfg: &RunConfig) -> Vec<CheckEntry> {
    let mut out = cfg.lie.validate_algebra();
    if cfg.lie.validate_algebra().iter().all(|e| e.id != "lie.shape") {
        out.extend(cfg.gamma.validate_gamma(&cfg.lie));
    }
    out
}

fn build_module(cfg: &RunConfig) -> Result<ModuleAtInfinity> {
    build_induced_infinity(cfg.lie.clone(), cfg.gamma.clone(), cfg.level.clone(), cfg.cutoff)
}

fn build_dual_vacuum(cfg: &RunConfig) -> VacuumVA {
    build_vacuum(cfg.lie.opposite(), -cfg.level.clone(), cfg.cutoff)
}

const FLOOR: i64 = -4;

fn mode_algebra_suite(cfg: &RunConfig) -> Result<Vec<CheckEntry>> {
    let alg = Arc::new(ModeAlgebra::new(cfg.lie.clone(), cfg.gamma.clone(), cfg.level.clone()));
    alg.require_scalings()?;
    let pbw = PbwModule::new(alg.clone(), 1, 16);
    let probes: Vec<Vector> = (0..=1).flat_map(|d| pbw.basis(d)).map(SparseVec::basis).collect();
    let action = ModeAlgebraAction::new(&alg, |m, u: &[Q], w: &Vector| pbw.apply(m, u, w));
    action.jacobi_check(&[-2, -1, 0, 1, 2], &probes)
}

fn vacuum_suite(cfg: &RunConfig) -> Result<Vec<CheckEntry>> {
    let va = build_dual_vacuum(cfg);
    let dims: Vec<u64> = va.dims().into_iter().map(|d| d as u64).collect();
    let want = pbw_counts(cfg.lie.dim(), cfg.cutoff);
    let mut out = vec![if dims == want {
        CheckEntry::pass("va.dims", "graded dimensions are PBW counts", format!("{dims:?}"))
    } else {
        CheckEntry::fail("va.dims", "graded dimensions are PBW counts", format!("got {dims:?}, expected {want:?}"))
    }];
    out.extend(va.spot_checks(&cfg.gamma, -2..=2)?);
    let probes: Vec<Vector> = (0..=cfg.cutoff.min(1)).flat_map(|d| va.basis(d)).map(SparseVec::basis).collect();
    let mut bad = None;
    'outer: for i in 0..cfg.lie.dim() {
        for j in 0..cfg.lie.dim() {
            for m in -2..=2 {
                for n in -2..=2 {
                    if let Some(c) = va.borcherds_commutator_check(&va.generator(i), &va.generator(j), m, n, &probes)? {
                        bad = Some(c);
                        break 'outer;
                    }
                }
            }
        }
    }
    let anchor = "[u_m, v_n] = Σ_i C(m,i) (u_i v)_{m+n-i}";
    out.push(match bad {
        None => CheckEntry::pass("va.borcherds", anchor, "generator pairs, m, n in [-2, 2]"),
        Some(c) => CheckEntry::fail("va.borcherds", anchor, "commutator formula fails").with_counterexample(c),
    });
    Ok(out)
}

fn quasi_module_suite(cfg: &RunConfig, exec: Exec) -> Result<Vec<CheckEntry>> {
    let m = build_module(cfg)?;
    let va = build_dual_vacuum(cfg);
    let built = extend_ymap(&m, &va, 2);
    let mut out = vec![CheckEntry::from_result(
        "qm.extend",
        "Y_W extended along nested products",
        built.map(|n| format!("{n} basis vectors up to degree {}", cfg.cutoff)),
    )];
    let mut opts = AxiomOptions::new(&va);
    opts.exec = exec;
    opts.floor = FLOOR;
    out.extend(verify_axioms(&m, &va, &opts).entries);
    Ok(out)
}

fn generator_pairs(dim: usize) -> Vec<(usize, usize)> {
    (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).collect()
}

fn commutator_suite(cfg: &RunConfig, exec: Exec) -> Result<Vec<CheckEntry>> {
    let m = build_module(cfg)?;
    let va = build_dual_vacuum(cfg);
    let w = (cfg.window, cfg.window);
    let res = exec.map(&generator_pairs(cfg.lie.dim()), |(i, j)| {
        commutator_formula_check(&m, &va, &va.generator(*i), &va.generator(*j), w)
    });
    Ok(res
        .into_iter()
        .map(|r| match r {
            Ok((e, _)) => e,
            Err(e) => CheckEntry::fail("qm.commutator-formula", "commutator formula", e.to_string()),
        })
        .collect())
}

fn round_trip_suite(cfg: &RunConfig) -> Result<Vec<CheckEntry>> {
    let m = build_module(cfg)?;
    let (_, r) = extract_mode_algebra(&m, &[-2, -1, 0, 1, 2], cfg.degree);
    Ok(r.entries)
}

fn products_suite(cfg: &RunConfig, exec: Exec) -> Result<Vec<CheckEntry>> {
    let m = build_module(cfg)?;
    let res = exec.map(&generator_pairs(cfg.lie.dim()), |(i, j)| -> Result<Vec<CheckEntry>> {
        let (a, b) = (m.generator(*i), m.generator(*j));
        let pair = format!("({a}, {b})");
        let p = m.find_witness(a, b)?.ok_or_else(|| Error::WitnessNotFound(pair.clone()))?;
        let products = nth_products(a, b, &p, -1, &m.probes(), FLOOR).map(|ps| format!("{pair}: n in {:?}", ps.keys().collect::<Vec<_>>()));
        Ok(vec![
            CheckEntry::from_result("products.compatible", "n-th products exist for a compatible witness", products),
            match delta_coefficient_check(&m, a, b, &p, FLOOR) {
                Ok(None) => CheckEntry::pass("products.coefficients", "A_ij = -Φ(g_i) a(g_i(x))_j b(x)", pair),
                Ok(Some(c)) => CheckEntry::fail("products.coefficients", "A_ij = -Φ(g_i) a(g_i(x))_j b(x)", pair).with_counterexample(c),
                Err(e) => CheckEntry::fail("products.coefficients", "A_ij = -Φ(g_i) a(g_i(x))_j b(x)", format!("{pair}: {e}")),
            },
        ])
    });
    Ok(res.into_iter().flat_map(|r| r.unwrap_or_else(|e| failing("products.compatible", "n-th products", e))).collect())
}

/// `p` with one more power of `x1 - x2`.
pub fn raise_identity(p: &Witness) -> Witness {
    let mut out = p.clone();
    match out.iter_mut().find(|(g, _)| g.is_identity()) {
        Some(f) => f.1 += 1,
        None => out.insert(0, (LinearMap::identity(), 1)),
    }
    out
}

fn witness_independence_suite(cfg: &RunConfig, exec: Exec) -> Result<Vec<CheckEntry>> {
    let m = build_module(cfg)?;
    let anchor = "n-th products do not depend on the witness";
    let res = exec.map(&generator_pairs(cfg.lie.dim()), |(i, j)| -> Result<CheckEntry> {
        let (a, b) = (m.generator(*i), m.generator(*j));
        let p = m.find_witness(a, b)?.ok_or_else(|| Error::WitnessNotFound(format!("({a}, {b})")))?;
        let big = raise_identity(&p);
        let detail = format!("({a}, {b}): {} vs {}", fmt_witness(&p), fmt_witness(&big));
        let k = big.iter().find(|(g, _)| g.is_identity()).map_or(0, |f| f.1 as i64);
        for n in -2..k {
            let (x, y) = (Field::nth_product(a, b, n, p.clone()), Field::nth_product(a, b, n, big.clone()));
            if let Some(c) = compare_fields(&x, &y, &m.probes(), FLOOR)? {
                return Ok(CheckEntry::fail("products.witness-independence", anchor, format!("{detail}, n = {n}")).with_counterexample(c));
            }
        }
        Ok(CheckEntry::pass("products.witness-independence", anchor, detail))
    });
    Ok(res.into_iter().map(|r| r.unwrap_or_else(|e| CheckEntry::fail("products.witness-independence", anchor, e.to_string()))).collect())
}

/// Entries of one suite. Construction errors become failing entries.
pub fn run_one(cfg: &RunConfig, suite: Suite, exec: Exec) -> Vec<CheckEntry> {
    if suite == Suite::LieData {
        return validation(cfg);
    }
    if suite == Suite::DeltaCalculus {
        return delta_suite(2, (cfg.window, cfg.window), exec);
    }
    let res = match suite {
        Suite::ModeAlgebra => mode_algebra_suite(cfg),
        Suite::Vacuum => vacuum_suite(cfg),
        Suite::QuasiModule => quasi_module_suite(cfg, exec),
        Suite::CommutatorFormula => commutator_suite(cfg, exec),
        Suite::RoundTrip => round_trip_suite(cfg),
        Suite::Products => products_suite(cfg, exec),
        Suite::WitnessIndependence => witness_independence_suite(cfg, exec),
        Suite::LieData | Suite::DeltaCalculus => unreachable!(),
    };
    res.unwrap_or_else(|e| failing(&format!("{suite}.setup"), "construction of the objects under test", e))
}

/// All configured suites, in order. An empty suite list gives an empty report.
pub fn run_suite(cfg: &RunConfig, exec: Exec) -> VerificationReport {
    let mut report = VerificationReport::default();
    for s in &cfg.suites {
        report.extend(run_one(cfg, *s, exec));
    }
    report
}
