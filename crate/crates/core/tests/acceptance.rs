//! Acceptance runs. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use qmi_core::eocalc::Field;
use qmi_core::exec::Exec;
use qmi_core::liealg::{GammaData, LieData};
use qmi_core::lingroup::LinearMap;
use qmi_core::pbw::Vector;
use qmi_core::qmiverify::{
    build_induced_infinity, commutator_formula_check, compare_fields, delta_coefficient_check, extend_ymap,
    extract_mode_algebra, extracted_action, verify_axioms, AxiomOptions, ModuleAtInfinity,
};
use qmi_core::report::VerificationReport;
use qmi_core::scalar::q;
use qmi_core::sparse::Coeff;
use qmi_core::suites::{delta_suite, pbw_counts, raise_identity};
use qmi_core::vacuumva::{build_vacuum, VacuumVA};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn all_pass(r: &VerificationReport) -> Result<(), String> {
    match r.failures().next() {
        None => Ok(()),
        Some(e) => Err(format!("{} failed: {} {:?}", e.id, e.detail, e.counterexample)),
    }
}

fn ok<T>(r: qmi_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn pair(lie: LieData, gamma: GammaData, level: i64, cutoff: usize) -> Result<(ModuleAtInfinity, VacuumVA), String> {
    let m = ok(build_induced_infinity(lie.clone(), gamma, q(level), cutoff))?;
    let va = build_vacuum(lie.opposite(), q(-level), cutoff);
    Ok((m, va))
}

fn heisenberg(level: i64, cutoff: usize) -> Result<(ModuleAtInfinity, VacuumVA), String> {
    pair(LieData::abelian(1), GammaData::trivial(1), level, cutoff)
}

fn twisted(level: i64, cutoff: usize) -> Result<(ModuleAtInfinity, VacuumVA), String> {
    pair(LieData::abelian(1), GammaData::z2_negation(1), level, cutoff)
}

fn delta_calculus() -> Outcome {
    let start = Instant::now();
    let entries = delta_suite(2, ((-10, 10), (-10, 10)), Exec::default());
    let elapsed = start.elapsed();
    all_pass(&VerificationReport::new(entries.clone()))?;
    let ids: Vec<&str> = entries.iter().map(|e| e.id.as_str()).collect();
    ensure(ids == ["delta.annihilation", "delta.flip", "delta.residue", "delta.round-trip"], || format!("entries {ids:?}"))?;
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("{} in {elapsed:.2?}", entries[0].detail))
}

/// Fields of every vacuum basis vector up to degree 2.
fn low_fields(m: &ModuleAtInfinity, va: &VacuumVA) -> Result<Vec<Field>, String> {
    (0..=2).flat_map(|d| va.basis(d)).map(|mono| ok(m.ymap(&Vector::basis(mono)))).collect()
}

fn product_coefficients() -> Outcome {
    let mut pairs = 0;
    for (name, (m, va)) in [("heisenberg", heisenberg(1, 6)?), ("twisted", twisted(1, 6)?)] {
        let fields = low_fields(&m, &va)?;
        for a in &fields {
            for b in &fields {
                let p = ok(m.find_witness(a, b))?.ok_or_else(|| format!("{name}: no witness for ({a}, {b})"))?;
                if let Some(c) = delta_coefficient_check(&m, a, b, &p, -4).map_err(|e| format!("{name}: ({a}, {b}) with {p:?}: {e}"))? {
                    return Err(format!("{name}: ({a}, {b}) disagrees: {c:?}"));
                }
                pairs += 1;
            }
        }
    }
    Ok(format!("{pairs} field pairs at D=6"))
}

const AXIOM_IDS: [&str; 4] = ["qm.compatibility", "qm.weak-associativity", "qm.opposite-jacobi", "qm.covariance"];

fn heisenberg_end_to_end() -> Outcome {
    let start = Instant::now();
    let mut checks = 0;
    for level in [1, 2, -1] {
        let (m, va) = heisenberg(level, 6)?;
        ok(extend_ymap(&m, &va, 2))?;
        let r = verify_axioms(&m, &va, &AxiomOptions::new(&va));
        all_pass(&r).map_err(|e| format!("level {level}: {e}"))?;
        for id in AXIOM_IDS {
            ensure(r.entries.iter().any(|e| e.id == id), || format!("level {level}: no {id} entry"))?;
        }
        checks += r.entries.len();
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("levels 1, 2, -1: {checks} checks in {elapsed:.2?}"))
}

fn bracket_on(action: &qmi_core::liealg::ModeAlgebraAction<'_, Vector>, m: i64, n: i64, w: &Vector) -> Result<Vector, String> {
    let one = [q(1)];
    let ab = ok(action.act(m, &one, &ok(action.act(n, &one, w))?))?;
    let ba = ok(action.act(n, &one, &ok(action.act(m, &one, w))?))?;
    Ok(ab.sub(&ba))
}

fn twisted_module() -> Outcome {
    let (m, va) = twisted(1, 6)?;
    let a = va.generator(0);
    let p = ok(m.pair_witness(&a, &a))?;
    let minus = LinearMap::scaling(q(-1));
    ensure(p == vec![(LinearMap::identity(), 2), (minus, 2)], || format!("witness {p:?}"))?;
    let basis = m.basis_upto(5);
    for level in [1, 3] {
        let (m, _) = twisted(level, 6)?;
        let action = extracted_action(&m);
        for w in &basis {
            for n in [-4, -2, 0, 2, 4] {
                let v = ok(action.act(n, &[q(1)], w))?;
                ensure(v.is_empty(), || format!("level {level}: a({n}) acts nontrivially on {w:?}"))?;
            }
            let c1 = bracket_on(&action, 1, -1, w)?;
            let want = w.scale(&q(2 * level));
            ensure(c1 == want, || format!("level {level}: [a(1), a(-1)] on {w:?} is {c1:?}"))?;
            let c2 = bracket_on(&action, 2, -2, w)?;
            ensure(c2.is_empty(), || format!("level {level}: [a(2), a(-2)] on {w:?} is {c2:?}"))?;
        }
    }
    let (e, terms) = ok(commutator_formula_check(&m, &va, &a, &a, ((-12, 12), (-12, 12))))?;
    ensure(e.passed, || format!("{e:?}"))?;
    ensure(terms == 2, || format!("{terms} group-element terms"))?;
    Ok(format!("witness (x1 - x2)^2 (x1 + x2)^2, {} basis vectors, 2 terms", basis.len()))
}

fn sl2() -> Outcome {
    let lie = LieData::sl2();
    let (m, va) = pair(lie.clone(), GammaData::trivial(3), 1, 4)?;
    let dims: Vec<u64> = va.dims().into_iter().map(|d| d as u64).collect();
    ensure(dims == pbw_counts(3, 4), || format!("dims {dims:?}"))?;
    let probes: Vec<Vector> = (0..=1).flat_map(|d| va.basis(d)).map(Vector::basis).collect();
    for i in 0..3 {
        for j in 0..3 {
            for a in -2..=2 {
                for b in -2..=2 {
                    if let Some(c) = ok(va.borcherds_commutator_check(&va.generator(i), &va.generator(j), a, b, &probes))? {
                        return Err(format!("borcherds ({i}, {j}) at ({a}, {b}): {c:?}"));
                    }
                }
            }
        }
    }
    let r = verify_axioms(&m, &va, &AxiomOptions::new(&va));
    all_pass(&r)?;
    Ok(format!("dims {dims:?}, {} axiom checks", r.entries.len()))
}

fn round_trip() -> Outcome {
    let mut modules = Vec::new();
    for level in [1, 2, -1] {
        modules.push((format!("heisenberg level {level}"), heisenberg(level, 6)?.0));
    }
    modules.push(("twisted level 1".to_string(), twisted(1, 6)?.0));
    for (name, m) in &modules {
        let (_, r) = extract_mode_algebra(m, &[-2, -1, 0, 1, 2], 5);
        all_pass(&r).map_err(|e| format!("{name}: {e}"))?;
        ensure(r.entries.iter().any(|e| e.id == "qm.extract.round-trip"), || format!("{name}: no round-trip entry"))?;
    }
    Ok(format!("{} modules, degree <= 5", modules.len()))
}

fn witness_independence() -> Outcome {
    let mut compared = 0;
    for (name, (m, va)) in [("heisenberg", heisenberg(1, 6)?), ("twisted", twisted(1, 6)?)] {
        let a = ok(m.ymap(&va.generator(0)))?;
        let p = ok(m.pair_witness(&va.generator(0), &va.generator(0)))?;
        let big = raise_identity(&p);
        for n in -3..3 {
            let x = Field::nth_product(&a, &a, n, p.clone());
            let y = Field::nth_product(&a, &a, n, big.clone());
            if let Some(c) = ok(compare_fields(&x, &y, &m.probes(), -6))? {
                return Err(format!("{name}, n = {n}: {c:?}"));
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} products agree under (x1 - x2)^2 and (x1 - x2)^3 factors"))
}

fn qmi(args: &[&str]) -> Result<(i32, String), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qmi"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned()))
}

fn cli() -> Outcome {
    let args = ["verify", "--config", "examples/heisenberg1.cfg", "--format", "machine"];
    let (code, first) = qmi(&args)?;
    ensure(code == 0, || format!("exit {code}"))?;
    let (_, second) = qmi(&args)?;
    ensure(first == second, || "machine reports differ between runs".into())?;
    let report = ok(VerificationReport::parse_machine(&first))?;

    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"));
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/heisenberg1.cfg")).map_err(|e| e.to_string())?;
    let corrupted = text.replace("\"gram\": [[[1, 1]]]", "\"gram\": [[[0, 1]]]");
    ensure(corrupted != text, || "gram line not found".into())?;
    let path = dir.join("heisenberg1_corrupted.cfg");
    std::fs::write(&path, corrupted).map_err(|e| e.to_string())?;
    let (code, out) = qmi(&["verify", "--config", path.to_str().unwrap(), "--format", "machine"])?;
    ensure(code == 1, || format!("corrupted gram exits {code}"))?;
    let bad = ok(VerificationReport::parse_machine(&out))?;
    let named = bad.failures().find(|e| e.counterexample.is_some()).ok_or("no failure carries a counterexample")?;
    Ok(format!("{} checks, deterministic; corrupted gram fails {} at {}", report.entries.len(), named.id, named.counterexample.as_ref().unwrap().vector))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("delta calculus on [-10,10]^2 under 10 s", delta_calculus),
        ("n-th products match decomposed coefficients", product_coefficients),
        ("Heisenberg module at infinity end to end", heisenberg_end_to_end),
        ("Z/2-twisted quasi module", twisted_module),
        ("sl2 vacuum algebra and module at infinity", sl2),
        ("mode algebra round trip", round_trip),
        ("witness independence", witness_independence),
        ("command line verify", cli),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let t = start.elapsed();
        match res {
            Ok(detail) => println!("PASS [{}] {name}: {detail} ({t:.1?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name}: {why} ({t:.1?})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

