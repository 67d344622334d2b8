//! Sequential versus Rayon execution of the two largest sweeps.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qmi_core::exec::Exec;
use qmi_core::liealg::{GammaData, LieData};
use qmi_core::qmiverify::{build_induced_infinity, verify_axioms, AxiomOptions};
use qmi_core::scalar::q;
use qmi_core::suites::delta_suite;
use qmi_core::vacuumva::build_vacuum;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn delta_family(c: &mut Criterion) {
    let mut g = c.benchmark_group("delta-suite");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| delta_suite(2, ((-6, 6), (-6, 6)), exec))
        });
    }
    g.finish();
}

fn heisenberg_axioms(c: &mut Criterion) {
    let lie = LieData::abelian(1);
    let mut g = c.benchmark_group("heisenberg-axioms");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                // Fresh module each time: fields and witnesses are memoized.
                let m = build_induced_infinity(lie.clone(), GammaData::trivial(1), q(1), 5).unwrap();
                let va = build_vacuum(lie.opposite(), q(-1), 5);
                let mut opts = AxiomOptions::new(&va);
                opts.exec = exec;
                verify_axioms(&m, &va, &opts)
            })
        });
    }
    g.finish();
}

criterion_group!(benches, delta_family, heisenberg_axioms);
criterion_main!(benches);
