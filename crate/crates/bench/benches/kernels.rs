use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mimfrac::kernel::{family_weights, CoeffFamily, FamilyOptions, WeightBuilder};
use mimfrac::linalg::{gmres_solve, BandedLu, GmresConfig, Preconditioner};
use mimfrac_bench::{a0, rhs};
use std::hint::black_box;

fn weights(c: &mut Criterion) {
    let mut g = c.benchmark_group("weights");
    for lead in [64usize, 1024, 4096] {
        let mut builder = WeightBuilder::new(0.25, lead, FamilyOptions::default());
        let mut out = Vec::new();
        g.bench_with_input(BenchmarkId::new("builder", lead), &lead, |b, &n| {
            b.iter(|| builder.build(CoeffFamily::Int, n, black_box(0.6), &mut out))
        });
        g.bench_with_input(BenchmarkId::new("scalar", lead), &lead, |b, &n| {
            b.iter(|| family_weights(CoeffFamily::Int, n, 0.25, black_box(0.6), FamilyOptions::default()))
        });
    }
    g.finish();
}

fn solvers(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve");
    for m in [16usize, 64, 256] {
        let a = a0(m);
        let b = rhs(a.size());
        g.bench_with_input(BenchmarkId::new("lu-factor", m), &a, |bn, a| bn.iter(|| BandedLu::factor(a)));
        let lu = BandedLu::factor(&a).unwrap();
        g.bench_with_input(BenchmarkId::new("lu-solve", m), &b, |bn, b| bn.iter(|| lu.solve(b)));
        for pre in [Preconditioner::None, Preconditioner::Jacobi, Preconditioner::Ilu0] {
            let cfg = GmresConfig { preconditioner: pre, ..Default::default() };
            g.bench_with_input(BenchmarkId::new(format!("gmres-{pre:?}"), m), &b, |bn, b| {
                bn.iter(|| gmres_solve(&a, b, &cfg))
            });
        }
    }
    g.finish();
}

criterion_group!(benches, weights, solvers);
criterion_main!(benches);
