// Series build plus a batch of evaluations, run under both execution modes.
// Build with `--no-default-features` to compile rayon out entirely; the
// Parallel arm then falls back to the calling thread.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use dirinv::arith::{Evaluator, FunctionId};
use dirinv::inversion::Basis;
use dirinv::primecount::prime_indicator_series;
use dirinv::{make_context, Execution, Variant};

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn moebius_batch(c: &mut Criterion) {
    let mut g = c.benchmark_group("moebius_series_n30");
    g.sample_size(10);
    let xs: Vec<f64> = (1..=60).map(|i| i as f64 * 0.5).collect();
    for (name, exec) in modes() {
        let ctx = make_context(30.0, 1e-10, Variant::TwoPi).unwrap().with_execution(exec);
        // Warm the shared zeta table so only the series work is timed.
        ctx.zeta_table().unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(name), &ctx, |b, ctx| {
            b.iter(|| {
                let ev = Evaluator::new(ctx.clone());
                let s = ev.series(FunctionId::Moebius).unwrap();
                s.eval_many(&xs, Basis::Monomial, ctx)
            })
        });
    }
    g.finish();
}

fn pi_batch(c: &mut Criterion) {
    let mut g = c.benchmark_group("pi_series_x15");
    g.sample_size(10);
    let xs: Vec<f64> = (1..=15).map(f64::from).collect();
    for (name, exec) in modes() {
        let ctx = make_context(15.0, 1e-8, Variant::TwoPi).unwrap().with_execution(exec);
        ctx.zeta_table().unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(name), &ctx, |b, ctx| {
            b.iter(|| prime_indicator_series(ctx).unwrap().eval_many(&xs, Basis::Faulhaber, ctx))
        });
    }
    g.finish();
}

criterion_group!(benches, moebius_batch, pi_batch);
criterion_main!(benches);
