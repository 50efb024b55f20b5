//! Sequential vs parallel execution for the data-parallel kernels.
//!
//! Without the `parallel` feature both variants run on one thread.

use std::hint::black_box;

use bgk_wigner::eval::{eval_field, GridSpec};
use bgk_wigner::exec::Execution;
use bgk_wigner::potentials;
use bgk_wigner::seed::SeedDistribution;
use bgk_wigner::series::{build_series, BuildOptions};
use bgk_wigner::verify::{residual_numeric, NumericOptions};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_rational::BigRational;

const POLICIES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn field(c: &mut Criterion) {
    let series = build_series(&potentials::goldstone(), 5, &BuildOptions::default()).unwrap();
    let seed = SeedDistribution::fermi_dirac(1.0).unwrap();
    let mut group = c.benchmark_group("eval_field");
    group.sample_size(20);
    for n in [101, 401] {
        let grid = GridSpec::square(-4.0, 4.0, n);
        for (name, exec) in POLICIES {
            group.bench_with_input(BenchmarkId::new(name, n), &grid, |b, grid| {
                b.iter(|| eval_field(&series, &seed, black_box(0.6), grid, true, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn build(c: &mut Criterion) {
    let v = potentials::goldstone();
    let mut group = c.benchmark_group("build_series");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        let opts = BuildOptions {
            execution: exec,
            ..BuildOptions::default()
        };
        group.bench_function(BenchmarkId::new(name, 6), |b| {
            b.iter(|| build_series(black_box(&v), 6, &opts).unwrap())
        });
    }
    group.finish();
}

fn residual(c: &mut Criterion) {
    let v = potentials::modulated_harmonic(&BigRational::new(1.into(), 2.into()));
    let series = build_series(&v, 2, &BuildOptions::default()).unwrap();
    let seed = SeedDistribution::fermi_dirac(1.0).unwrap();
    let mut group = c.benchmark_group("residual_numeric");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        let opts = NumericOptions {
            execution: exec,
            ..NumericOptions::default()
        };
        group.bench_function(name, |b| b.iter(|| residual_numeric(&series, &seed, &opts).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, field, build, residual);
criterion_main!(benches);
