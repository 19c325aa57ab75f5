use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use betajacobi::ensembles::sample_tridiagonal;
use betajacobi::exact_moments::{expand_entry11, mean_moment, min_structural_size, parse_rational};
use betajacobi::limit_measure::{moments_u, LimitCoefficients};
use betajacobi::process::{simulate, Scheme};
use betajacobi::{ExactParams, LimitParams, ModelParams, ProcessConfig, RandomStream};

fn eigen(c: &mut Criterion) {
    let mut g = c.benchmark_group("eigen");
    for n in [50usize, 200] {
        let params = ModelParams::new(0.0, 0.0, 1.0, n).unwrap();
        let j = sample_tridiagonal(&params, &mut RandomStream::new(1)).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &j, |b, j| {
            b.iter(|| j.eig_with_first_components(n).unwrap())
        });
    }
    g.finish();
}

fn sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("sample_tridiagonal");
    for n in [50usize, 200] {
        let params = ModelParams::new(0.5, 1.0, 2.0, n).unwrap();
        let mut rng = RandomStream::new(2);
        g.bench_function(BenchmarkId::from_parameter(n), |b| b.iter(|| sample_tridiagonal(&params, &mut rng).unwrap()));
    }
    g.finish();
}

fn limit_moments(c: &mut Criterion) {
    let params = LimitParams::new(0.0, 0.0, 1.0).unwrap();
    c.bench_function("moments_u/20", |b| b.iter(|| moments_u(black_box(params), 20)));
    let j = LimitCoefficients::new(params).j_c();
    c.bench_function("power_entry11/20", |b| b.iter(|| j.power_entry11(black_box(20))));
}

fn process_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("process_100_steps");
    g.sample_size(20);
    for scheme in [Scheme::Euler, Scheme::PairFlow] {
        let mut config = ProcessConfig::new(ModelParams::new(0.0, 0.0, 1.0, 100).unwrap(), 0.1, 1e-3).unwrap();
        config.scheme = scheme;
        config.record_stride = 100;
        g.bench_function(format!("{scheme:?}"), |b| b.iter(|| simulate(&config, &RandomStream::new(3)).unwrap()));
    }
    g.finish();
}

fn exact_expansion(c: &mut Criterion) {
    let mut g = c.benchmark_group("exact");
    for k in [4usize, 6] {
        g.bench_with_input(BenchmarkId::new("expand_entry11", k), &k, |b, &k| {
            b.iter(|| expand_entry11(min_structural_size(k), k).unwrap())
        });
    }
    let r = |s: &str| parse_rational(s).unwrap();
    let params = ExactParams::new(r("7"), r("2/7"), r("1/3"), r("1/2"));
    g.bench_function("mean_moment/6", |b| b.iter(|| mean_moment(6, &params).unwrap()));
    g.finish();
}

criterion_group!(benches, eigen, sampling, limit_moments, process_step, exact_expansion);
criterion_main!(benches);
