use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lipdyn::lipschitz::{classify_fixed_point, estimate_lipschitz, NeighborhoodSpec};
use lipdyn::lyapunov::{classify_chaos, lyapunov_exponent, ChaosConfig, SkipPolicy};
use lipdyn::maps::{builtin, ParamFamily};
use lipdyn::orbit::{find_fixed_points, iterate, DEFAULT_ESCAPE_RADIUS, DEFAULT_PERIOD_TOL};
use lipdyn::parse_map;

const PIECEWISE: &str = include_str!("../../../maps/piecewise.map");

fn orbits(c: &mut Criterion) {
    let f = builtin(&ParamFamily::logistic(3.9)).unwrap();
    let mut g = c.benchmark_group("iterate");
    for n in [1_000usize, 100_000] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| iterate(&f, black_box(0.3), n, 0, DEFAULT_ESCAPE_RADIUS).unwrap())
        });
    }
    g.finish();
    c.bench_function("find_fixed_points/logistic", |b| {
        b.iter(|| find_fixed_points(&f, black_box((-1.0, 2.0)), 4096, 1e-10))
    });
}

fn lipschitz(c: &mut Criterion) {
    let logistic = builtin(&ParamFamily::logistic(2.0)).unwrap();
    let dsl = lipdyn::from_dsl(&parse_map(PIECEWISE).unwrap());
    for (name, map, p) in [("logistic", &logistic, 0.5), ("dsl_piecewise", &dsl, 1.0)] {
        let nb = NeighborhoodSpec::new(p, 1e-2);
        c.bench_function(&format!("estimate_lipschitz/{name}"), |b| {
            b.iter(|| estimate_lipschitz(map, black_box(&nb)).unwrap())
        });
        c.bench_function(&format!("classify_fixed_point/{name}"), |b| {
            b.iter(|| classify_fixed_point(map, black_box(p), &nb, 0.05).unwrap())
        });
    }
}

fn lyapunov(c: &mut Criterion) {
    let f = builtin(&ParamFamily::logistic(4.0)).unwrap();
    let tent = builtin(&ParamFamily::tent(-2.0, 1.0)).unwrap();
    let policy = SkipPolicy::default();
    c.bench_function("lyapunov_exponent/logistic_1e5", |b| {
        b.iter(|| lyapunov_exponent(&f, black_box(0.3), 100_000, 1000, &policy).unwrap())
    });
    c.bench_function("lyapunov_exponent/tent_1e4", |b| {
        b.iter(|| lyapunov_exponent(&tent, black_box(0.2), 10_000, 0, &policy).unwrap())
    });
    let cfg = ChaosConfig {
        n: 100_000,
        burn_in: 1000,
        max_period: 64,
        period_tol: DEFAULT_PERIOD_TOL,
        policy,
    };
    c.bench_function("classify_chaos/logistic_1e5", |b| {
        b.iter(|| classify_chaos(&f, black_box(0.3), &cfg).unwrap())
    });
}

fn parsing(c: &mut Criterion) {
    c.bench_function("parse_map/piecewise", |b| {
        b.iter(|| parse_map(black_box(PIECEWISE)).unwrap())
    });
}

criterion_group!(benches, orbits, lipschitz, lyapunov, parsing);
criterion_main!(benches);
