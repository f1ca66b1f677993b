use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use maser_bench::{laser_point, maser_point, phases};
use maser_core::oracle::{transit_map, OracleRun, PumpModel};
use maser_core::steady_state::steady_state_stats;
use maser_core::sweep::{bell_for_stats, evaluate_point};
use maser_core::{pump_to_steady_state, CavityParams, E0Mode, FockDim};
use std::hint::black_box;

fn continued_fraction(c: &mut Criterion) {
    let mut g = c.benchmark_group("steady_state_stats");
    for n in [20.0, 100.0] {
        let p = maser_point(n);
        g.bench_with_input(BenchmarkId::new("maser", n), &p, |b, p| {
            b.iter(|| steady_state_stats(black_box(p)).unwrap())
        });
    }
    let p = laser_point(1e-3);
    g.bench_function("laser", |b| b.iter(|| steady_state_stats(black_box(&p)).unwrap()));
    g.finish();
}

fn bell(c: &mut Criterion) {
    let mut g = c.benchmark_group("bell_sum");
    for n in [20.0, 100.0] {
        let p = maser_point(n);
        let stats = steady_state_stats(&p).unwrap();
        g.bench_with_input(BenchmarkId::new("maser", n), &p, |b, p| {
            b.iter(|| bell_for_stats(p, black_box(&stats), &phases(), E0Mode::FirstPhase).unwrap())
        });
    }
    g.finish();
}

fn sweep_point(c: &mut Criterion) {
    let p = maser_point(50.0);
    c.bench_function("sweep_point/maser_50", |b| {
        b.iter(|| evaluate_point(black_box(&p), &phases(), E0Mode::FirstPhase).unwrap())
    });
}

fn oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("oracle");
    g.sample_size(10);
    let p = CavityParams::new(5.0, 1e-3, 0.0, 0.0, 0.0)
        .unwrap()
        .with_pump_parameter(2.0)
        .unwrap();
    let dim = FockDim::new(20).unwrap();
    g.bench_function("transit_map/n_max_20", |b| {
        b.iter(|| transit_map(black_box(&p), p.tau, dim).unwrap())
    });
    let run = OracleRun {
        trajectories: 200,
        ..OracleRun::default()
    };
    g.bench_function("trajectories_200", |b| {
        b.iter(|| pump_to_steady_state(black_box(&p), &PumpModel::from_params(&p), &run).unwrap())
    });
    g.finish();
}

criterion_group!(benches, continued_fraction, bell, sweep_point, oracle);
criterion_main!(benches);
