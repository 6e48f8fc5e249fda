use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use lane_emden::exponents::make_exponents;
use lane_emden::greens::{regular_part_h, DomainSpec, GreenOptions, SolverOptions};
use lane_emden::reduced::{TableOptions, TauModel};
use lane_emden::Exec;

fn opts(nx: usize, exec: Exec) -> GreenOptions {
    GreenOptions { nx, solver: SolverOptions { exec, ..Default::default() } }
}

fn regular_part(c: &mut Criterion) {
    let dom = DomainSpec::unit_ball(6);
    let mut g = c.benchmark_group("regular_part_h");
    g.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        g.bench_with_input(BenchmarkId::new(format!("{exec:?}"), 256), &exec, |b, &exec| {
            b.iter(|| regular_part_h(&dom, &[0.2, 0.0, 0.0, 0.0, 0.0, 0.0], &opts(256, exec)).unwrap())
        });
    }
    g.finish();
}

fn tau_table(c: &mut Criterion) {
    let dom = DomainSpec::unit_ball(6);
    let e = make_exponents(6, 1.2).unwrap();
    let table = TableOptions { nodes: 12, reach: 0.6 };
    let mut g = c.benchmark_group("tau_table");
    g.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        g.bench_with_input(BenchmarkId::new(format!("{exec:?}"), 128), &exec, |b, &exec| {
            b.iter(|| TauModel::build(&dom, &e, &opts(128, exec), &table).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, regular_part, tau_table);
criterion_main!(benches);
