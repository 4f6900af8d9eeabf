use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nsopt::{build_lp2, build_milp, relax, run_ccg, solve_lp, solve_milp, CcgParams, LpParams, MilpParams};
use nsopt_bench::{medium_instance, small_instance};

fn lp_relaxations(c: &mut Criterion) {
    let inst = medium_instance(1);
    let lp1 = relax(&build_milp(&inst).0);
    let lp2 = build_lp2(&inst).0;
    let params = LpParams::default();
    c.bench_function("lp-i medium", |b| b.iter(|| solve_lp(black_box(&lp1), &params).unwrap()));
    c.bench_function("lp-ii medium", |b| b.iter(|| solve_lp(black_box(&lp2), &params).unwrap()));
}

fn exact_milp(c: &mut Criterion) {
    let inst = small_instance(3);
    let model = build_milp(&inst).0;
    let params = MilpParams::default();
    c.bench_function("milp small", |b| b.iter(|| solve_milp(black_box(&model), &params).unwrap()));
}

fn column_generation(c: &mut Criterion) {
    let small = small_instance(3);
    let medium = medium_instance(1);
    let params = CcgParams::default();
    c.bench_function("ccg small", |b| b.iter(|| run_ccg(black_box(&small), &params).unwrap()));
    let mut group = c.benchmark_group("slow");
    group.sample_size(10);
    group.bench_function("ccg medium", |b| b.iter(|| run_ccg(black_box(&medium), &params).unwrap()));
    group.finish();
}

criterion_group!(benches, lp_relaxations, exact_milp, column_generation);
criterion_main!(benches);
