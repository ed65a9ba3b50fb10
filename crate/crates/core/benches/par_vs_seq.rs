//! Compares the data-parallel subset scan against the sequential fallback
//! on exhaustive enumeration and on a full cutting-plane solve.
//!
//! With the default `parallel` feature, `max_over_subsets` fans out over
//! rayon; built with `--no-default-features` it is an alias for the
//! sequential scan, so running the bench under both feature sets gives the
//! end-to-end comparison.

use cnl_mcp::drivers::{cp_solve, objective_of_open, SolveParams};
use cnl_mcp::gen::{generate, GenConfig};
use cnl_mcp::par::{max_over_subsets, max_over_subsets_seq};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn bench_instance(m: usize, t: usize) -> cnl_mcp::instance::CnlInstance {
    generate(&GenConfig {
        m,
        num_types: t,
        num_nests: 4,
        r: 3,
        seed: 7,
        ..Default::default()
    })
    .expect("benchmark instance generates")
}

fn exhaustive_scan(c: &mut Criterion) {
    let mut group = c.benchmark_group("exhaustive_scan");
    for m in [14usize, 18] {
        let inst = bench_instance(m, 5);
        // Both scans must land on the same subset before we time anything.
        let (seq, _) =
            max_over_subsets_seq(inst.m(), inst.r(), |open| objective_of_open(&inst, open));
        let (par, _) = max_over_subsets(inst.m(), inst.r(), |open| objective_of_open(&inst, open));
        assert_eq!(seq.open, par.open);
        assert_eq!(seq.value.to_bits(), par.value.to_bits());

        group.bench_with_input(BenchmarkId::new("sequential", m), &inst, |b, inst| {
            b.iter(|| {
                max_over_subsets_seq(inst.m(), inst.r(), |open| {
                    objective_of_open(black_box(inst), open)
                })
            })
        });
        group.bench_with_input(BenchmarkId::new("parallel", m), &inst, |b, inst| {
            b.iter(|| {
                max_over_subsets(inst.m(), inst.r(), |open| {
                    objective_of_open(black_box(inst), open)
                })
            })
        });
    }
    group.finish();
}

fn cutting_plane(c: &mut Criterion) {
    let mut group = c.benchmark_group("cp_solve");
    for (m, t) in [(12usize, 10usize), (16, 20)] {
        let inst = bench_instance(m, t);
        group.bench_with_input(BenchmarkId::from_parameter(format!("m{m}_t{t}")), &inst, |b, inst| {
            b.iter(|| cp_solve(black_box(inst), &SolveParams::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, exhaustive_scan, cutting_plane);
criterion_main!(benches);
