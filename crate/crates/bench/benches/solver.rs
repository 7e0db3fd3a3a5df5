use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use bbspike_bench::{crossing, weight_problem};
use bbspike_core::solver::{lmo_insert, weight_qp};
use bbspike_core::{solve, AtomicMeasurePair, Curve, CurveAtom};

fn bench_apply(c: &mut Criterion) {
    let f = crossing();
    let mut group = c.benchmark_group("apply");
    for copies in [1usize, 4, 16] {
        let mut measure = AtomicMeasurePair::empty(0.1, 0.1, f.config.curve_nodes).unwrap();
        for k in 0..copies {
            // shifted copies keep the atoms distinct
            let shifted = f.truth.iter().map(|(w, a)| {
                let nodes = a.curve().nodes().iter().map(|x| x * (1.0 - 1e-3 * k as f64)).collect();
                (w, Curve::new(2, nodes).unwrap())
            });
            for (w, curve) in shifted {
                measure.push(CurveAtom::new(curve, 0.1, 0.1).unwrap(), w).unwrap();
            }
        }
        group.bench_with_input(BenchmarkId::from_parameter(measure.len()), &measure, |b, m| b.iter(|| f.obs.apply(black_box(m))));
    }
    group.finish();
}

fn bench_lmo(c: &mut Criterion) {
    let f = crossing();
    let r: Vec<f64> = f.obs.data().iter().map(|y| -y).collect();
    let mut group = c.benchmark_group("lmo_insert");
    group.sample_size(10);
    group.bench_function("crossing_first_step", |b| b.iter(|| lmo_insert(&f.obs, black_box(&r), &f.domain, &f.config, 0).unwrap()));
    group.finish();
}

fn bench_weight_qp(c: &mut Criterion) {
    let mut group = c.benchmark_group("weight_qp");
    for atoms in [2usize, 8, 32] {
        let (columns, y) = weight_problem(atoms, 125, atoms as u64);
        group.bench_with_input(BenchmarkId::from_parameter(atoms), &(columns, y), |b, (cols, y)| b.iter(|| weight_qp(black_box(cols), y, 1e-13, None)));
    }
    group.finish();
}

fn bench_solve(c: &mut Criterion) {
    let f = crossing();
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    group.bench_function("crossing", |b| b.iter(|| solve(&f.obs, &f.domain, black_box(&f.config)).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_apply, bench_lmo, bench_weight_qp, bench_solve);
criterion_main!(benches);
