use aquafel_bench::{lake, samples};
use aquafel_core::{GpConfig, GpModel};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn fit(c: &mut Criterion) {
    let (map, truth) = lake(0);
    let mut group = c.benchmark_group("gp_fit");
    for n in [50, 150, 300] {
        let data = samples(&map, &truth, n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &data, |b, data| {
            b.iter(|| GpModel::fit(black_box(data), &GpConfig::default()).unwrap())
        });
    }
    group.finish();
}

fn predict_grid(c: &mut Criterion) {
    let (map, truth) = lake(0);
    let mut group = c.benchmark_group("gp_predict_grid");
    for n in [50, 300] {
        let model = GpModel::fit(&samples(&map, &truth, n, 1), &GpConfig::default()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &model, |b, m| {
            b.iter(|| m.predict_grid(black_box(&map)))
        });
    }
    group.finish();
}

criterion_group!(benches, fit, predict_grid);
criterion_main!(benches);
