use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use solenoid_lab::certify::{pve_constant, PveConfig};
use solenoid_lab::measure::{birkhoff_log_det, signature, uniform_samples, ObservableDictionary};
use solenoid_lab::{par, SolenoidModel};

fn signatures(c: &mut Criterion) {
    let model = SolenoidModel::default_anisotropic();
    let dict = ObservableDictionary::default();
    let points = uniform_samples(64, 1);
    let job = |i: usize| signature(&model, &points[i], 10_000, &dict).unwrap().values[1];

    let mut g = c.benchmark_group("signatures_64x1e4");
    g.sample_size(10);
    g.bench_function("map_indexed", |b| b.iter(|| black_box(par::map_indexed(points.len(), job))));
    g.bench_function("map_indexed_sequential", |b| {
        b.iter(|| black_box(par::map_indexed_sequential(points.len(), job)))
    });
    g.finish();
}

fn log_det_averages(c: &mut Criterion) {
    let model = SolenoidModel::default_anisotropic();
    let points = uniform_samples(256, 2);
    let job = |i: usize| birkhoff_log_det(&model, &points[i], 2_000);

    let mut g = c.benchmark_group("birkhoff_log_det_256x2e3");
    g.sample_size(10);
    g.bench_function("map_indexed", |b| b.iter(|| black_box(par::map_indexed(points.len(), job))));
    g.bench_function("map_indexed_sequential", |b| {
        b.iter(|| black_box(par::map_indexed_sequential(points.len(), job)))
    });
    g.finish();
}

fn pve_pool_size(c: &mut Criterion) {
    let model = SolenoidModel::default_affine();
    let cfg = PveConfig { n_samples: 200, ..Default::default() };

    let mut g = c.benchmark_group("pve_200_samples");
    g.sample_size(10);
    for threads in [Some(1), None] {
        let label = threads.map_or("default".to_string(), |t| t.to_string());
        g.bench_with_input(BenchmarkId::new("threads", label), &threads, |b, &t| {
            b.iter(|| par::with_threads(t, || black_box(pve_constant(&model, &cfg, 1).unwrap().c_hat)))
        });
    }
    g.finish();
}

criterion_group!(benches, signatures, log_det_averages, pve_pool_size);
criterion_main!(benches);
