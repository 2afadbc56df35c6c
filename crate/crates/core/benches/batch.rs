use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ctd_core::batch::{run_batch, run_batch_sequential, Job};
use ctd_core::scenario::{encode, presets, Encoding};
use ctd_core::tuning::{calibrate, verify_bands, BandSpec};
use ctd_core::{build_ctd, CtdConfig};

fn jobs(n: usize) -> Vec<Job> {
    let topology = Arc::new(build_ctd(&CtdConfig::default()).unwrap());
    (0..n as u64)
        .map(|seed| {
            let scenario = presets::two_objects().with_encoding(Encoding::Poisson, seed);
            Job {
                topology: topology.clone(),
                inputs: encode(&scenario).unwrap(),
                horizon: scenario.horizon(),
                seed,
            }
        })
        .collect()
}

fn batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("ctd_batch");
    group.sample_size(10);
    for n in [8usize, 64] {
        let jobs = jobs(n);
        group.bench_with_input(BenchmarkId::new("sequential", n), &jobs, |b, jobs| {
            b.iter(|| run_batch_sequential(jobs))
        });
        group.bench_with_input(BenchmarkId::new("parallel", n), &jobs, |b, jobs| {
            b.iter(|| run_batch(jobs))
        });
    }
    group.finish();
}

fn band_sweep(c: &mut Criterion) {
    let bands = BandSpec::new(50.0, 120.0, 0.1);
    let params = calibrate(&bands, 0.9, 1e-3).unwrap();
    let mut group = c.benchmark_group("verify_bands");
    group.sample_size(10);
    group.bench_function("sweep", |b| b.iter(|| verify_bands(&params, &bands, 0.9, 1e-3)));
    group.finish();
}

criterion_group!(benches, batch, band_sweep);
criterion_main!(benches);
