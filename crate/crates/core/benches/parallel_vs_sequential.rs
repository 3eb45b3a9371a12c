//! Sequential vs parallel execution of the data-parallel kernels.
//! Without the `parallel` feature both variants run sequentially.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mfbm::estimate::{empirical_cross_spectrum_with, ScalePair};
use mfbm::synth::replicate_ensemble_with;
use mfbm::wavelets::{cwt_with, gaussian_derivative, interior_shifts};
use mfbm::wavstats::{covariance_over_lags, WaveletCovQuery};
use mfbm::{Execution, MfbmParams};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn params() -> MfbmParams {
    MfbmParams::bivariate(0.4, 0.7, 0.5, 0.1).unwrap()
}

fn simulation(c: &mut Criterion) {
    let p = params();
    let mut group = c.benchmark_group("replicate_ensemble");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, "64x4096"), |b| b.iter(|| black_box(replicate_ensemble_with(&p, 4096, 1.0, 7, 64, exec).unwrap())));
    }
    group.finish();
}

fn transform(c: &mut Criterion) {
    let p = params();
    let path = replicate_ensemble_with(&p, 16384, 1.0, 7, 1, Execution::Sequential).unwrap().remove(0);
    let w = gaussian_derivative(2).unwrap();
    let scales: Vec<f64> = (0..8).map(|i| 4.0 * 2f64.powf(i as f64 / 2.0)).collect();
    let shifts = interior_shifts(16384, 1.0, &scales, &w, 1);
    let mut group = c.benchmark_group("cwt");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, "2x8 scales x 16384"), |b| b.iter(|| black_box(cwt_with(&path, &w, &scales, &shifts, exec).unwrap())));
    }
    group.finish();
}

fn theory(c: &mut Criterion) {
    let p = params();
    let w = gaussian_derivative(2).unwrap();
    let q = WaveletCovQuery::new(0, 1, 1.0, 2.0, 0.0).unwrap();
    let lags: Vec<f64> = (0..32).map(|i| i as f64 - 8.0).collect();
    let mut group = c.benchmark_group("covariance_over_lags");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, "32 lags"), |b| b.iter(|| black_box(covariance_over_lags(&q, &lags, &p, &w, exec).unwrap())));
    }
    group.finish();
}

fn spectrum(c: &mut Criterion) {
    let p = params();
    let w = gaussian_derivative(2).unwrap();
    let scales = [4.0];
    let paths = replicate_ensemble_with(&p, 2048, 1.0, 9, 32, Execution::Parallel).unwrap();
    let shifts = interior_shifts(2048, 1.0, &scales, &w, 1);
    let fields: Vec<_> = paths.iter().map(|x| cwt_with(x, &w, &scales, &shifts, Execution::Sequential).unwrap()).collect();
    let omegas: Vec<f64> = (0..64).map(|i| 0.02 + 0.03 * i as f64).collect();
    let pair = ScalePair { j: 0, k: 1, a1: 4.0, a2: 4.0 };
    let mut group = c.benchmark_group("cross_spectrum");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, "32 replicates x 64 frequencies"), |b| {
            b.iter(|| black_box(empirical_cross_spectrum_with(&fields, &pair, &omegas, exec).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, simulation, transform, theory, spectrum);
criterion_main!(benches);
