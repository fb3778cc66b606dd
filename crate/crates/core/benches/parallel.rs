use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wstx::dataset::{synthesize, SynthesisParams};
use wstx::metrics::{bootstrap_with, BootstrapOptions, DcfParams, Label, ScoreSet};
use wstx::scattering1d::{Scattering1D, ScatteringConfig1D};
use wstx::scattering2d::{Scattering2D, ScatteringConfig2D};
use wstx::Exec;

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn clips(n: u64) -> Vec<Vec<f64>> {
    let p = SynthesisParams::default();
    (0..n)
        .map(|i| synthesize(&p, 1, i, if i % 2 == 0 { Label::Real } else { Label::Fake }))
        .collect()
}

fn scattering_1d(c: &mut Criterion) {
    let audio = clips(8);
    let t = Scattering1D::new(ScatteringConfig1D::new(2, 10, 2).unwrap(), 64_000).unwrap();
    let mut g = c.benchmark_group("scatter_1d_batch");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(t.scatter_batch(&audio, exec).unwrap()))
        });
    }
    g.finish();
}

fn scattering_2d(c: &mut Criterion) {
    let maps: Vec<Vec<f64>> = (0..16)
        .map(|k| (0..399 * 80).map(|i| ((i * (k + 3)) as f64 * 1e-3).sin()).collect())
        .collect();
    let t = Scattering2D::new(ScatteringConfig2D::new(2, 10, 2).unwrap(), 399, 80).unwrap();
    let mut g = c.benchmark_group("scatter_2d_batch");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(t.scatter_batch(&maps, exec).unwrap()))
        });
    }
    g.finish();
}

fn bootstrap_resamples(c: &mut Criterion) {
    let n = 2000;
    let scores: Vec<f64> = (0..n).map(|i| ((i * 7919) % 1000) as f64 / 1000.0).collect();
    let labels: Vec<Label> = (0..n).map(|i| if i % 3 == 0 { Label::Fake } else { Label::Real }).collect();
    let set = ScoreSet::new(scores, labels).unwrap();
    let mut g = c.benchmark_group("bootstrap_200");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        let opts = BootstrapOptions { n: 200, seed: 5, exec, ..BootstrapOptions::default() };
        g.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| black_box(bootstrap_with(&set, &DcfParams::default(), opts).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, scattering_1d, scattering_2d, bootstrap_resamples);
criterion_main!(benches);
