use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use wstx::dataset::{make_synthetic_corpus, resample, synthesize, Manifest, Split, SynthesisParams};
use wstx::metrics::Label;
use wstx::scattering1d::{scatter_1d_energy, Scattering1D, ScatteringConfig1D};
use wstx::Exec;

fn sine(freq: f64, rate: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (std::f64::consts::TAU * freq * i as f64 / rate).sin()).collect()
}

fn peak_bin(x: &[f64]) -> usize {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    (0..buf.len() / 2).max_by(|&a, &b| buf[a].norm().total_cmp(&buf[b].norm())).unwrap()
}

#[test]
fn downsampled_tone_keeps_its_frequency() {
    let y = resample(&sine(1000.0, 44_100.0, 44_100), 44_100, 16_000).unwrap();
    assert_eq!(y.len(), 16_000);
    // One second at 16 kHz: bins are 1 Hz apart.
    let bin = peak_bin(&y) as i64;
    assert!((bin - 1000).abs() <= 1, "peak at {bin} Hz");
}

#[test]
fn resampler_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x: Vec<f64> = (0..22_050).map(|_| rng.random_range(-1.0..1.0)).collect();
    for a in [-3.5, 0.25, 17.0] {
        let scaled: Vec<f64> = x.iter().map(|v| a * v).collect();
        let lhs = resample(&scaled, 44_100, 16_000).unwrap();
        let rhs: Vec<f64> = resample(&x, 44_100, 16_000).unwrap().iter().map(|v| a * v).collect();
        let err = lhs.iter().zip(&rhs).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        let scale = rhs.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(err <= 1e-12 * scale, "a={a}: {err}");
    }
    assert_eq!(resample(&x, 16_000, 16_000).unwrap(), x);
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn synthetic_corpus_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    make_synthetic_corpus(a.path(), 10, 7, Exec::Parallel).unwrap();
    make_synthetic_corpus(b.path(), 10, 7, Exec::Sequential).unwrap();
    let (ta, tb) = (read_tree(a.path()), read_tree(b.path()));
    assert_eq!(ta.len(), 2 + 30);
    assert!(ta == tb);
}

#[test]
fn synthetic_corpus_counts() {
    let dir = tempfile::tempdir().unwrap();
    let m = make_synthetic_corpus(dir.path(), 100, 3, Exec::Parallel).unwrap();
    assert_eq!(m.entries.len(), 200);
    assert_eq!((m.count(Split::Train), m.count(Split::Dev)), (180, 20));
    for label in [Label::Real, Label::Fake] {
        let dev = m.split(Split::Dev).filter(|e| e.label == label).count();
        assert_eq!(dev, 10);
    }
    let test = Manifest::read(&dir.path().join("test_manifest.csv")).unwrap();
    assert_eq!(test.count(Split::Test), 100);
    let on_disk = Manifest::read(&dir.path().join("manifest.csv")).unwrap();
    assert_eq!(on_disk.entries, m.entries);
}

fn cohen_d(a: &[f64], b: &[f64]) -> f64 {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64], m: f64| v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    let (ma, mb) = (mean(a), mean(b));
    (mb - ma) / ((var(a, ma) + var(b, mb)) / 2.0).sqrt()
}

#[test]
fn artifacts_raise_second_order_energy() {
    let params = SynthesisParams::default();
    let t = Scattering1D::new(ScatteringConfig1D::new(8, 10, 2).unwrap(), 64_000).unwrap();
    let n = 40u64;
    let jobs: Vec<(u64, Label)> = (0..n).flat_map(|i| [(2 * i, Label::Real), (2 * i + 1, Label::Fake)]).collect();
    let energy: Vec<f64> = Exec::Parallel.map(&jobs, |&(voice, label)| {
        scatter_1d_energy(&t.scatter(&synthesize(&params, 7, voice, label)).unwrap())[2]
    });
    let pick = |fake: bool| -> Vec<f64> {
        jobs.iter().zip(&energy).filter(|(j, _)| j.1.is_fake() == fake).map(|(_, &e)| e).collect()
    };
    let d = cohen_d(&pick(false), &pick(true));
    assert!(d > 1.0, "Cohen's d = {d}");
}
