//! Audio ingestion, 4 s chunking, manifests with source-disjoint splits, and
//! a seeded synthetic corpus.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
pub use crate::metrics::Label;

pub const TARGET_RATE: u32 = 16_000;
pub const SEGMENT_SECONDS: usize = 4;

/// One labeled 4 s chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSegment {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub label: Label,
    pub source_id: String,
    pub chunk_index: usize,
}

/// Reads a WAV file as mono samples in `[-1, 1]`. Multichannel files are
/// averaged across channels.
pub fn read_wav(path: &Path) -> Result<(Vec<f64>, u32)> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, bits @ (16 | 24)) => {
            let scale = 1.0 / (1i64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()?
        }
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()?,
        (format, bits) => {
            return Err(Error::Unsupported(format!(
                "{}: {bits}-bit {format:?} WAV (accepted: 16/24-bit PCM, 32-bit float)",
                path.display()
            )))
        }
    };
    let mono = interleaved
        .chunks_exact(channels)
        .map(|frame| (frame.iter().sum::<f64>() / channels as f64).clamp(-1.0, 1.0))
        .collect();
    Ok((mono, spec.sample_rate))
}

/// Writes mono 32-bit float samples.
pub fn write_wav(path: &Path, samples: &[f64], sample_rate: u32) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut w = hound::WavWriter::create(path, spec)?;
    for &s in samples {
        w.write_sample(s as f32)?;
    }
    w.finalize()?;
    Ok(())
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Zero crossings of the interpolation kernel on each side, at the output rate.
const RESAMPLE_ZEROS: f64 = 24.0;
const KAISER_BETA: f64 = 9.0;
/// Passband edge as a fraction of the output Nyquist frequency.
const RESAMPLE_ROLLOFF: f64 = 0.94;

/// Band-limited downsampling with a Kaiser-windowed sinc applied in
/// polyphase form. Output length is `round(n·to/from)`.
pub fn resample(audio: &[f64], from: u32, to: u32) -> Result<Vec<f64>> {
    if from == 0 || to == 0 {
        return Err(Error::Domain("sample rates must be positive".into()));
    }
    if to > from {
        return Err(Error::Unsupported(format!("upsampling {from} Hz -> {to} Hz")));
    }
    if from == to {
        return Ok(audio.to_vec());
    }
    let g = gcd(from as u64, to as u64);
    let up = (to as u64 / g) as usize;
    let down = (from as u64 / g) as usize;
    // Cutoff in cycles per input sample is cutoff/2.
    let cutoff = RESAMPLE_ROLLOFF * up as f64 / down as f64;
    let half = (RESAMPLE_ZEROS / cutoff).ceil() as isize;
    let norm = bessel_i0(KAISER_BETA);
    let phases: Vec<Vec<f64>> = (0..up)
        .map(|p| {
            let frac = p as f64 / up as f64;
            let mut taps: Vec<f64> = (-half..=half)
                .map(|i| {
                    let tau = i as f64 + frac;
                    let r = tau / (half as f64 + 1.0);
                    if r.abs() >= 1.0 {
                        return 0.0;
                    }
                    let w = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / norm;
                    let s = if tau == 0.0 {
                        1.0
                    } else {
                        (PI * cutoff * tau).sin() / (PI * cutoff * tau)
                    };
                    cutoff * s * w
                })
                .collect();
            let dc: f64 = taps.iter().sum();
            taps.iter_mut().for_each(|t| *t /= dc);
            taps
        })
        .collect();
    let n = audio.len();
    let out_len = ((n as u128 * to as u128 + from as u128 / 2) / from as u128) as usize;
    let out = (0..out_len)
        .map(|k| {
            let pos = k * down;
            let base = (pos / up) as isize;
            let taps = &phases[pos % up];
            let mut acc = 0.0;
            for (t, i) in taps.iter().zip(-half..=half) {
                let src = base - i;
                if src >= 0 && (src as usize) < n {
                    acc += audio[src as usize] * t;
                }
            }
            acc
        })
        .collect();
    Ok(out)
}

/// Splits 16 kHz audio into `⌊T/4⌋` non-overlapping segments.
pub fn chunk(audio: &[f64], sample_rate: u32, label: Label, source_id: &str) -> Vec<AudioSegment> {
    let len = SEGMENT_SECONDS * sample_rate as usize;
    if audio.len() < len {
        log::warn!(
            "{source_id}: {:.2} s is shorter than one segment",
            audio.len() as f64 / sample_rate as f64
        );
    }
    audio
        .chunks_exact(len.max(1))
        .enumerate()
        .map(|(i, c)| AudioSegment {
            samples: c.to_vec(),
            sample_rate,
            label,
            source_id: source_id.to_string(),
            chunk_index: i,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the manifest's directory unless absolute.
    pub path: String,
    pub label: Label,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    /// Seed that produced the split; unknown for manifests read from disk.
    pub seed: Option<u64>,
    /// Directory that relative entry paths are resolved against.
    pub base: PathBuf,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["path", "label", "split"] {
            return Err(Error::Format(format!(
                "{}: expected header path,label,split",
                path.display()
            )));
        }
        let entries = rdr.deserialize().collect::<std::result::Result<Vec<ManifestEntry>, _>>()?;
        Ok(Manifest {
            entries,
            seed: None,
            base: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for e in &self.entries {
            w.serialize(e)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        let p = Path::new(&entry.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn count(&self, split: Split) -> usize {
        self.split(split).count()
    }
}

/// Assigns train/dev 9:1 at source level, per label, reproducibly.
/// `items` are `(source_id, label)`; returns one split per item.
pub fn split_train_dev(items: &[(String, Label)], seed: u64) -> Vec<Split> {
    let mut by_source: BTreeMap<(Label, &str), usize> = BTreeMap::new();
    for (s, l) in items {
        *by_source.entry((*l, s.as_str())).or_default() += 1;
    }
    let mut dev_sources = std::collections::BTreeSet::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for label in [Label::Real, Label::Fake] {
        let mut sources: Vec<(&str, usize)> = by_source
            .iter()
            .filter(|((l, _), _)| *l == label)
            .map(|((_, s), &n)| (*s, n))
            .collect();
        sources.shuffle(&mut rng);
        let total: usize = sources.iter().map(|s| s.1).sum();
        let target = (total as f64 / 10.0).round() as usize;
        let mut taken = 0;
        for (s, n) in sources {
            if taken >= target {
                break;
            }
            if taken + n <= target + 1 {
                dev_sources.insert((label, s));
                taken += n;
            }
        }
    }
    items
        .iter()
        .map(|(s, l)| {
            if dev_sources.contains(&(*l, s.as_str())) {
                Split::Dev
            } else {
                Split::Train
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareReport {
    pub manifest: Manifest,
    /// Files that could not be used, with the reason.
    pub skipped: Vec<(PathBuf, String)>,
    pub sources: usize,
}

fn wav_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            wav_files(&p, out)?;
        } else if p
            .extension()
            .is_some_and(|x| x.eq_ignore_ascii_case("wav"))
        {
            out.push(p);
        }
    }
    Ok(())
}

/// Label and test membership from the directory names under `root`: the
/// nearest `real`/`fake` component gives the label, a `test` component puts
/// the file in the test split.
fn classify(root: &Path, file: &Path) -> Option<(Label, bool)> {
    let rel = file.strip_prefix(root).ok()?;
    let parts: Vec<String> = rel
        .parent()?
        .components()
        .map(|c| c.as_os_str().to_string_lossy().to_lowercase())
        .collect();
    let label = parts.iter().rev().find_map(|p| p.parse::<Label>().ok())?;
    Some((label, parts.iter().any(|p| p == "test")))
}

/// Ingests every WAV under `in_dir` (labels from `real/` and `fake/`
/// directories), resamples to 16 kHz, chunks, and writes the segments plus
/// `manifest.csv` under `out_dir`.
pub fn prepare_directory(in_dir: &Path, out_dir: &Path, seed: u64, exec: Exec) -> Result<PrepareReport> {
    let mut files = Vec::new();
    wav_files(in_dir, &mut files)?;
    let seg_dir = out_dir.join("segments");
    std::fs::create_dir_all(&seg_dir).map_err(|e| Error::io(&seg_dir, e))?;

    struct Ingested {
        source_id: String,
        label: Label,
        test: bool,
        written: Vec<String>,
    }
    let results: Vec<std::result::Result<Ingested, (PathBuf, String)>> = exec.map(&files, |file| {
        let fail = |m: String| (file.clone(), m);
        let (label, test) = classify(in_dir, file).ok_or_else(|| fail("no real/fake directory in path".into()))?;
        let source_id = file
            .strip_prefix(in_dir)
            .unwrap_or(file)
            .with_extension("")
            .to_string_lossy()
            .replace(['/', '\\'], "__");
        let (audio, rate) = read_wav(file).map_err(|e| fail(e.to_string()))?;
        let audio = resample(&audio, rate, TARGET_RATE).map_err(|e| fail(e.to_string()))?;
        let segments = chunk(&audio, TARGET_RATE, label, &source_id);
        if segments.is_empty() {
            return Err(fail("shorter than 4 s".into()));
        }
        let mut written = Vec::new();
        for seg in &segments {
            let name = format!("segments/{}_{:03}.wav", seg.source_id, seg.chunk_index);
            write_wav(&out_dir.join(&name), &seg.samples, TARGET_RATE).map_err(|e| fail(e.to_string()))?;
            written.push(name);
        }
        Ok(Ingested { source_id, label, test, written })
    });

    let mut skipped = Vec::new();
    let mut rows: Vec<(String, Label, String, bool)> = Vec::new();
    let mut sources = 0;
    for r in results {
        match r {
            Ok(ing) => {
                sources += 1;
                for w in ing.written {
                    rows.push((w, ing.label, ing.source_id.clone(), ing.test));
                }
            }
            Err((p, why)) => {
                log::warn!("skipping {}: {why}", p.display());
                skipped.push((p, why));
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Config(format!(
            "no usable audio under {} ({} files skipped)",
            in_dir.display(),
            skipped.len()
        )));
    }
    let trainable: Vec<(String, Label)> = rows
        .iter()
        .filter(|r| !r.3)
        .map(|r| (r.2.clone(), r.1))
        .collect();
    let mut splits = split_train_dev(&trainable, seed).into_iter();
    let entries = rows
        .into_iter()
        .map(|(path, label, _, test)| ManifestEntry {
            path,
            label,
            split: if test { Split::Test } else { splits.next().expect("one split per row") },
        })
        .collect();
    let manifest = Manifest {
        entries,
        seed: Some(seed),
        base: out_dir.to_path_buf(),
    };
    manifest.write(&out_dir.join("manifest.csv"))?;
    Ok(PrepareReport { manifest, skipped, sources })
}

/// Knobs of the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisParams {
    pub sample_rate: u32,
    pub seconds: f64,
    /// Phase resets per second in the fake class (uniform range).
    pub reset_rate: (f64, f64),
    /// Amplitude modulation frequency of the fake class, Hz.
    pub modulation_hz: (f64, f64),
    pub modulation_depth: (f64, f64),
    /// Only harmonics above this frequency carry the fake-class artifacts.
    pub artifact_floor_hz: f64,
    /// Rescale modulated harmonics so their mean power is unchanged.
    pub equalize_modulation: bool,
    /// Noise RMS relative to the voiced component.
    pub noise_level: f64,
    /// Output RMS.
    pub rms: f64,
}

impl Default for SynthesisParams {
    fn default() -> Self {
        SynthesisParams {
            sample_rate: TARGET_RATE,
            seconds: SEGMENT_SECONDS as f64,
            reset_rate: (10.0, 20.0),
            modulation_hz: (50.0, 200.0),
            modulation_depth: (0.8, 1.0),
            artifact_floor_hz: 500.0,
            equalize_modulation: true,
            noise_level: 0.1,
            rms: 0.1,
        }
    }
}

/// One synthetic voice. The same voice can be rendered with or without
/// the fake-class artifacts.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticVoice {
    params: SynthesisParams,
    f0: f64,
    vibrato: (f64, f64, f64),
    glide: f64,
    formants: Vec<(f64, f64, f64)>,
    syllables: Vec<(f64, f64, f64)>,
    noise_seed: u64,
    resets: Vec<f64>,
    reset_seed: u64,
    modulation: (f64, f64, f64),
}

impl SyntheticVoice {
    /// Draws a voice from `(seed, index)`.
    pub fn draw(params: &SynthesisParams, seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2 * index);
        let dur = params.seconds;
        let f0 = rng.random_range(90.0..240.0);
        let vibrato = (
            rng.random_range(3.0..7.0),
            rng.random_range(0.005..0.03),
            rng.random_range(0.0..2.0 * PI),
        );
        let glide = rng.random_range(-0.15..0.15);
        let formants = vec![
            (rng.random_range(300.0..900.0), rng.random_range(60.0..140.0), 1.0),
            (rng.random_range(900.0..2400.0), rng.random_range(80.0..180.0), rng.random_range(0.3..0.8)),
            (rng.random_range(2300.0..3500.0), rng.random_range(100.0..250.0), rng.random_range(0.1..0.4)),
            (rng.random_range(3500.0..5000.0), rng.random_range(200.0..400.0), rng.random_range(0.05..0.2)),
        ];
        let mut syllables = Vec::new();
        let mut t = rng.random_range(0.0..0.2);
        while t < dur {
            let len = rng.random_range(0.12..0.4);
            syllables.push((t, len, rng.random_range(0.4..1.0)));
            t += len + rng.random_range(0.03..0.2);
        }
        let noise_seed = rng.random();

        let mut art = ChaCha8Rng::seed_from_u64(seed);
        art.set_stream(2 * index + 1);
        let rate = uniform(&mut art, params.reset_rate);
        let mut resets = Vec::new();
        let mut t = 0.0;
        loop {
            t += -art.random_range(f64::EPSILON..1.0f64).ln() / rate;
            if t >= dur {
                break;
            }
            resets.push(t);
        }
        let reset_seed = art.random();
        let modulation = (
            uniform(&mut art, params.modulation_hz),
            uniform(&mut art, params.modulation_depth),
            art.random_range(0.0..2.0 * PI),
        );
        SyntheticVoice {
            params: params.clone(),
            f0,
            vibrato,
            glide,
            formants,
            syllables,
            noise_seed,
            resets,
            reset_seed,
            modulation,
        }
    }

    fn envelope(&self, t: f64) -> f64 {
        self.syllables
            .iter()
            .filter(|(s, l, _)| t >= *s && t < s + l)
            .map(|(s, l, a)| a * (0.5 - 0.5 * (2.0 * PI * (t - s) / l).cos()))
            .sum()
    }

    fn formant_gain(&self, f: f64) -> f64 {
        let tilt = 0.02 * (500.0 / f.max(50.0));
        tilt + self
            .formants
            .iter()
            .map(|(c, bw, g)| g * (-0.5 * ((f - c) / bw).powi(2)).exp())
            .sum::<f64>()
    }

    pub fn render(&self, artifacts: bool) -> Vec<f64> {
        let p = &self.params;
        let sr = p.sample_rate as f64;
        let n = (p.seconds * sr).round() as usize;
        let nyquist = sr / 2.0;
        let harmonics = ((0.9 * nyquist) / (self.f0 * (1.0 + self.glide.abs() + self.vibrato.1))) as usize;
        let gains: Vec<f64> = (1..=harmonics)
            .map(|k| self.formant_gain(k as f64 * self.f0) / (k as f64).sqrt())
            .collect();
        let mut offsets = vec![0.0; harmonics];
        let mut reset_rng = ChaCha8Rng::seed_from_u64(self.reset_seed);
        let mut next_reset = 0;
        let (fm, depth, phase_m) = self.modulation;
        let am_gain = if p.equalize_modulation { 1.0 / (1.0 + depth * depth / 2.0).sqrt() } else { 1.0 };
        let mut phase = 0.0;
        let mut voiced = vec![0.0; n];
        for (i, out) in voiced.iter_mut().enumerate() {
            let t = i as f64 / sr;
            let (vr, vd, vp) = self.vibrato;
            let f = self.f0 * (1.0 + self.glide * t / p.seconds) * (1.0 + vd * (2.0 * PI * vr * t + vp).sin());
            phase += 2.0 * PI * f / sr;
            if artifacts {
                while next_reset < self.resets.len() && self.resets[next_reset] <= t {
                    for (k, o) in offsets.iter_mut().enumerate() {
                        let jump = reset_rng.random_range(0.0..2.0 * PI);
                        if (k + 1) as f64 * self.f0 > p.artifact_floor_hz {
                            *o = jump;
                        }
                    }
                    next_reset += 1;
                }
            }
            let am = am_gain * (1.0 + depth * (2.0 * PI * fm * t + phase_m).sin());
            let mut s = 0.0;
            for (k, &g) in gains.iter().enumerate() {
                let h = (k + 1) as f64;
                let mut v = g * (h * phase + offsets[k]).sin();
                if artifacts && h * f > p.artifact_floor_hz {
                    v *= am;
                }
                s += v;
            }
            *out = s * self.envelope(t);
        }
        let voiced_rms = rms(&voiced).max(1e-12);
        let mut noise_rng = ChaCha8Rng::seed_from_u64(self.noise_seed);
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let mut lp = 0.0;
        let mut prev = 0.0;
        let mut noise: Vec<f64> = (0..n)
            .map(|i| {
                let w: f64 = normal.sample(&mut noise_rng);
                // Gentle tilt: mix of a low-passed and a differenced component.
                lp = 0.9 * lp + 0.1 * w;
                let hp = w - prev;
                prev = w;
                (3.0 * lp + 0.3 * hp) * (0.3 + self.envelope(i as f64 / sr))
            })
            .collect();
        let scale = p.noise_level * voiced_rms / rms(&noise).max(1e-12);
        noise.iter_mut().for_each(|v| *v *= scale);
        let mut x: Vec<f64> = voiced.iter().zip(&noise).map(|(a, b)| a + b).collect();
        let g = p.rms / rms(&x).max(1e-12);
        x.iter_mut().for_each(|v| *v = (*v * g).clamp(-1.0, 1.0));
        x
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt()
}

/// Renders clip `index` of `label`.
pub fn synthesize(params: &SynthesisParams, seed: u64, index: u64, label: Label) -> Vec<f64> {
    SyntheticVoice::draw(params, seed, index).render(label.is_fake())
}

/// Writes `n_per_class` real and fake clips split 9:1 into train/dev
/// (`manifest.csv`), plus `n_per_class/2` per class for testing
/// (`test_manifest.csv`).
pub fn make_synthetic_corpus(out_dir: &Path, n_per_class: usize, seed: u64, exec: Exec) -> Result<Manifest> {
    make_synthetic_corpus_with(out_dir, n_per_class, seed, &SynthesisParams::default(), exec)
}

pub fn make_synthetic_corpus_with(
    out_dir: &Path,
    n_per_class: usize,
    seed: u64,
    params: &SynthesisParams,
    exec: Exec,
) -> Result<Manifest> {
    if n_per_class < 10 {
        return Err(Error::Config(format!("n_per_class must be at least 10, got {n_per_class}")));
    }
    let wav_dir = out_dir.join("wav");
    std::fs::create_dir_all(&wav_dir).map_err(|e| Error::io(&wav_dir, e))?;
    let n_test = n_per_class / 2;
    let per_class = n_per_class + n_test;
    // Voices are indexed so that real clip i and fake clip i never share a voice.
    let jobs: Vec<(Label, usize)> = [Label::Real, Label::Fake]
        .into_iter()
        .flat_map(|l| (0..per_class).map(move |i| (l, i)))
        .collect();
    let names: Vec<String> = exec.try_map(&jobs, |&(label, i)| {
        let voice = i as u64 * 2 + label.is_fake() as u64;
        let x = synthesize(params, seed, voice, label);
        let name = format!("wav/{}_{i:04}.wav", label.as_str());
        write_wav(&out_dir.join(&name), &x, params.sample_rate)?;
        Ok::<_, Error>(name)
    })?;

    let mut train = Vec::new();
    let mut test = Vec::new();
    for ((label, i), name) in jobs.iter().zip(names) {
        if *i < n_per_class {
            train.push((name, *label));
        } else {
            test.push(ManifestEntry { path: name, label: *label, split: Split::Test });
        }
    }
    let ids: Vec<(String, Label)> = train.iter().map(|(n, l)| (n.clone(), *l)).collect();
    let splits = split_train_dev(&ids, seed);
    let manifest = Manifest {
        entries: train
            .into_iter()
            .zip(splits)
            .map(|((path, label), split)| ManifestEntry { path, label, split })
            .collect(),
        seed: Some(seed),
        base: out_dir.to_path_buf(),
    };
    manifest.write(&out_dir.join("manifest.csv"))?;
    Manifest {
        entries: test,
        seed: Some(seed),
        base: out_dir.to_path_buf(),
    }
    .write(&out_dir.join("test_manifest.csv"))?;
    Ok(manifest)
}
