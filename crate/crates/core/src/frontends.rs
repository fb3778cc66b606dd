//! Feature front-ends: filterbank baselines, standalone 1D scattering and the
//! two scattering fusion pipelines (parallel WST-X1, cascaded WST-X2).
//!
//! The feature map fed to both fusion pipelines is the log-mel map; it stands
//! in for the self-supervised encoder output, which is not part of this crate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use realfft::RealFftPlanner;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scattering1d::Scattering1D;
use crate::scattering2d::Scattering2D;
use crate::spectral::reflect_index;

pub const SAMPLE_RATE: u32 = 16_000;
/// Samples in one 4 s segment.
pub const SEGMENT_SAMPLES: usize = 64_000;
/// 25 ms analysis window.
pub const FRAME_LENGTH: usize = 400;
/// 10 ms hop.
pub const FRAME_HOP: usize = 160;
pub const N_FFT: usize = 1024;
pub const NUM_FRAMES: usize = 399;
pub const NUM_FILTERS: usize = 80;
pub const LOG_FLOOR: f64 = 1e-10;
/// Width each fusion branch is projected to.
pub const FUSION_WIDTH: usize = 144;
pub const CQ_BINS_PER_OCTAVE: usize = 9;
/// Lowest constant-Q center, Nyquist / 2^9.
pub const CQ_MIN_FREQUENCY: f64 = 15.625;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Mel,
    Linear,
    Cq,
    Surrogate,
}

/// A time-frequency (or time-path) matrix stored frames-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    /// Row-major `[frames × channels]`.
    pub values: Vec<f64>,
    pub frames: usize,
    pub channels: usize,
    /// Seconds between frames.
    pub hop: f64,
    pub kind: MapKind,
}

impl FeatureMap {
    pub fn new(values: Vec<f64>, frames: usize, channels: usize, hop: f64, kind: MapKind) -> Result<Self> {
        if values.len() != frames * channels {
            return Err(Error::Contract(format!(
                "{} values for a {frames}x{channels} map",
                values.len()
            )));
        }
        Ok(FeatureMap { values, frames, channels, hop, kind })
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.values[t * self.channels..(t + 1) * self.channels]
    }

    /// Channel-major copy, `[channels × frames]`.
    pub fn transposed(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.values.len()];
        for t in 0..self.frames {
            for c in 0..self.channels {
                out[c * self.frames + t] = self.values[t * self.channels + c];
            }
        }
        out
    }

    /// Average over frames.
    pub fn mean_frame(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.channels];
        for t in 0..self.frames {
            for (a, v) in m.iter_mut().zip(self.frame(t)) {
                *a += v;
            }
        }
        m.iter_mut().for_each(|v| *v /= self.frames as f64);
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionStrategy {
    Wstx1,
    Wstx2,
}

/// A projected, fused feature sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedFeatures {
    /// Row-major `[sequence_length × width]`.
    pub values: Vec<f64>,
    pub sequence_length: usize,
    pub width: usize,
    pub strategy: FusionStrategy,
    pub provenance: serde_json::Value,
}

impl FusedFeatures {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn mean_row(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.width];
        for i in 0..self.sequence_length {
            for (a, v) in m.iter_mut().zip(self.row(i)) {
                *a += v;
            }
        }
        m.iter_mut().for_each(|v| *v /= self.sequence_length as f64);
        m
    }
}

/// Affine map `y = Wᵀx + b` with `W` stored `[input × output]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub input: usize,
    pub output: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Projection {
    pub fn zeros(input: usize, output: usize) -> Self {
        Projection {
            input,
            output,
            weights: vec![0.0; input * output],
            bias: vec![0.0; output],
        }
    }

    /// Gaussian weights with variance `1/input`, zero bias.
    pub fn random(input: usize, output: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, (1.0 / input.max(1) as f64).sqrt()).expect("finite sigma");
        Projection {
            input,
            output,
            weights: (0..input * output).map(|_| normal.sample(&mut rng)).collect(),
            bias: vec![0.0; output],
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input {
            return Err(Error::Contract(format!(
                "projection expects width {}, got {}",
                self.input,
                x.len()
            )));
        }
        let mut y = self.bias.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &self.weights[i * self.output..(i + 1) * self.output];
            for (a, w) in y.iter_mut().zip(row) {
                *a += xi * w;
            }
        }
        Ok(y)
    }
}

fn check_segment(audio: &[f64]) -> Result<()> {
    if audio.len() != SEGMENT_SAMPLES {
        return Err(Error::Data(format!(
            "expected {SEGMENT_SAMPLES} samples (4 s at {SAMPLE_RATE} Hz), got {}",
            audio.len()
        )));
    }
    if audio.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite sample".into()));
    }
    Ok(())
}

/// Appends `FRAME_HOP` reflected samples so framing yields `NUM_FRAMES`.
fn pad_right(audio: &[f64]) -> Vec<f64> {
    let n = audio.len();
    let mut x = audio.to_vec();
    x.extend((0..FRAME_HOP).map(|i| audio[reflect_index((n + i) as isize, n)]));
    x
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

/// Magnitude spectrogram with non-centered Hann frames, `[frames][n_fft/2+1]`.
pub fn stft_magnitude(signal: &[f64], frame_length: usize, hop: usize, n_fft: usize) -> Result<Vec<Vec<f64>>> {
    if frame_length == 0 || hop == 0 || n_fft < frame_length {
        return Err(Error::Config(format!(
            "invalid STFT geometry: window {frame_length}, hop {hop}, n_fft {n_fft}"
        )));
    }
    if signal.len() < frame_length {
        return Err(Error::Size(format!(
            "signal of {} samples is shorter than one frame",
            signal.len()
        )));
    }
    let frames = 1 + (signal.len() - frame_length) / hop;
    let window = hann(frame_length);
    let plan = RealFftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let mut buf = plan.make_input_vec();
    let mut spec = plan.make_output_vec();
    let mut out = Vec::with_capacity(frames);
    for t in 0..frames {
        buf.iter_mut().for_each(|v| *v = 0.0);
        let start = t * hop;
        for (i, w) in window.iter().enumerate() {
            buf[i] = signal[start + i] * w;
        }
        plan.process(&mut buf, &mut spec).expect("planned size");
        out.push(spec.iter().map(|z| z.norm()).collect());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterSpacing {
    Mel,
    Linear,
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Edge frequencies of `n_filters` triangles spanning 0 Hz to Nyquist;
/// filter `i` rises from edge `i`, peaks at edge `i+1`, falls to edge `i+2`.
fn filter_edges(spacing: FilterSpacing, n_filters: usize) -> Vec<f64> {
    let top = SAMPLE_RATE as f64 / 2.0;
    let n = n_filters + 2;
    (0..n)
        .map(|i| {
            let a = i as f64 / (n - 1) as f64;
            match spacing {
                FilterSpacing::Linear => a * top,
                FilterSpacing::Mel => mel_to_hz(a * hz_to_mel(top)),
            }
        })
        .collect()
}

/// Center frequency of every triangular filter, in Hz.
pub fn filter_centers(spacing: FilterSpacing, n_filters: usize) -> Vec<f64> {
    filter_edges(spacing, n_filters)[1..=n_filters].to_vec()
}

/// Log filterbank energies of a 4 s, 16 kHz segment.
#[derive(Debug, Clone)]
pub struct StftFrontend {
    spacing: FilterSpacing,
    /// `[filters × bins]`.
    weights: Vec<Vec<f64>>,
}

impl StftFrontend {
    pub fn new(spacing: FilterSpacing, n_filters: usize) -> Result<Self> {
        if n_filters == 0 {
            return Err(Error::Config("need at least one filter".into()));
        }
        let edges = filter_edges(spacing, n_filters);
        let bins = N_FFT / 2 + 1;
        let weights = (0..n_filters)
            .map(|i| {
                let (lo, mid, hi) = (edges[i], edges[i + 1], edges[i + 2]);
                (0..bins)
                    .map(|k| {
                        let f = k as f64 * SAMPLE_RATE as f64 / N_FFT as f64;
                        if f <= lo || f >= hi {
                            0.0
                        } else if f <= mid {
                            (f - lo) / (mid - lo)
                        } else {
                            (hi - f) / (hi - mid)
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(StftFrontend { spacing, weights })
    }

    pub fn features(&self, audio: &[f64]) -> Result<FeatureMap> {
        check_segment(audio)?;
        let mag = stft_magnitude(&pad_right(audio), FRAME_LENGTH, FRAME_HOP, N_FFT)?;
        let channels = self.weights.len();
        let mut values = Vec::with_capacity(mag.len() * channels);
        for frame in &mag {
            for w in &self.weights {
                let e: f64 = w.iter().zip(frame).map(|(a, m)| a * m * m).sum();
                values.push(e.max(LOG_FLOOR).ln());
            }
        }
        let kind = match self.spacing {
            FilterSpacing::Mel => MapKind::Mel,
            FilterSpacing::Linear => MapKind::Linear,
        };
        FeatureMap::new(values, mag.len(), channels, FRAME_HOP as f64 / SAMPLE_RATE as f64, kind)
    }
}

pub fn stft_features(audio: &[f64], spacing: FilterSpacing, n_filters: usize) -> Result<FeatureMap> {
    StftFrontend::new(spacing, n_filters)?.features(audio)
}

/// Center frequencies of the constant-Q bins, in Hz.
pub fn cq_centers() -> Vec<f64> {
    (0..NUM_FILTERS)
        .map(|k| CQ_MIN_FREQUENCY * 2f64.powf(k as f64 / CQ_BINS_PER_OCTAVE as f64))
        .collect()
}

/// Constant-Q log energies: Gaussian band-pass kernels whose bandwidth is a
/// fixed fraction of their center, evaluated at the STFT frame centers.
#[derive(Debug, Clone)]
pub struct CqFrontend {
    /// Per bin: first spectrum index and kernel values.
    kernels: Vec<(usize, Vec<f64>)>,
}

/// FFT length covering the segment plus reflected margins on both sides.
const CQ_FFT: usize = 81_920;
const CQ_PAD: usize = (CQ_FFT - SEGMENT_SAMPLES) / 2;
/// Sample spacing of the band signals; divides the pad, hop and half-window.
const CQ_DECIMATION: usize = 40;

impl CqFrontend {
    pub fn new() -> Self {
        let q = 1.0 / (2f64.powf(1.0 / CQ_BINS_PER_OCTAVE as f64) - 1.0);
        let df = SAMPLE_RATE as f64 / CQ_FFT as f64;
        let fwhm = 2.0 * (2.0 * 2f64.ln()).sqrt();
        let kernels = cq_centers()
            .into_iter()
            .map(|fc| {
                let sigma = fc / q / fwhm;
                let lo = ((fc - 8.0 * sigma) / df).floor().max(1.0) as usize;
                let hi = ((fc + 8.0 * sigma) / df).ceil() as usize;
                let vals = (lo..=hi)
                    .map(|b| {
                        let d = (b as f64 * df - fc) / sigma;
                        (-0.5 * d * d).exp()
                    })
                    .collect();
                (lo, vals)
            })
            .collect();
        CqFrontend { kernels }
    }

    pub fn features(&self, audio: &[f64]) -> Result<FeatureMap> {
        check_segment(audio)?;
        let n = audio.len();
        let mut padded: Vec<f64> = (0..CQ_FFT)
            .map(|i| audio[reflect_index(i as isize - CQ_PAD as isize, n)])
            .collect();
        let plan = RealFftPlanner::<f64>::new().plan_fft_forward(CQ_FFT);
        let mut spec = plan.make_output_vec();
        plan.process(&mut padded, &mut spec).expect("planned size");

        let m = CQ_FFT / CQ_DECIMATION;
        let inverse = FftPlanner::<f64>::new().plan_fft_inverse(m);
        let first = (CQ_PAD + FRAME_LENGTH / 2) / CQ_DECIMATION;
        let step = FRAME_HOP / CQ_DECIMATION;
        let mut values = vec![0.0; NUM_FRAMES * NUM_FILTERS];
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        let scale = 1.0 / CQ_FFT as f64;
        for (k, (lo, vals)) in self.kernels.iter().enumerate() {
            buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            // Sampling the analytic band signal every CQ_DECIMATION samples
            // folds its spectrum onto m bins.
            for (i, &v) in vals.iter().enumerate() {
                let b = lo + i;
                if b < spec.len() {
                    buf[b % m] += spec[b] * v;
                }
            }
            inverse.process(&mut buf);
            for t in 0..NUM_FRAMES {
                let e = (buf[first + t * step] * scale).norm_sqr();
                values[t * NUM_FILTERS + k] = e.max(LOG_FLOOR).ln();
            }
        }
        FeatureMap::new(
            values,
            NUM_FRAMES,
            NUM_FILTERS,
            FRAME_HOP as f64 / SAMPLE_RATE as f64,
            MapKind::Cq,
        )
    }
}

impl Default for CqFrontend {
    fn default() -> Self {
        Self::new()
    }
}

pub fn cq_features(audio: &[f64]) -> Result<FeatureMap> {
    CqFrontend::new().features(audio)
}

/// The path × frame scattering matrix as a map (channels = paths).
pub fn wst1d_standalone_features(audio: &[f64], transform: &Scattering1D) -> Result<FeatureMap> {
    let s = transform.scatter(audio)?;
    let mut values = vec![0.0; s.coefficients.len()];
    for p in 0..s.num_paths {
        for (t, &v) in s.row(p).iter().enumerate() {
            values[t * s.num_paths + p] = v;
        }
    }
    FeatureMap::new(
        values,
        s.num_frames,
        s.num_paths,
        s.frame_hop as f64 / transform.config().sample_rate,
        MapKind::Surrogate,
    )
}

/// Projections used by the parallel pipeline: pooled scattering → 144 and
/// map channels → 144.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wstx1Projections {
    pub scattering: Projection,
    pub map: Projection,
}

/// Parallel fusion. Branch A pools the scattering coefficients over time,
/// projects them and repeats the result on every map frame; branch B projects
/// each map frame. Output is `[frames × 288]`.
pub fn wstx1_features(
    audio: &[f64],
    transform: &Scattering1D,
    map: &FeatureMap,
    projections: &Wstx1Projections,
) -> Result<FusedFeatures> {
    if map.frames == 0 {
        return Err(Error::Size("feature map has no frames".into()));
    }
    let pooled = transform.scatter(audio)?.pooled();
    let a = projections.scattering.apply(&pooled)?;
    let width = a.len() + projections.map.output;
    let mut values = Vec::with_capacity(map.frames * width);
    for t in 0..map.frames {
        values.extend_from_slice(&a);
        values.extend(projections.map.apply(map.frame(t))?);
    }
    if values.len() != map.frames * width {
        return Err(Error::Contract("branch frame counts disagree".into()));
    }
    Ok(FusedFeatures {
        values,
        sequence_length: map.frames,
        width,
        strategy: FusionStrategy::Wstx1,
        provenance: serde_json::json!({
            "scattering": transform.config(),
            "map": map.kind,
        }),
    })
}

/// Cascaded fusion: 2D scattering of the map, projection of the reduced
/// channel axis to 144, flattened path-major to `[(C_path·T′) × 144]`.
pub fn wstx2_features(map: &FeatureMap, transform: &Scattering2D, projection: &Projection) -> Result<FusedFeatures> {
    let s = transform.scatter(&map.values)?;
    let (c, t_out, d) = (s.channels, s.height, s.width);
    let mut values = Vec::with_capacity(c * t_out * projection.output);
    for ch in 0..c {
        let plane = s.channel(ch);
        for t in 0..t_out {
            values.extend(projection.apply(&plane[t * d..(t + 1) * d])?);
        }
    }
    Ok(FusedFeatures {
        values,
        sequence_length: c * t_out,
        width: projection.output,
        strategy: FusionStrategy::Wstx2,
        provenance: serde_json::json!({
            "scattering": transform.config(),
            "map": map.kind,
        }),
    })
}

/// Mean over paths and reduced frames of the 2D scattering output: the
/// pooled input of the cascaded pipeline before projection.
pub fn wstx2_pooled(map: &FeatureMap, transform: &Scattering2D) -> Result<Vec<f64>> {
    let s = transform.scatter(&map.values)?;
    let d = s.width;
    let mut m = vec![0.0; d];
    for row in s.tensor.chunks_exact(d) {
        for (a, v) in m.iter_mut().zip(row) {
            *a += v;
        }
    }
    let rows = (s.channels * s.height) as f64;
    m.iter_mut().for_each(|v| *v /= rows);
    Ok(m)
}
