//! 1D scattering transform of real signals.
//!
//! `S[∅]x = x ∗ φ`, `S[λ₁…λ_m]x = U[λ₁…λ_m]x ∗ φ` with
//! `U[λ₁…λ_m]x = |…|x ∗ ψ_{λ₁}| … ∗ ψ_{λ_m}|`, all convolutions circular on
//! the reflect-padded signal. Each `U` stage is kept at a sampling step of
//! `2^max(0, ⌊j/Q⌋ − oversampling)` and every output row at
//! `2^(J − oversampling)`.

use std::cmp::Ordering;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::filterbank::{build_filterbank_1d, FilterBank1D};
use crate::spectral::{fold_spectrum, hermitian_at, reflect_index, time_domain, Plans, SparseFilter};

/// Parameters of the 1D transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringConfig1D {
    #[serde(rename = "J")]
    pub j: u32,
    #[serde(rename = "Q")]
    pub q: u32,
    #[serde(rename = "M")]
    pub order: u32,
    #[serde(default)]
    pub oversampling: u32,
    #[serde(default = "default_rate")]
    pub sample_rate: f64,
}

fn default_rate() -> f64 {
    16_000.0
}

impl ScatteringConfig1D {
    pub fn new(j: u32, q: u32, order: u32) -> Result<Self> {
        let cfg = ScatteringConfig1D {
            j,
            q,
            order,
            oversampling: 0,
            sample_rate: default_rate(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_oversampling(mut self, oversampling: u32) -> Result<Self> {
        self.oversampling = oversampling;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.j < 2 {
            return Err(Error::Config(format!("J = {} must be at least 2", self.j)));
        }
        if self.j > 16 {
            return Err(Error::Config(format!("J = {} is unreasonably large", self.j)));
        }
        if self.q < 1 {
            return Err(Error::Config("Q must be at least 1".into()));
        }
        if !(1..=3).contains(&self.order) {
            return Err(Error::Config(format!("M = {} must be 1, 2 or 3", self.order)));
        }
        if self.oversampling > self.j {
            return Err(Error::Config(format!(
                "oversampling {} exceeds J = {}",
                self.oversampling, self.j
            )));
        }
        if !(self.sample_rate > 0.0) {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        Ok(())
    }

    /// Invariance scale `T = 2^J / f_s` in seconds.
    pub fn invariance_scale(&self) -> f64 {
        (1u64 << self.j) as f64 / self.sample_rate
    }

    /// Output frame step in samples.
    pub fn frame_hop(&self) -> usize {
        1 << (self.j - self.oversampling)
    }

    /// Sampling-step exponent of `U` after the wavelet with index `j`.
    fn level(&self, wavelet: u32) -> u32 {
        (wavelet / self.q).saturating_sub(self.oversampling)
    }
}

/// One branch of the scattering cascade.
///
/// `indices` are wavelet indices `j` (scale `2^{j/Q}`) in 1D and dyadic
/// scales in 2D; `orientations` is empty in 1D.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScatteringPath {
    pub order: u32,
    pub indices: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub orientations: Vec<u32>,
}

impl ScatteringPath {
    pub fn root() -> Self {
        ScatteringPath {
            order: 0,
            indices: Vec::new(),
            orientations: Vec::new(),
        }
    }

    pub fn scales(indices: Vec<u32>) -> Self {
        ScatteringPath {
            order: indices.len() as u32,
            indices,
            orientations: Vec::new(),
        }
    }

    pub fn oriented(steps: &[(u32, u32)]) -> Self {
        ScatteringPath {
            order: steps.len() as u32,
            indices: steps.iter().map(|s| s.0).collect(),
            orientations: steps.iter().map(|s| s.1).collect(),
        }
    }

    fn child(&self, j: u32) -> Self {
        let mut indices = self.indices.clone();
        indices.push(j);
        ScatteringPath::scales(indices)
    }

    fn key(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.indices
            .iter()
            .enumerate()
            .map(|(i, &j)| (j, self.orientations.get(i).copied().unwrap_or(0)))
    }
}

impl Ord for ScatteringPath {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order
            .cmp(&other.order)
            .then_with(|| self.key().cmp(other.key()))
    }
}

impl PartialOrd for ScatteringPath {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl std::fmt::Display for ScatteringPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.order == 0 {
            return f.write_str("()");
        }
        let parts: Vec<String> = self
            .key()
            .map(|(j, l)| {
                if self.orientations.is_empty() {
                    j.to_string()
                } else {
                    format!("{j}:{l}")
                }
            })
            .collect();
        write!(f, "({})", parts.join(","))
    }
}

/// All paths up to order `M` with strictly increasing wavelet indices,
/// sorted by (order, indices).
pub fn enumerate_paths_1d(config: &ScatteringConfig1D) -> Vec<ScatteringPath> {
    let n = config.j * config.q;
    let mut out = vec![ScatteringPath::root()];
    let mut frontier = vec![ScatteringPath::root()];
    for _ in 0..config.order {
        let mut next = Vec::new();
        for p in &frontier {
            let start = p.indices.last().map_or(0, |&j| j + 1);
            next.extend((start..n).map(|j| p.child(j)));
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Scattering coefficients for one signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringOutput1D {
    /// Row-major `[num_paths × num_frames]`.
    pub coefficients: Vec<f64>,
    pub num_paths: usize,
    pub num_frames: usize,
    pub paths: Vec<ScatteringPath>,
    /// Samples between consecutive frames.
    pub frame_hop: usize,
    /// Length of the unpadded input.
    pub signal_length: usize,
}

impl ScatteringOutput1D {
    pub fn row(&self, p: usize) -> &[f64] {
        &self.coefficients[p * self.num_frames..(p + 1) * self.num_frames]
    }

    /// Range of rows holding paths of order `m`.
    pub fn order_rows(&self, m: u32) -> std::ops::Range<usize> {
        let start = self.paths.partition_point(|p| p.order < m);
        let end = self.paths.partition_point(|p| p.order <= m);
        start..end
    }

    /// Weight that turns a sum over frames into a sum over input samples.
    pub fn frame_weight(&self) -> f64 {
        self.signal_length as f64 / self.num_frames as f64
    }

    /// Frame-weighted Euclidean distance between two outputs of the same shape.
    pub fn distance(&self, other: &ScatteringOutput1D) -> f64 {
        assert_eq!(self.coefficients.len(), other.coefficients.len());
        let d: f64 = self
            .coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (d * self.frame_weight()).sqrt()
    }

    /// Frame-weighted Euclidean norm.
    pub fn norm(&self) -> f64 {
        (self.coefficients.iter().map(|v| v * v).sum::<f64>() * self.frame_weight()).sqrt()
    }

    /// Time average of every path (global average pooling).
    pub fn pooled(&self) -> Vec<f64> {
        (0..self.num_paths)
            .map(|p| self.row(p).iter().sum::<f64>() / self.num_frames as f64)
            .collect()
    }
}

/// Frame-weighted energy `Σ S²` per order `0..=M`.
pub fn scatter_1d_energy(output: &ScatteringOutput1D) -> Vec<f64> {
    let max_order = output.paths.iter().map(|p| p.order).max().unwrap_or(0);
    let w = output.frame_weight();
    (0..=max_order)
        .map(|m| {
            output
                .order_rows(m)
                .map(|r| output.row(r).iter().map(|v| v * v).sum::<f64>())
                .sum::<f64>()
                * w
        })
        .collect()
}

/// Padded length and left pad for a signal of `n` samples.
pub fn padding_1d(n: usize, j: u32) -> (usize, usize) {
    let padded = (2 * n).next_power_of_two().max(1 << j);
    let step = 1usize << j;
    let left = ((padded - n) / 2) / step * step;
    (padded, left)
}

/// Time-domain taps of a real, even filter, truncated where negligible.
#[derive(Debug, Clone)]
struct Taps {
    /// `h[0], h[±1], …, h[±radius]`.
    half: Vec<f64>,
}

impl Taps {
    fn from_spectrum(spectrum: &[f64]) -> Self {
        let h = time_domain(spectrum);
        let peak = h.iter().fold(0f64, |m, z| m.max(z.re.abs()));
        let radius = (0..=h.len() / 2)
            .rev()
            .find(|&r| h[r].re.abs() > peak * TAP_FLOOR)
            .unwrap_or(0);
        Taps {
            half: h[..=radius].iter().map(|z| z.re).collect(),
        }
    }

    /// Circular convolution of `u` with the filter, evaluated at
    /// `first, first + step, …` (`count` outputs).
    fn apply(&self, u: &[f64], first: usize, step: usize, count: usize) -> Vec<f64> {
        let n = u.len();
        let r = self.half.len() - 1;
        let mask = n - 1;
        (0..count)
            .map(|f| {
                let t = first + f * step;
                let mut acc = self.half[0] * u[t];
                if t >= r && t + r < n {
                    for (d, &h) in self.half.iter().enumerate().skip(1) {
                        acc += h * (u[t - d] + u[t + d]);
                    }
                } else {
                    for (d, &h) in self.half.iter().enumerate().skip(1) {
                        acc += h * (u[(t + n - d) & mask] + u[(t + d) & mask]);
                    }
                }
                acc
            })
            .collect()
    }
}

/// Taps below this fraction of the peak are dropped from the low-pass.
const TAP_FLOOR: f64 = 1e-13;

/// A transform prepared for signals of one fixed length.
pub struct Scattering1D {
    config: ScatteringConfig1D,
    bank: FilterBank1D,
    paths: Vec<ScatteringPath>,
    length: usize,
    pad_left: usize,
    /// `wavelets[j][k]`: wavelet `j` folded to sampling step `2^k`.
    wavelets: Vec<Vec<SparseFilter>>,
    /// Low-pass taps at each sampling step up to the largest `U` level.
    lowpass: Vec<Taps>,
    plans: Plans,
}

impl Scattering1D {
    pub fn new(config: ScatteringConfig1D, length: usize) -> Result<Self> {
        config.validate()?;
        if length < 1 << config.j {
            return Err(Error::Size(format!(
                "signal of {length} samples is shorter than 2^J = {}",
                1 << config.j
            )));
        }
        let (padded, pad_left) = padding_1d(length, config.j);
        let bank = build_filterbank_1d(config.j, config.q, padded)?;
        let top = (0..config.j * config.q)
            .map(|j| config.level(j))
            .max()
            .unwrap_or(0);
        let wavelets = bank
            .wavelets
            .iter()
            .enumerate()
            .map(|(j, w)| {
                (0..=config.level(j as u32))
                    .map(|k| SparseFilter::from_dense(&fold_spectrum(w, 1 << k)))
                    .collect()
            })
            .collect();
        let lowpass = (0..=top)
            .map(|k| Taps::from_spectrum(&fold_spectrum(&bank.lowpass, 1 << k)))
            .collect();
        Ok(Scattering1D {
            paths: enumerate_paths_1d(&config),
            plans: Plans::new(padded.trailing_zeros()),
            config,
            bank,
            length,
            pad_left,
            wavelets,
            lowpass,
        })
    }

    pub fn config(&self) -> &ScatteringConfig1D {
        &self.config
    }

    pub fn bank(&self) -> &FilterBank1D {
        &self.bank
    }

    pub fn paths(&self) -> &[ScatteringPath] {
        &self.paths
    }

    pub fn signal_length(&self) -> usize {
        self.length
    }

    pub fn num_frames(&self) -> usize {
        self.length.div_ceil(self.config.frame_hop())
    }

    pub fn scatter(&self, signal: &[f64]) -> Result<ScatteringOutput1D> {
        if signal.len() != self.length {
            return Err(Error::Size(format!(
                "transform prepared for {} samples, got {}",
                self.length,
                signal.len()
            )));
        }
        if let Some(i) = signal.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite sample at index {i}")));
        }
        let n = self.length;
        let padded = self.bank.signal_length;
        let xp: Vec<f64> = (0..padded)
            .map(|i| signal[reflect_index(i as isize - self.pad_left as isize, n)])
            .collect();

        let frames = self.num_frames();
        let mut coefficients = vec![0.0; self.paths.len() * frames];
        let mut cascade = Cascade {
            t: self,
            out: &mut coefficients,
            frames,
        };
        let s0 = self.average(&xp, 0);
        cascade.store(&ScatteringPath::root(), &s0);
        if self.config.order > 0 {
            let mut scratch = xp;
            let spectrum = self.plans.rfft(&mut scratch);
            cascade.descend(&ScatteringPath::root(), &spectrum, padded, 0);
        }

        Ok(ScatteringOutput1D {
            coefficients,
            num_paths: self.paths.len(),
            num_frames: frames,
            paths: self.paths.clone(),
            frame_hop: self.config.frame_hop(),
            signal_length: n,
        })
    }

    pub fn scatter_batch(
        &self,
        signals: &[Vec<f64>],
        exec: Exec,
    ) -> Result<Vec<ScatteringOutput1D>> {
        exec.try_map(signals, |s| self.scatter(s))
    }

    /// `|u ∗ ψ|` sampled every `factor` steps, where `half` is the
    /// non-redundant spectrum of a real `u` of length `len`.
    fn modulus(
        &self,
        half: &[Complex64],
        len: usize,
        filter: &SparseFilter,
        factor: usize,
    ) -> Vec<f64> {
        let m = len / factor;
        let mask = m - 1;
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (&i, &v) in filter.idx.iter().zip(&filter.val) {
            let i = i as usize;
            buf[i & mask] += hermitian_at(half, i, len) * v;
        }
        self.plans.ifft(&mut buf);
        let s = 1.0 / len as f64;
        buf.iter().map(|z| z.norm_sqr().sqrt() * s).collect()
    }

    /// Low-pass of `u` (at sampling step `2^level`) on the output frames.
    fn average(&self, u: &[f64], level: u32) -> Vec<f64> {
        let hop_exp = self.config.j - self.config.oversampling;
        let step = 1usize << (hop_exp - level);
        let first = self.pad_left >> level;
        self.lowpass[level as usize].apply(u, first, step, self.num_frames())
    }
}

struct Cascade<'a> {
    t: &'a Scattering1D,
    out: &'a mut [f64],
    frames: usize,
}

impl Cascade<'_> {
    fn store(&mut self, path: &ScatteringPath, row: &[f64]) {
        let r = self
            .t
            .paths
            .binary_search(path)
            .expect("cascade visits only enumerated paths");
        self.out[r * self.frames..(r + 1) * self.frames].copy_from_slice(row);
    }

    /// Expands every child of `path`, whose `U` has half spectrum `half`
    /// (length `len` in time) at sampling step `2^level`.
    fn descend(&mut self, path: &ScatteringPath, half: &[Complex64], len: usize, level: u32) {
        let cfg = self.t.config;
        let start = path.indices.last().map_or(0, |&j| j + 1);
        let leaf = path.order + 1 >= cfg.order;
        for j in start..cfg.j * cfg.q {
            let k = cfg.level(j);
            let filter = &self.t.wavelets[j as usize][level as usize];
            let mut u = self.t.modulus(half, len, filter, 1 << (k - level));
            let child = path.child(j);
            let s = self.t.average(&u, k);
            self.store(&child, &s);
            if !leaf {
                let ulen = u.len();
                let u_hat = self.t.plans.rfft(&mut u);
                self.descend(&child, &u_hat, ulen, k);
            }
        }
    }
}

/// One-shot transform of a single signal.
pub fn scatter_1d(signal: &[f64], config: &ScatteringConfig1D) -> Result<ScatteringOutput1D> {
    Scattering1D::new(*config, signal.len())?.scatter(signal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn path_enumeration_small() {
        let cfg = ScatteringConfig1D::new(2, 1, 2).unwrap();
        let p = enumerate_paths_1d(&cfg);
        let want = vec![
            ScatteringPath::root(),
            ScatteringPath::scales(vec![0]),
            ScatteringPath::scales(vec![1]),
            ScatteringPath::scales(vec![0, 1]),
        ];
        assert_eq!(p, want);
        let cfg = ScatteringConfig1D::new(2, 10, 1).unwrap();
        assert_eq!(enumerate_paths_1d(&cfg).len(), 21);
        let cfg = ScatteringConfig1D::new(2, 10, 2).unwrap();
        assert_eq!(enumerate_paths_1d(&cfg).len(), 21 + 190);
    }

    #[test]
    fn paths_are_sorted() {
        let cfg = ScatteringConfig1D::new(3, 2, 3).unwrap();
        let p = enumerate_paths_1d(&cfg);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(p.last().unwrap().order, 3);
    }

    #[test]
    fn config_validation() {
        assert!(ScatteringConfig1D::new(1, 1, 1).is_err());
        assert!(ScatteringConfig1D::new(2, 0, 1).is_err());
        assert!(ScatteringConfig1D::new(2, 1, 4).is_err());
        assert!(ScatteringConfig1D::new(2, 1, 1).unwrap().with_oversampling(3).is_err());
        let c = ScatteringConfig1D::new(6, 8, 2).unwrap();
        assert_eq!(c.frame_hop(), 64);
        assert!((c.invariance_scale() - 0.004).abs() < 1e-15);
    }

    #[test]
    fn zero_signal_gives_zero() {
        let cfg = ScatteringConfig1D::new(3, 2, 2).unwrap();
        let out = scatter_1d(&vec![0.0; 300], &cfg).unwrap();
        assert!(out.coefficients.iter().all(|&v| v == 0.0));
        assert_eq!(out.num_frames, 300usize.div_ceil(8));
    }

    #[test]
    fn constant_signal() {
        let cfg = ScatteringConfig1D::new(2, 1, 2).unwrap();
        let c = 0.7;
        let out = scatter_1d(&vec![c; 256], &cfg).unwrap();
        assert!(out.row(0).iter().all(|v| (v - c).abs() < 1e-6));
        for r in 1..out.num_paths {
            assert!(out.row(r).iter().all(|v| v.abs() < 1e-6 * c));
        }
    }

    #[test]
    fn rejects_bad_input() {
        let cfg = ScatteringConfig1D::new(4, 1, 1).unwrap();
        assert!(matches!(scatter_1d(&[0.0; 8], &cfg), Err(Error::Size(_))));
        let mut x = vec![0.0; 64];
        x[3] = f64::NAN;
        assert!(matches!(scatter_1d(&x, &cfg), Err(Error::Data(_))));
    }

    #[test]
    fn nonnegative_and_deterministic() {
        let cfg = ScatteringConfig1D::new(3, 4, 2).unwrap();
        let x = noise(500, 1);
        let a = scatter_1d(&x, &cfg).unwrap();
        let b = scatter_1d(&x, &cfg).unwrap();
        assert_eq!(a, b);
        for r in 1..a.num_paths {
            assert!(a.row(r).iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn energy_bounded_by_signal() {
        for (j, q, m) in [(2, 1, 2), (4, 8, 2), (3, 2, 3)] {
            let cfg = ScatteringConfig1D::new(j, q, m).unwrap();
            let x = noise(1000, j as u64);
            let e: f64 = scatter_1d_energy(&scatter_1d(&x, &cfg).unwrap()).iter().sum();
            let ex: f64 = x.iter().map(|v| v * v).sum();
            assert!(e <= ex * (1.0 + 1e-6), "{e} vs {ex}");
        }
    }

    #[test]
    fn oversampling_refines_frames() {
        let cfg = ScatteringConfig1D::new(4, 1, 2).unwrap();
        let x = noise(256, 9);
        let a = scatter_1d(&x, &cfg).unwrap();
        let b = scatter_1d(&x, &cfg.with_oversampling(1).unwrap()).unwrap();
        assert_eq!(b.num_frames, 2 * a.num_frames);
        assert_eq!(b.frame_hop, 8);
        // Even frames of the finer output sit at the same instants.
        for f in 0..a.num_frames {
            let (u, v) = (a.row(1)[f], b.row(1)[2 * f]);
            assert!((u - v).abs() < 1e-3 * (1.0 + u.abs()), "{u} {v}");
        }
    }

    #[test]
    fn order_rows_ranges() {
        let cfg = ScatteringConfig1D::new(2, 10, 2).unwrap();
        let out = scatter_1d(&noise(128, 2), &cfg).unwrap();
        assert_eq!(out.order_rows(0), 0..1);
        assert_eq!(out.order_rows(1), 1..21);
        assert_eq!(out.order_rows(2), 21..211);
    }
}
