//! Morlet wavelet banks and Gaussian low-pass filters.
//!
//! All filters are sampled directly in the Fourier domain on the DFT grid of
//! the (padded) signal and are real-valued there. Frequencies are in cycles
//! per sample. A wavelet at scale `λ` is `ψ̂_λ(ω) = ψ̂(λω)`, which is the
//! Fourier image of the L¹-preserving dilation `λ⁻¹ψ(t/λ)`.
//!
//! The energy sum reported by [`littlewood_paley`] is the one that matters
//! for real-valued inputs:
//!
//! ```text
//! LP(ω) = |φ̂(ω)|² + ½ Σ_λ (|ψ̂_λ(ω)|² + |ψ̂_λ(−ω)|²)
//! ```
//!
//! Every bank rescales its band-pass filters by a single common gain so that
//! `max LP ≤ 1`. The low-pass keeps unit DC gain.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{bin_frequency, is_power_of_two, time_domain};

/// Default mother-wavelet center frequency, cycles/sample (0.85 × π/2 rad/sample).
pub const DEFAULT_CENTER_FREQUENCY: f64 = 0.85 * 0.25;

/// Low-pass width relative to the crossing point with the coarsest wavelet.
/// Chosen so the lower frame bound stays above 0.5 for the shipped banks.
const LOWPASS_WIDTH: f64 = 0.96;

/// Spectral values below this fraction of the peak are stored as exact zeros.
const SPECTRAL_FLOOR: f64 = 1e-16;

/// Parameters of a 1D Morlet mother wavelet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MorletParams {
    /// ξ, cycles per sample, in (0, 0.5).
    pub center_frequency: f64,
    /// σ of the Gaussian envelope in samples.
    pub bandwidth_sigma: f64,
    /// κ, the multiple of the envelope subtracted to cancel the mean.
    pub admissibility_correction: f64,
}

impl MorletParams {
    pub fn new(center_frequency: f64, bandwidth_sigma: f64) -> Result<Self> {
        if !(center_frequency > 0.0 && center_frequency < 0.5) {
            return Err(Error::Domain(format!(
                "center frequency {center_frequency} must lie in (0, 0.5) cycles/sample"
            )));
        }
        if !(bandwidth_sigma > 0.0 && bandwidth_sigma.is_finite()) {
            return Err(Error::Domain(format!(
                "bandwidth sigma {bandwidth_sigma} must be positive"
            )));
        }
        let sf = 1.0 / (2.0 * PI * bandwidth_sigma);
        Ok(MorletParams {
            center_frequency,
            bandwidth_sigma,
            admissibility_correction: (-center_frequency * center_frequency / (2.0 * sf * sf))
                .exp(),
        })
    }

    /// Default parameters for `q` wavelets per octave: adjacent wavelets
    /// cross at half power (−3 dB).
    pub fn for_q(q: u32) -> Result<Self> {
        if q == 0 {
            return Err(Error::Domain("Q must be at least 1".into()));
        }
        let xi = DEFAULT_CENTER_FREQUENCY;
        let r = 2f64.powf(1.0 / q as f64);
        let sf = xi * (r - 1.0) / ((r + 1.0) * LN_2.sqrt());
        Self::new(xi, 1.0 / (2.0 * PI * sf))
    }

    /// σ of the Gaussian in the frequency domain, cycles/sample.
    pub fn frequency_sigma(&self) -> f64 {
        1.0 / (2.0 * PI * self.bandwidth_sigma)
    }

    /// Time-domain σ (samples) of the unit-octave low-pass that meets the
    /// coarsest of `q` wavelets per octave near its half-power point. The
    /// low-pass at `J` octaves has σ = `2^J` times this value.
    pub fn lowpass_sigma0(&self, q: u32) -> f64 {
        let sf = self.frequency_sigma();
        let crossing = (self.center_frequency - sf * LN_2.sqrt()) * 2f64.powf(1.0 / q as f64);
        let sigma_f = LOWPASS_WIDTH * crossing / LN_2.sqrt();
        1.0 / (2.0 * PI * sigma_f)
    }

    #[inline]
    fn response(&self, u: f64) -> f64 {
        let sf = self.frequency_sigma();
        let a = (u - self.center_frequency) / sf;
        let b = u / sf;
        (-0.5 * a * a).exp() - self.admissibility_correction * (-0.5 * b * b).exp()
    }
}

fn check_length(length: usize) -> Result<()> {
    if !is_power_of_two(length) {
        return Err(Error::Config(format!(
            "filter length {length} is not a power of two"
        )));
    }
    Ok(())
}

fn floor_small(values: &mut [f64]) {
    let peak = values.iter().fold(0f64, |m, v| m.max(v.abs()));
    let cut = peak * SPECTRAL_FLOOR;
    for v in values.iter_mut() {
        if v.abs() < cut {
            *v = 0.0;
        }
    }
}

/// Samples `ψ̂_λ` on the `length`-point DFT grid (periodized in frequency).
pub fn build_morlet_1d(params: &MorletParams, scale: f64, length: usize) -> Result<Vec<f64>> {
    check_length(length)?;
    if !(scale >= 1.0) {
        return Err(Error::Domain(format!("wavelet scale {scale} must be >= 1")));
    }
    let mut out: Vec<f64> = (0..length)
        .map(|bin| {
            let w = bin_frequency(bin, length);
            (-2..=2)
                .map(|k| params.response(scale * (w + k as f64)))
                .sum()
        })
        .collect();
    // Admissibility: the correction term cancels the DC response exactly in
    // the continuum; pin it on the grid.
    out[0] = 0.0;
    floor_small(&mut out);
    Ok(out)
}

/// Samples `φ̂_{2^J}` with time-domain σ = `sigma0 · 2^J`, unit DC gain.
pub fn build_gaussian_lowpass(octaves: u32, length: usize, sigma0: f64) -> Result<Vec<f64>> {
    if octaves < 2 {
        return Err(Error::Domain(format!(
            "averaging scale J = {octaves} must be at least 2"
        )));
    }
    gaussian_lowpass(octaves, length, sigma0)
}

fn gaussian_lowpass(octaves: u32, length: usize, sigma0: f64) -> Result<Vec<f64>> {
    check_length(length)?;
    if !(sigma0 > 0.0) {
        return Err(Error::Domain("low-pass sigma must be positive".into()));
    }
    let sigma_t = sigma0 * 2f64.powi(octaves as i32);
    let sf = 1.0 / (2.0 * PI * sigma_t);
    let mut out: Vec<f64> = (0..length)
        .map(|bin| {
            let w = bin_frequency(bin, length);
            (-2..=2)
                .map(|k| {
                    let u = (w + k as f64) / sf;
                    (-0.5 * u * u).exp()
                })
                .sum()
        })
        .collect();
    let dc = out[0];
    out.iter_mut().for_each(|v| *v /= dc);
    floor_small(&mut out);
    Ok(out)
}

/// Morlet band-pass bank for the 1D transform.
#[derive(Debug, Clone)]
pub struct FilterBank1D {
    /// `ψ̂_{λ_j}` for `j = 0..J·Q`, finest scale first.
    pub wavelets: Vec<Vec<f64>>,
    pub lowpass: Vec<f64>,
    pub j: u32,
    pub q: u32,
    /// Number of DFT bins (the padded signal length).
    pub signal_length: usize,
    pub params: MorletParams,
    /// `λ_j = 2^{j/Q}`.
    pub scales: Vec<f64>,
    /// Common gain applied to every band-pass filter to enforce `LP ≤ 1`.
    pub wavelet_gain: f64,
}

pub fn build_filterbank_1d(j: u32, q: u32, length: usize) -> Result<FilterBank1D> {
    if j < 2 {
        return Err(Error::Domain(format!("J = {j} must be at least 2")));
    }
    let params = MorletParams::for_q(q)?;
    check_length(length)?;
    if length < 1usize << j {
        return Err(Error::Config(format!(
            "averaging window 2^{j} exceeds signal length {length}"
        )));
    }
    let scales: Vec<f64> = (0..j * q)
        .map(|i| 2f64.powf(i as f64 / q as f64))
        .collect();
    let mut wavelets = scales
        .iter()
        .map(|&s| build_morlet_1d(&params, s, length))
        .collect::<Result<Vec<_>>>()?;
    let lowpass = build_gaussian_lowpass(j, length, params.lowpass_sigma0(q))?;
    let gain = normalizing_gain(&wavelets, &lowpass, |b| (length - b) % length);
    for w in &mut wavelets {
        w.iter_mut().for_each(|v| *v *= gain);
    }
    Ok(FilterBank1D {
        wavelets,
        lowpass,
        j,
        q,
        signal_length: length,
        params,
        scales,
        wavelet_gain: gain,
    })
}

/// Largest common gain `c` with `|φ̂|² + c²·W_sym ≤ 1` on every bin.
fn normalizing_gain(
    wavelets: &[Vec<f64>],
    lowpass: &[f64],
    mirror: impl Fn(usize) -> usize,
) -> f64 {
    let energy = wavelet_energy(wavelets);
    let mut best = f64::INFINITY;
    for b in 0..lowpass.len() {
        let ws = 0.5 * (energy[b] + energy[mirror(b)]);
        if ws > 0.0 {
            let room = (1.0 - lowpass[b] * lowpass[b]).max(0.0);
            best = best.min(room / ws);
        }
    }
    best.sqrt()
}

fn wavelet_energy(wavelets: &[Vec<f64>]) -> Vec<f64> {
    let n = wavelets.first().map_or(0, |w| w.len());
    let mut e = vec![0.0; n];
    for w in wavelets {
        for (acc, v) in e.iter_mut().zip(w) {
            *acc += v * v;
        }
    }
    e
}

/// Parameters of the oriented 2D Morlet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Morlet2DParams {
    /// Radial center frequency, cycles/pixel.
    pub center_frequency: f64,
    /// Radial σ in the frequency domain.
    pub radial_sigma: f64,
    /// Tangential σ in the frequency domain.
    pub angular_sigma: f64,
    pub admissibility_correction: f64,
}

impl Morlet2DParams {
    /// Dyadic scales crossing at −3 dB radially; neighbouring orientations
    /// crossing at −3 dB on the center circle.
    pub fn for_orientations(l: u32) -> Self {
        let xi = DEFAULT_CENTER_FREQUENCY;
        let radial_sigma = xi / (3.0 * LN_2.sqrt());
        let angular_sigma = xi * (PI / (2.0 * l as f64)).sin() / LN_2.sqrt();
        Morlet2DParams {
            center_frequency: xi,
            radial_sigma,
            angular_sigma,
            admissibility_correction: (-xi * xi / (2.0 * radial_sigma * radial_sigma)).exp(),
        }
    }

    fn lowpass_sigma_f(&self, j: u32) -> f64 {
        let crossing = (self.center_frequency - self.radial_sigma * LN_2.sqrt()) * 2.0;
        LOWPASS_WIDTH * crossing / LN_2.sqrt() / 2f64.powi(j as i32)
    }

    #[inline]
    fn response(&self, par: f64, perp: f64) -> f64 {
        let a = (par - self.center_frequency) / self.radial_sigma;
        let b = par / self.radial_sigma;
        let c = perp / self.angular_sigma;
        let tangential = (-0.5 * c * c).exp();
        ((-0.5 * a * a).exp() - self.admissibility_correction * (-0.5 * b * b).exp()) * tangential
    }
}

/// Oriented Morlet bank for the 2D transform. Filters are row-major
/// `height × width` spectra; index `j * L + ℓ`.
#[derive(Debug, Clone)]
pub struct FilterBank2D {
    pub wavelets: Vec<Vec<f64>>,
    pub lowpass: Vec<f64>,
    pub j: u32,
    pub l: u32,
    pub height: usize,
    pub width: usize,
    pub params: Morlet2DParams,
    pub wavelet_gain: f64,
}

impl FilterBank2D {
    /// `θ_ℓ = πℓ/L`.
    pub fn orientation(&self, l: u32) -> f64 {
        PI * l as f64 / self.l as f64
    }

    pub fn wavelet(&self, j: u32, l: u32) -> &[f64] {
        &self.wavelets[(j * self.l + l) as usize]
    }
}

pub fn build_filterbank_2d(j: u32, l: u32, height: usize, width: usize) -> Result<FilterBank2D> {
    if j < 1 || l < 1 {
        return Err(Error::Domain(format!(
            "2D bank needs J >= 1 and L >= 1 (got J = {j}, L = {l})"
        )));
    }
    if height.min(width) < 1usize << j {
        return Err(Error::Config(format!(
            "image {height}x{width} is smaller than the averaging window 2^{j}"
        )));
    }
    let params = Morlet2DParams::for_orientations(l);
    let mut wavelets = Vec::with_capacity((j * l) as usize);
    for scale in 0..j {
        for orient in 0..l {
            let theta = PI * orient as f64 / l as f64;
            let (s, c) = theta.sin_cos();
            let dil = 2f64.powi(scale as i32);
            let mut f = vec![0.0; height * width];
            for y in 0..height {
                let wy = bin_frequency(y, height);
                for x in 0..width {
                    let wx = bin_frequency(x, width);
                    let mut acc = 0.0;
                    for ky in -1..=1 {
                        for kx in -1..=1 {
                            let uy = (wy + ky as f64) * dil;
                            let ux = (wx + kx as f64) * dil;
                            acc += params.response(ux * c + uy * s, -ux * s + uy * c);
                        }
                    }
                    f[y * width + x] = acc;
                }
            }
            f[0] = 0.0;
            floor_small(&mut f);
            wavelets.push(f);
        }
    }
    let sf = params.lowpass_sigma_f(j);
    let mut lowpass = vec![0.0; height * width];
    for y in 0..height {
        let wy = bin_frequency(y, height);
        for x in 0..width {
            let wx = bin_frequency(x, width);
            let mut acc = 0.0;
            for ky in -1..=1 {
                for kx in -1..=1 {
                    let r2 = (wy + ky as f64).powi(2) + (wx + kx as f64).powi(2);
                    acc += (-0.5 * r2 / (sf * sf)).exp();
                }
            }
            lowpass[y * width + x] = acc;
        }
    }
    let dc = lowpass[0];
    lowpass.iter_mut().for_each(|v| *v /= dc);
    floor_small(&mut lowpass);
    let mirror = |b: usize| {
        let (y, x) = (b / width, b % width);
        ((height - y) % height) * width + (width - x) % width
    };
    let gain = normalizing_gain(&wavelets, &lowpass, mirror);
    for w in &mut wavelets {
        w.iter_mut().for_each(|v| *v *= gain);
    }
    Ok(FilterBank2D {
        wavelets,
        lowpass,
        j,
        l,
        height,
        width,
        params,
        wavelet_gain: gain,
    })
}

/// Frame bounds `(A, B)` of a bank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameBounds {
    /// Minimum of the energy sum over the analyzed band.
    pub lower: f64,
    /// Maximum of the energy sum over all frequencies.
    pub upper: f64,
}

/// A bank whose Littlewood–Paley sum can be evaluated.
pub trait FrameBank {
    fn wavelet_filters(&self) -> &[Vec<f64>];
    fn lowpass_filter(&self) -> &[f64];
    fn mirror_bin(&self, bin: usize) -> usize;
    /// Whether `bin` lies in the band the wavelets are meant to tile:
    /// frequencies of magnitude at most the finest center frequency (on the
    /// non-negative half-axis in 1D).
    fn in_analyzed_band(&self, bin: usize) -> bool;
}

impl FrameBank for FilterBank1D {
    fn wavelet_filters(&self) -> &[Vec<f64>] {
        &self.wavelets
    }
    fn lowpass_filter(&self) -> &[f64] {
        &self.lowpass
    }
    fn mirror_bin(&self, bin: usize) -> usize {
        (self.signal_length - bin) % self.signal_length
    }
    fn in_analyzed_band(&self, bin: usize) -> bool {
        let w = bin_frequency(bin, self.signal_length);
        (0.0..=self.params.center_frequency).contains(&w)
    }
}

impl FrameBank for FilterBank2D {
    fn wavelet_filters(&self) -> &[Vec<f64>] {
        &self.wavelets
    }
    fn lowpass_filter(&self) -> &[f64] {
        &self.lowpass
    }
    fn mirror_bin(&self, bin: usize) -> usize {
        let (y, x) = (bin / self.width, bin % self.width);
        ((self.height - y) % self.height) * self.width + (self.width - x) % self.width
    }
    fn in_analyzed_band(&self, bin: usize) -> bool {
        let wy = bin_frequency(bin / self.width, self.height);
        let wx = bin_frequency(bin % self.width, self.width);
        wy.hypot(wx) <= self.params.center_frequency
    }
}

/// The Littlewood–Paley sum on every DFT bin.
pub fn littlewood_paley_sum(bank: &impl FrameBank) -> Vec<f64> {
    let energy = wavelet_energy(bank.wavelet_filters());
    let phi = bank.lowpass_filter();
    (0..phi.len())
        .map(|b| phi[b] * phi[b] + 0.5 * (energy[b] + energy[bank.mirror_bin(b)]))
        .collect()
}

pub fn littlewood_paley(bank: &impl FrameBank) -> FrameBounds {
    let lp = littlewood_paley_sum(bank);
    let upper = lp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lower = lp
        .iter()
        .enumerate()
        .filter(|(b, _)| bank.in_analyzed_band(*b))
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min);
    FrameBounds { lower, upper }
}

/// Per-filter diagnostics for the JSON debug sidecar.
#[derive(Debug, Clone, Serialize)]
pub struct FilterSummary {
    pub index: usize,
    /// Signed frequency of the spectral peak, cycles/sample.
    pub peak_frequency: f64,
    pub l1_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BankSummary {
    #[serde(rename = "J")]
    pub j: u32,
    #[serde(rename = "Q", skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<u32>,
    pub lengths: Vec<usize>,
    pub filters: Vec<FilterSummary>,
    pub lowpass: FilterSummary,
    pub frame_bounds: FrameBounds,
}

fn summarize(index: usize, spectrum: &[f64], freq: impl Fn(usize) -> f64) -> FilterSummary {
    let (peak, _) = spectrum
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v.abs() > bv {
                (i, v.abs())
            } else {
                (bi, bv)
            }
        });
    FilterSummary {
        index,
        peak_frequency: freq(peak),
        l1_norm: time_domain(spectrum).iter().map(|z| z.norm()).sum(),
    }
}

impl FilterBank1D {
    pub fn summary(&self) -> BankSummary {
        let n = self.signal_length;
        let f = |b| bin_frequency(b, n);
        BankSummary {
            j: self.j,
            q: Some(self.q),
            l: None,
            lengths: vec![n],
            filters: self
                .wavelets
                .iter()
                .enumerate()
                .map(|(i, w)| summarize(i, w, f))
                .collect(),
            lowpass: summarize(0, &self.lowpass, f),
            frame_bounds: littlewood_paley(self),
        }
    }
}

impl FilterBank2D {
    /// Peak frequencies are reported as radial magnitudes; the L¹ norm is of
    /// the flattened spectrum's 1D inverse transform and is only meant for
    /// relative comparisons across filters.
    pub fn summary(&self) -> BankSummary {
        let (h, w) = (self.height, self.width);
        let f = |b: usize| bin_frequency(b / w, h).hypot(bin_frequency(b % w, w));
        BankSummary {
            j: self.j,
            q: None,
            l: Some(self.l),
            lengths: vec![h, w],
            filters: self
                .wavelets
                .iter()
                .enumerate()
                .map(|(i, x)| summarize(i, x, f))
                .collect(),
            lowpass: summarize(0, &self.lowpass, f),
            frame_bounds: littlewood_paley(self),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::time_domain;

    fn argmax(v: &[f64]) -> usize {
        v.iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap()
            .0
    }

    #[test]
    fn morlet_has_zero_mean() {
        for q in [1, 2, 8, 10] {
            let p = MorletParams::for_q(q).unwrap();
            let h = build_morlet_1d(&p, 1.0, 1024).unwrap();
            let mean: rustfft::num_complex::Complex64 = time_domain(&h).iter().sum();
            assert!(mean.norm() < 1e-10, "q={q} mean={mean}");
        }
    }

    #[test]
    fn octave_dilation_halves_peak_frequency() {
        let p = MorletParams::for_q(10).unwrap();
        let n = 4096;
        let a = argmax(&build_morlet_1d(&p, 1.0, n).unwrap());
        let b = argmax(&build_morlet_1d(&p, 2.0, n).unwrap());
        assert!((a as f64 / 2.0 - b as f64).abs() <= 1.0, "{a} vs {b}");
        let a = argmax(&build_morlet_1d(&p, 3.0, n).unwrap());
        let b = argmax(&build_morlet_1d(&p, 6.0, n).unwrap());
        assert!((a as f64 / 2.0 - b as f64).abs() <= 1.0, "{a} vs {b}");
    }

    #[test]
    fn dilation_preserves_l1_norm() {
        let p = MorletParams::for_q(10).unwrap();
        let l1 = |s: f64| -> f64 {
            time_domain(&build_morlet_1d(&p, s, 1024).unwrap())
                .iter()
                .map(|z| z.norm())
                .sum()
        };
        let (a, b) = (l1(1.0), l1(4.0));
        assert!(((a - b) / a).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn morlet_rejects_bad_inputs() {
        let p = MorletParams::for_q(1).unwrap();
        assert!(matches!(build_morlet_1d(&p, 1.0, 1000), Err(Error::Config(_))));
        assert!(matches!(build_morlet_1d(&p, 0.5, 1024), Err(Error::Domain(_))));
        assert!(MorletParams::new(0.5, 3.0).is_err());
        assert!(MorletParams::new(0.2, 0.0).is_err());
    }

    #[test]
    fn lowpass_unit_dc_and_octave_scaling() {
        let sigma0 = MorletParams::for_q(1).unwrap().lowpass_sigma0(1);
        let moments = |j| {
            let phi = build_gaussian_lowpass(j, 4096, sigma0).unwrap();
            assert!((phi[0] - 1.0).abs() < 1e-9);
            let t = time_domain(&phi);
            let n = t.len() as isize;
            let (mut m0, mut m2) = (0.0, 0.0);
            for (i, z) in t.iter().enumerate() {
                assert!(z.re >= -1e-15, "negative tap {}", z.re);
                assert!(z.im.abs() < 1e-12);
                let d = if (i as isize) < n / 2 { i as isize } else { i as isize - n } as f64;
                m0 += z.re;
                m2 += z.re * d * d;
            }
            assert!((m0 - 1.0).abs() < 1e-9);
            (m2 / m0).sqrt()
        };
        let ratio = moments(4) / moments(2);
        assert!((ratio - 4.0).abs() < 0.04, "ratio {ratio}");
        assert!(matches!(
            build_gaussian_lowpass(1, 64, sigma0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn lowpass_symmetric_taps() {
        let phi = build_gaussian_lowpass(3, 256, 1.2).unwrap();
        let t = time_domain(&phi);
        for i in 1..128 {
            assert!((t[i].re - t[256 - i].re).abs() < 1e-15);
        }
    }

    #[test]
    fn bank_counts_and_scale_bound() {
        assert_eq!(build_filterbank_1d(2, 10, 1024).unwrap().wavelets.len(), 20);
        assert_eq!(build_filterbank_1d(2, 1, 1024).unwrap().wavelets.len(), 2);
        let b = build_filterbank_1d(8, 10, 65536).unwrap();
        assert_eq!(b.wavelets.len(), 80);
        let max = b.scales.iter().cloned().fold(0.0, f64::max);
        assert!((max - 2f64.powf(7.9)).abs() < 1e-9 && max < 256.0);
        assert!(matches!(build_filterbank_1d(10, 1, 512), Err(Error::Config(_))));
        assert!(matches!(build_filterbank_1d(1, 1, 512), Err(Error::Domain(_))));
    }

    #[test]
    fn frame_bounds_1d() {
        let fb = littlewood_paley(&build_filterbank_1d(2, 10, 4096).unwrap());
        assert!(fb.upper <= 1.0 + 1e-6, "{fb:?}");
        let fb = littlewood_paley(&build_filterbank_1d(2, 1, 4096).unwrap());
        assert!(fb.lower > 0.0 && fb.upper <= 1.0 + 1e-6, "{fb:?}");
    }

    #[test]
    fn bank_2d_counts_and_orientations() {
        let b = build_filterbank_2d(2, 10, 64, 64).unwrap();
        assert_eq!(b.wavelets.len(), 20);
        assert_eq!(build_filterbank_2d(3, 8, 64, 64).unwrap().wavelets.len(), 24);
        let angles: Vec<f64> = (0..b.l).map(|l| b.orientation(l)).collect();
        assert_eq!(angles[0], 0.0);
        assert!(angles.windows(2).all(|w| w[1] > w[0]));
        assert!(*angles.last().unwrap() < PI);
        assert!(matches!(build_filterbank_2d(3, 4, 64, 4), Err(Error::Config(_))));
        let fb = littlewood_paley(&b);
        assert!(fb.upper <= 1.0 + 1e-6);
    }

    #[test]
    fn single_orientation_prefers_horizontal_frequency() {
        let (h, w) = (32, 32);
        let b = build_filterbank_2d(1, 1, h, w).unwrap();
        let psi = b.wavelet(0, 0);
        // Energy response to a grating is |ψ̂|² at its wave vector (and its mirror).
        let energy = |fy: usize, fx: usize| {
            let m = ((h - fy) % h) * w + (w - fx) % w;
            psi[fy * w + fx].powi(2) + psi[m].powi(2)
        };
        let horizontal = energy(0, 7);
        let vertical = energy(7, 0);
        assert!(horizontal > 100.0 * vertical, "{horizontal} vs {vertical}");
    }

    #[test]
    fn summary_serializes() {
        let s = build_filterbank_1d(2, 1, 256).unwrap().summary();
        let js = serde_json::to_value(&s).unwrap();
        assert_eq!(js["J"], 2);
        assert_eq!(js["filters"].as_array().unwrap().len(), 2);
        assert!(js["frame_bounds"]["upper"].as_f64().unwrap() <= 1.0 + 1e-6);
    }
}
