//! Small FFT and indexing helpers shared by the transforms.

use std::sync::Arc;

use realfft::{RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Signed DFT bin frequency in cycles per sample, in `[-0.5, 0.5)`.
#[inline]
pub fn bin_frequency(bin: usize, len: usize) -> f64 {
    if 2 * bin < len {
        bin as f64 / len as f64
    } else {
        bin as f64 / len as f64 - 1.0
    }
}

pub fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

/// Maps any integer position onto `[0, n)` by whole-sample symmetric
/// reflection about the end samples (`x[-1] = x[1]`).
pub fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut m = i.rem_euclid(period);
    if m >= n as isize {
        m = period - m;
    }
    m as usize
}

/// Inverse DFT of a real-valued spectrum, unnormalized as in rustfft, scaled by `1/len`.
pub fn time_domain(spectrum: &[f64]) -> Vec<Complex64> {
    let n = spectrum.len();
    let mut buf: Vec<Complex64> = spectrum.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let s = 1.0 / n as f64;
    buf.iter_mut().for_each(|z| *z *= s);
    buf
}

/// Sparse representation of a real frequency response: only bins that are
/// exactly non-zero.
#[derive(Debug, Clone)]
pub(crate) struct SparseFilter {
    pub idx: Vec<u32>,
    pub val: Vec<f64>,
}

impl SparseFilter {
    pub fn from_dense(dense: &[f64]) -> Self {
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for (i, &v) in dense.iter().enumerate() {
            if v != 0.0 {
                idx.push(i as u32);
                val.push(v);
            }
        }
        SparseFilter { idx, val }
    }
}

/// Periodizes a spectrum of length `len` onto `len / factor` bins by summing
/// aliases. This is the spectrum of the time-domain filter decimated by
/// `factor` and multiplied by `factor`.
pub(crate) fn fold_spectrum(dense: &[f64], factor: usize) -> Vec<f64> {
    let m = dense.len() / factor;
    let mut out = vec![0.0; m];
    for (i, &v) in dense.iter().enumerate() {
        out[i % m] += v;
    }
    out
}

/// Value of the full spectrum at `bin` given the non-redundant half of a
/// real signal's DFT of length `len`.
#[inline]
pub(crate) fn hermitian_at(half: &[Complex64], bin: usize, len: usize) -> Complex64 {
    if bin < half.len() {
        half[bin]
    } else {
        half[len - bin].conj()
    }
}

/// FFT plans for the power-of-two sizes visited by one transform.
pub(crate) struct Plans {
    forward_real: Vec<Option<Arc<dyn RealToComplex<f64>>>>,
    inverse: Vec<Option<Arc<dyn Fft<f64>>>>,
    forward: Vec<Option<Arc<dyn Fft<f64>>>>,
}

impl Plans {
    /// Plans every power-of-two size up to `2^max_log2`.
    pub fn new(max_log2: u32) -> Self {
        let mut rp = RealFftPlanner::<f64>::new();
        let mut cp = FftPlanner::<f64>::new();
        let levels = max_log2 as usize + 1;
        let mut plans = Plans {
            forward_real: vec![None; levels],
            inverse: vec![None; levels],
            forward: vec![None; levels],
        };
        for lg in 0..levels {
            let n = 1usize << lg;
            if n >= 2 {
                plans.forward_real[lg] = Some(rp.plan_fft_forward(n));
            }
            plans.inverse[lg] = Some(cp.plan_fft_inverse(n));
            plans.forward[lg] = Some(cp.plan_fft_forward(n));
        }
        plans
    }

    fn level(n: usize) -> usize {
        debug_assert!(is_power_of_two(n));
        n.trailing_zeros() as usize
    }

    /// Forward real FFT; consumes `input` as scratch.
    pub fn rfft(&self, input: &mut [f64]) -> Vec<Complex64> {
        let plan = self.forward_real[Self::level(input.len())]
            .as_ref()
            .expect("planned size");
        let mut out = plan.make_output_vec();
        plan.process(input, &mut out).expect("buffer sizes match plan");
        out
    }

    /// Unnormalized in-place inverse complex FFT.
    pub fn ifft(&self, buf: &mut [Complex64]) {
        self.inverse[Self::level(buf.len())]
            .as_ref()
            .expect("planned size")
            .process(buf);
    }

    pub fn fft(&self, buf: &mut [Complex64]) {
        self.forward[Self::level(buf.len())]
            .as_ref()
            .expect("planned size")
            .process(buf);
    }
}
