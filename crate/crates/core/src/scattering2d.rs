//! 2D scattering transform of real matrices (time × feature maps).
//!
//! Paths of order 2 pair every orientation with every orientation but keep
//! only increasing scales, giving `1 + JL + L²·J(J−1)/2` channels.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::filterbank::{build_filterbank_2d, FilterBank2D};
use crate::scattering1d::ScatteringPath;
use crate::spectral::{reflect_index, Plans, SparseFilter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScatteringConfig2D {
    #[serde(rename = "J")]
    pub j: u32,
    #[serde(rename = "L")]
    pub l: u32,
    #[serde(rename = "M")]
    pub order: u32,
}

impl ScatteringConfig2D {
    pub fn new(j: u32, l: u32, order: u32) -> Result<Self> {
        let c = ScatteringConfig2D { j, l, order };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=12).contains(&self.j) {
            return Err(Error::Config(format!("J = {} must lie in 1..=12", self.j)));
        }
        if self.l < 1 {
            return Err(Error::Config("L must be at least 1".into()));
        }
        if !(1..=3).contains(&self.order) {
            return Err(Error::Config(format!("M = {} must be 1, 2 or 3", self.order)));
        }
        Ok(())
    }
}

/// Closed-form channel count. Only defined through order 2; use
/// [`enumerate_paths_2d`] for order 3.
pub fn path_count_2d(j: u32, l: u32, order: u32) -> Result<usize> {
    if j < 1 || l < 1 {
        return Err(Error::Domain(format!("J = {j} and L = {l} must be positive")));
    }
    let (j, l) = (j as usize, l as usize);
    match order {
        1 => Ok(1 + j * l),
        2 => Ok(1 + j * l + l * l * j * (j - 1) / 2),
        3 => Err(Error::Unsupported(
            "no closed form for M = 3; count enumerate_paths_2d instead".into(),
        )),
        m => Err(Error::Domain(format!("M = {m} must be 1, 2 or 3"))),
    }
}

/// All paths sorted by (order, (j₁, ℓ₁), (j₂, ℓ₂), …), scales strictly increasing.
pub fn enumerate_paths_2d(config: &ScatteringConfig2D) -> Vec<ScatteringPath> {
    let mut out = vec![ScatteringPath::root()];
    let mut frontier: Vec<Vec<(u32, u32)>> = vec![Vec::new()];
    for _ in 0..config.order {
        let mut next = Vec::new();
        for steps in &frontier {
            let start = steps.last().map_or(0, |s| s.0 + 1);
            for j in start..config.j {
                for l in 0..config.l {
                    let mut s = steps.clone();
                    s.push((j, l));
                    next.push(s);
                }
            }
        }
        out.extend(next.iter().map(|s| ScatteringPath::oriented(s)));
        frontier = next;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringOutput2D {
    /// Row-major `[channels × height × width]`.
    pub tensor: Vec<f64>,
    pub channels: usize,
    /// `⌊H / 2^J⌋`.
    pub height: usize,
    /// `⌊W / 2^J⌋`.
    pub width: usize,
    pub paths: Vec<ScatteringPath>,
    pub input_shape: (usize, usize),
}

impl ScatteringOutput2D {
    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.tensor[c * n..(c + 1) * n]
    }

    pub fn order_channels(&self, m: u32) -> std::ops::Range<usize> {
        self.paths.partition_point(|p| p.order < m)..self.paths.partition_point(|p| p.order <= m)
    }

    /// Weight turning a sum over output cells into a sum over input pixels.
    pub fn cell_weight(&self) -> f64 {
        let (h, w) = self.input_shape;
        (h * w) as f64 / (self.height * self.width) as f64
    }

    pub fn norm(&self) -> f64 {
        (self.tensor.iter().map(|v| v * v).sum::<f64>() * self.cell_weight()).sqrt()
    }

    pub fn distance(&self, other: &ScatteringOutput2D) -> f64 {
        assert_eq!(self.tensor.len(), other.tensor.len());
        let d: f64 = self
            .tensor
            .iter()
            .zip(&other.tensor)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (d * self.cell_weight()).sqrt()
    }
}

/// Padded size and leading pad of one axis of length `n`.
pub fn padding_axis(n: usize, j: u32) -> (usize, usize) {
    let step = 1usize << j;
    let padded = (n + 2 * step).next_power_of_two();
    (padded, (padded - n) / 2 / step * step)
}

/// A transform prepared for images of one shape.
pub struct Scattering2D {
    config: ScatteringConfig2D,
    bank: FilterBank2D,
    paths: Vec<ScatteringPath>,
    shape: (usize, usize),
    pads: (usize, usize),
    /// `wavelets[j·L + ℓ][k]`: the filter folded to sampling step `2^k`.
    wavelets: Vec<Vec<SparseFilter>>,
    /// Low-pass folded to each sampling step `0..J`.
    lowpass: Vec<SparseFilter>,
    plans: Plans,
}

impl Scattering2D {
    pub fn new(config: ScatteringConfig2D, height: usize, width: usize) -> Result<Self> {
        config.validate()?;
        let step = 1usize << config.j;
        if height < step || width < step {
            return Err(Error::Size(format!(
                "{height}x{width} input is smaller than 2^J = {step}"
            )));
        }
        let (ph, top) = padding_axis(height, config.j);
        let (pw, left) = padding_axis(width, config.j);
        let bank = build_filterbank_2d(config.j, config.l, ph, pw)?;
        let wavelets = bank
            .wavelets
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let scale = i as u32 / config.l;
                (0..=scale)
                    .map(|k| SparseFilter::from_dense(&fold_2d(w, ph, pw, 1 << k)))
                    .collect()
            })
            .collect();
        let lowpass = (0..config.j)
            .map(|k| SparseFilter::from_dense(&fold_2d(&bank.lowpass, ph, pw, 1 << k)))
            .collect();
        Ok(Scattering2D {
            paths: enumerate_paths_2d(&config),
            plans: Plans::new(ph.max(pw).trailing_zeros()),
            config,
            bank,
            shape: (height, width),
            pads: (top, left),
            wavelets,
            lowpass,
        })
    }

    pub fn config(&self) -> &ScatteringConfig2D {
        &self.config
    }

    pub fn bank(&self) -> &FilterBank2D {
        &self.bank
    }

    pub fn paths(&self) -> &[ScatteringPath] {
        &self.paths
    }

    pub fn output_shape(&self) -> (usize, usize, usize) {
        let s = self.config.j;
        (self.paths.len(), self.shape.0 >> s, self.shape.1 >> s)
    }

    /// `image` is row-major `height × width`.
    pub fn scatter(&self, image: &[f64]) -> Result<ScatteringOutput2D> {
        let (h, w) = self.shape;
        if image.len() != h * w {
            return Err(Error::Size(format!(
                "transform prepared for {h}x{w} = {} values, got {}",
                h * w,
                image.len()
            )));
        }
        if let Some(i) = image.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite value at ({}, {})", i / w, i % w)));
        }
        let (ph, pw) = (self.bank.height, self.bank.width);
        let (top, left) = self.pads;
        let mut buf = Vec::with_capacity(ph * pw);
        for y in 0..ph {
            let sy = reflect_index(y as isize - top as isize, h);
            for x in 0..pw {
                let sx = reflect_index(x as isize - left as isize, w);
                buf.push(Complex64::new(image[sy * w + sx], 0.0));
            }
        }
        let grid = Grid { rows: ph, cols: pw };
        self.fft2(&mut buf, grid, false);

        let (c, oh, ow) = self.output_shape();
        let mut tensor = vec![0.0; c * oh * ow];
        let mut cascade = Cascade2 {
            t: self,
            out: &mut tensor,
            cell: oh * ow,
        };
        let s0 = self.average(&buf, grid, 0);
        cascade.store(&ScatteringPath::root(), &s0);
        cascade.descend(&[], &buf, grid, 0);

        Ok(ScatteringOutput2D {
            tensor,
            channels: c,
            height: oh,
            width: ow,
            paths: self.paths.clone(),
            input_shape: self.shape,
        })
    }

    pub fn scatter_batch(&self, images: &[Vec<f64>], exec: Exec) -> Result<Vec<ScatteringOutput2D>> {
        exec.try_map(images, |im| self.scatter(im))
    }

    fn fft2(&self, buf: &mut [Complex64], g: Grid, inverse: bool) {
        let run = |b: &mut [Complex64]| {
            if inverse {
                self.plans.ifft(b)
            } else {
                self.plans.fft(b)
            }
        };
        for row in buf.chunks_exact_mut(g.cols) {
            run(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); g.rows];
        for x in 0..g.cols {
            for y in 0..g.rows {
                col[y] = buf[y * g.cols + x];
            }
            run(&mut col);
            for y in 0..g.rows {
                buf[y * g.cols + x] = col[y];
            }
        }
    }

    /// Product with `filter`, folded by `factor` on both axes, back to space.
    fn filter_decimate(
        &self,
        spectrum: &[Complex64],
        g: Grid,
        filter: &SparseFilter,
        factor: usize,
    ) -> (Vec<Complex64>, Grid) {
        let out = Grid {
            rows: g.rows / factor,
            cols: g.cols / factor,
        };
        let (my, mx) = (out.rows - 1, out.cols - 1);
        let mut buf = vec![Complex64::new(0.0, 0.0); out.rows * out.cols];
        for (&i, &v) in filter.idx.iter().zip(&filter.val) {
            let i = i as usize;
            let (y, x) = (i / g.cols, i % g.cols);
            buf[(y & my) * out.cols + (x & mx)] += spectrum[i] * v;
        }
        self.fft2(&mut buf, out, true);
        let s = 1.0 / (g.rows * g.cols) as f64;
        buf.iter_mut().for_each(|z| *z *= s);
        (buf, out)
    }

    fn average(&self, spectrum: &[Complex64], g: Grid, level: u32) -> Vec<f64> {
        let factor = 1usize << (self.config.j - level);
        let (y, out) = self.filter_decimate(spectrum, g, &self.lowpass[level as usize], factor);
        let s = self.config.j;
        let (oh, ow) = (self.shape.0 >> s, self.shape.1 >> s);
        let (r0, c0) = (self.pads.0 >> s, self.pads.1 >> s);
        let mut v = Vec::with_capacity(oh * ow);
        for r in r0..r0 + oh {
            v.extend(y[r * out.cols + c0..r * out.cols + c0 + ow].iter().map(|z| z.re));
        }
        v
    }
}

#[derive(Debug, Clone, Copy)]
struct Grid {
    rows: usize,
    cols: usize,
}

struct Cascade2<'a> {
    t: &'a Scattering2D,
    out: &'a mut [f64],
    cell: usize,
}

impl Cascade2<'_> {
    fn store(&mut self, path: &ScatteringPath, v: &[f64]) {
        let c = self
            .t
            .paths
            .binary_search(path)
            .expect("cascade visits only enumerated paths");
        self.out[c * self.cell..(c + 1) * self.cell].copy_from_slice(v);
    }

    fn descend(&mut self, steps: &[(u32, u32)], spectrum: &[Complex64], g: Grid, level: u32) {
        let cfg = self.t.config;
        if steps.len() as u32 >= cfg.order {
            return;
        }
        let start = steps.last().map_or(0, |s| s.0 + 1);
        for j in start..cfg.j {
            for l in 0..cfg.l {
                let filter = &self.t.wavelets[(j * cfg.l + l) as usize][level as usize];
                let (mut u, ug) = self.t.filter_decimate(spectrum, g, filter, 1 << (j - level));
                for z in u.iter_mut() {
                    *z = Complex64::new(z.norm_sqr().sqrt(), 0.0);
                }
                self.t.fft2(&mut u, ug, false);
                let mut child = steps.to_vec();
                child.push((j, l));
                let s = self.t.average(&u, ug, j);
                self.store(&ScatteringPath::oriented(&child), &s);
                self.descend(&child, &u, ug, j);
            }
        }
    }
}

/// Folds a row-major `rows × cols` spectrum by `factor` along both axes.
fn fold_2d(dense: &[f64], rows: usize, cols: usize, factor: usize) -> Vec<f64> {
    let (mr, mc) = (rows / factor, cols / factor);
    let mut out = vec![0.0; mr * mc];
    for y in 0..rows {
        for x in 0..cols {
            out[(y % mr) * mc + x % mc] += dense[y * cols + x];
        }
    }
    out
}

/// One-shot transform of a row-major `height × width` image.
pub fn scatter_2d(
    image: &[f64],
    height: usize,
    width: usize,
    config: &ScatteringConfig2D,
) -> Result<ScatteringOutput2D> {
    Scattering2D::new(*config, height, width)?.scatter(image)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn closed_form_counts() {
        assert_eq!(path_count_2d(2, 10, 2).unwrap(), 121);
        assert_eq!(path_count_2d(3, 8, 2).unwrap(), 217);
        assert_eq!(path_count_2d(1, 5, 2).unwrap(), 6);
        assert!(matches!(path_count_2d(2, 2, 3), Err(Error::Unsupported(_))));
        let c = ScatteringConfig2D::new(3, 2, 3).unwrap();
        // 1 + JL + L²·C(J,2) + L³·C(J,3)
        assert_eq!(enumerate_paths_2d(&c).len(), 1 + 6 + 4 * 3 + 8);
    }

    #[test]
    fn enumeration_is_sorted() {
        let c = ScatteringConfig2D::new(3, 3, 2).unwrap();
        let p = enumerate_paths_2d(&c);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        assert!(p.iter().all(|q| q.indices.windows(2).all(|w| w[1] > w[0])));
    }

    #[test]
    fn shapes_and_zero() {
        let c = ScatteringConfig2D::new(2, 3, 2).unwrap();
        let out = scatter_2d(&vec![0.0; 37 * 23], 37, 23, &c).unwrap();
        assert_eq!((out.channels, out.height, out.width), (1 + 6 + 9, 9, 5));
        assert!(out.tensor.iter().all(|&v| v == 0.0));
        assert!(matches!(
            scatter_2d(&[0.0; 9], 3, 3, &c),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn constant_image() {
        let c = ScatteringConfig2D::new(2, 4, 2).unwrap();
        let out = scatter_2d(&vec![2.0; 32 * 32], 32, 32, &c).unwrap();
        assert!(out.channel(0).iter().all(|v| (v - 2.0).abs() < 1e-9));
        assert!(out.tensor[out.height * out.width..].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn grating_orientation() {
        let (h, w) = (32, 32);
        let c = ScatteringConfig2D::new(2, 4, 1).unwrap();
        let t = Scattering2D::new(c, h, w).unwrap();
        let energy = |vertical_stripes: bool| -> Vec<f64> {
            let img: Vec<f64> = (0..h * w)
                .map(|i| {
                    let (y, x) = ((i / w) as f64, (i % w) as f64);
                    let p = if vertical_stripes { x } else { y };
                    (2.0 * PI * 0.2 * p).cos()
                })
                .collect();
            let out = t.scatter(&img).unwrap();
            (0..4)
                .map(|l| out.channel(1 + l).iter().map(|v| v * v).sum())
                .collect()
        };
        let e0 = energy(true);
        let e90 = energy(false);
        let argmax = |e: &[f64]| (0..e.len()).max_by(|&a, &b| e[a].total_cmp(&e[b])).unwrap();
        assert_eq!(argmax(&e0), 0);
        assert_eq!(argmax(&e90), 2);
    }
}
