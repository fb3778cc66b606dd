//! Scattering by explicit time- and space-domain sums.

use std::f64::consts::PI;

use wstx::filterbank::{build_filterbank_1d, build_filterbank_2d};
use wstx::scattering1d::{ScatteringConfig1D, ScatteringOutput1D, ScatteringPath};
use wstx::scattering2d::{ScatteringConfig2D, ScatteringOutput2D};

use crate::{OracleError, BUDGET};

/// Taps smaller than this fraction of a filter's peak are skipped.
const NEGLIGIBLE: f64 = 1e-15;

#[derive(Clone, Copy, Debug, Default)]
struct C {
    re: f64,
    im: f64,
}

impl C {
    fn abs(self) -> f64 {
        (self.re * self.re + self.im * self.im).sqrt()
    }
}

/// Inverse DFT (with `1/n`) of a real spectrum by the textbook double loop.
fn naive_idft(spec: &[f64]) -> Vec<C> {
    let n = spec.len();
    let table: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / n as f64;
            (a.cos(), a.sin())
        })
        .collect();
    (0..n)
        .map(|t| {
            let mut acc = C::default();
            for (k, &v) in spec.iter().enumerate() {
                if v != 0.0 {
                    let (c, s) = table[(k * t) % n];
                    acc.re += v * c;
                    acc.im += v * s;
                }
            }
            C {
                re: acc.re / n as f64,
                im: acc.im / n as f64,
            }
        })
        .collect()
}

/// Non-negligible taps `(offset, value)` of `step · h[step · m]`.
fn coarse_taps(h: &[C], step: usize) -> Vec<(usize, C)> {
    let m = h.len() / step;
    let peak = h.iter().map(|z| z.abs()).fold(0.0, f64::max);
    (0..m)
        .map(|i| {
            let z = h[i * step];
            (
                i,
                C {
                    re: z.re * step as f64,
                    im: z.im * step as f64,
                },
            )
        })
        .filter(|(_, z)| z.abs() > peak * NEGLIGIBLE * step as f64)
        .collect()
}

/// `Σ_s u[(t − s) mod n] · h[s]`.
fn circ(u: &[f64], taps: &[(usize, C)], t: usize) -> C {
    let n = u.len();
    let mut acc = C::default();
    for &(s, h) in taps {
        let v = u[(t + n - s % n) % n];
        acc.re += v * h.re;
        acc.im += v * h.im;
    }
    acc
}

/// Reflection about the end samples, written independently of the library.
fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    loop {
        if i < 0 {
            i = -i;
        } else if i >= n {
            i = 2 * (n - 1) - i;
        } else {
            return i as usize;
        }
    }
}

/// Paths of a 1D transform by nested loops over increasing indices.
pub fn enumerate_paths_1d_brute(j: u32, q: u32, order: u32) -> Vec<Vec<u32>> {
    let n = j * q;
    let mut out = vec![vec![]];
    for a in 0..n {
        out.push(vec![a]);
    }
    if order >= 2 {
        for a in 0..n {
            for b in 0..n {
                if b > a {
                    out.push(vec![a, b]);
                }
            }
        }
    }
    if order >= 3 {
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    out.push(vec![a, b, c]);
                }
            }
        }
    }
    out
}

/// Direct evaluation of the 1D transform with the library's discretization:
/// identical padding, per-stage sampling steps and output frames.
pub fn direct_scatter_1d(
    signal: &[f64],
    config: &ScatteringConfig1D,
) -> Result<ScatteringOutput1D, OracleError> {
    let n = signal.len();
    if n > BUDGET.max_signal_length {
        return Err(OracleError::OverBudget(format!("{n} samples")));
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(OracleError::NonFinite("signal".into()));
    }
    let big_j = config.j as usize;
    if n < 1 << big_j {
        return Err(OracleError::Invalid("signal shorter than 2^J".into()));
    }
    let mut padded = 1;
    while padded < 2 * n || padded < 1 << big_j {
        padded *= 2;
    }
    let left = (padded - n) / 2 / (1 << big_j) * (1 << big_j);
    let x: Vec<f64> = (0..padded)
        .map(|i| signal[mirror(i as isize - left as isize, n)])
        .collect();

    let bank = build_filterbank_1d(config.j, config.q, padded)
        .map_err(|e| OracleError::Invalid(e.to_string()))?;
    let psi: Vec<Vec<C>> = bank.wavelets.iter().map(|w| naive_idft(w)).collect();
    let phi = naive_idft(&bank.lowpass);

    let os = config.oversampling as usize;
    let hop_exp = big_j - os;
    let level = |j: u32| ((j / config.q) as usize).saturating_sub(os);
    let frames = n.div_ceil(1 << hop_exp);

    let average = |u: &[f64], k: usize| -> Vec<f64> {
        let taps = coarse_taps(&phi, 1 << k);
        (0..frames)
            .map(|f| circ(u, &taps, (left >> k) + f * (1 << (hop_exp - k))).re)
            .collect()
    };
    // |u ∗ ψ_j| where u lives at step 2^a; result at step 2^b.
    let propagate = |u: &[f64], a: usize, j: u32| -> (Vec<f64>, usize) {
        let b = level(j);
        let taps = coarse_taps(&psi[j as usize], 1 << a);
        let m = padded >> b;
        let v = (0..m)
            .map(|i| circ(u, &taps, i << (b - a)).abs())
            .collect();
        (v, b)
    };

    let paths = enumerate_paths_1d_brute(config.j, config.q, config.order);
    let mut rows = Vec::with_capacity(paths.len());
    let mut memo: std::collections::HashMap<Vec<u32>, (Vec<f64>, usize)> = Default::default();
    memo.insert(vec![], (x, 0));
    for p in &paths {
        if !p.is_empty() {
            let parent = &p[..p.len() - 1];
            let (u, a) = memo.get(parent).expect("parents precede children");
            let next = propagate(u, *a, *p.last().unwrap());
            memo.insert(p.clone(), next);
        }
        let (u, k) = &memo[p];
        rows.push(average(u, *k));
    }

    let mut order: Vec<usize> = (0..paths.len()).collect();
    order.sort_by(|&a, &b| (paths[a].len(), &paths[a]).cmp(&(paths[b].len(), &paths[b])));
    Ok(ScatteringOutput1D {
        coefficients: order.iter().flat_map(|&i| rows[i].clone()).collect(),
        num_paths: paths.len(),
        num_frames: frames,
        paths: order.iter().map(|&i| ScatteringPath::scales(paths[i].clone())).collect(),
        frame_hop: 1 << hop_exp,
        signal_length: n,
    })
}

/// Paths of a 2D transform by nested loops.
pub fn enumerate_paths_2d_brute(j: u32, l: u32, order: u32) -> Vec<Vec<(u32, u32)>> {
    let singles: Vec<(u32, u32)> = (0..j).flat_map(|a| (0..l).map(move |b| (a, b))).collect();
    let mut out = vec![vec![]];
    out.extend(singles.iter().map(|&s| vec![s]));
    if order >= 2 {
        for &a in &singles {
            for &b in &singles {
                if b.0 > a.0 {
                    out.push(vec![a, b]);
                }
            }
        }
    }
    if order >= 3 {
        for &a in &singles {
            for &b in &singles {
                for &c in &singles {
                    if b.0 > a.0 && c.0 > b.0 {
                        out.push(vec![a, b, c]);
                    }
                }
            }
        }
    }
    out
}

/// Separable textbook inverse DFT (with `1/(rows·cols)`).
fn naive_idft_2d(spec: &[f64], rows: usize, cols: usize) -> Vec<C> {
    let table = |n: usize| -> Vec<(f64, f64)> {
        (0..n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                (a.cos(), a.sin())
            })
            .collect()
    };
    let (tr, tc) = (table(rows), table(cols));
    let mut tmp = vec![C::default(); rows * cols];
    for y in 0..rows {
        for x in 0..cols {
            let mut acc = C::default();
            for kx in 0..cols {
                let v = spec[y * cols + kx];
                if v != 0.0 {
                    let (c, s) = tc[(kx * x) % cols];
                    acc.re += v * c;
                    acc.im += v * s;
                }
            }
            tmp[y * cols + x] = acc;
        }
    }
    let s = (rows * cols) as f64;
    let mut out = vec![C::default(); rows * cols];
    for x in 0..cols {
        for y in 0..rows {
            let mut acc = C::default();
            for ky in 0..rows {
                let v = tmp[ky * cols + x];
                let (c, sn) = tr[(ky * y) % rows];
                acc.re += v.re * c - v.im * sn;
                acc.im += v.re * sn + v.im * c;
            }
            out[y * cols + x] = C {
                re: acc.re / s,
                im: acc.im / s,
            };
        }
    }
    out
}

struct Taps2 {
    taps: Vec<(usize, usize, C)>,
}

fn coarse_taps_2d(h: &[C], rows: usize, cols: usize, step: usize) -> Taps2 {
    let (mr, mc) = (rows / step, cols / step);
    let peak = h.iter().map(|z| z.abs()).fold(0.0, f64::max);
    let w = (step * step) as f64;
    let mut taps = Vec::new();
    for y in 0..mr {
        for x in 0..mc {
            let z = h[(y * step) * cols + x * step];
            if z.abs() > peak * NEGLIGIBLE {
                taps.push((
                    y,
                    x,
                    C {
                        re: z.re * w,
                        im: z.im * w,
                    },
                ));
            }
        }
    }
    Taps2 { taps }
}

fn circ_2d(u: &[f64], rows: usize, cols: usize, f: &Taps2, ty: usize, tx: usize) -> C {
    let mut acc = C::default();
    for &(sy, sx, h) in &f.taps {
        let v = u[((ty + rows - sy) % rows) * cols + (tx + cols - sx) % cols];
        acc.re += v * h.re;
        acc.im += v * h.im;
    }
    acc
}

/// Direct evaluation of the 2D transform (images up to 64×64).
pub fn direct_scatter_2d(
    image: &[f64],
    height: usize,
    width: usize,
    config: &ScatteringConfig2D,
) -> Result<ScatteringOutput2D, OracleError> {
    if height > BUDGET.max_image.0 || width > BUDGET.max_image.1 {
        return Err(OracleError::OverBudget(format!("{height}x{width} image")));
    }
    if image.len() != height * width {
        return Err(OracleError::Invalid("image size mismatch".into()));
    }
    if image.iter().any(|v| !v.is_finite()) {
        return Err(OracleError::NonFinite("image".into()));
    }
    let big_j = config.j as usize;
    let step = 1usize << big_j;
    let pad = |n: usize| {
        let mut p = 1;
        while p < n + 2 * step {
            p *= 2;
        }
        (p, (p - n) / 2 / step * step)
    };
    let (ph, top) = pad(height);
    let (pw, left) = pad(width);
    let mut x = vec![0.0; ph * pw];
    for y in 0..ph {
        for c in 0..pw {
            let sy = mirror(y as isize - top as isize, height);
            let sx = mirror(c as isize - left as isize, width);
            x[y * pw + c] = image[sy * width + sx];
        }
    }
    let bank = build_filterbank_2d(config.j, config.l, ph, pw)
        .map_err(|e| OracleError::Invalid(e.to_string()))?;
    let psi: Vec<Vec<C>> = bank
        .wavelets
        .iter()
        .map(|w| naive_idft_2d(w, ph, pw))
        .collect();
    let phi = naive_idft_2d(&bank.lowpass, ph, pw);
    let (oh, ow) = (height >> big_j, width >> big_j);

    let average = |u: &[f64], k: usize| -> Vec<f64> {
        let taps = coarse_taps_2d(&phi, ph, pw, 1 << k);
        let (r, c) = (ph >> k, pw >> k);
        let s = 1 << (big_j - k);
        let mut v = Vec::with_capacity(oh * ow);
        for a in 0..oh {
            for b in 0..ow {
                let ty = (top >> k) + a * s;
                let tx = (left >> k) + b * s;
                v.push(circ_2d(u, r, c, &taps, ty, tx).re);
            }
        }
        v
    };

    let paths = enumerate_paths_2d_brute(config.j, config.l, config.order);
    let mut memo: std::collections::HashMap<Vec<(u32, u32)>, (Vec<f64>, usize)> =
        Default::default();
    memo.insert(vec![], (x, 0));
    let mut rows = Vec::new();
    for p in &paths {
        if let Some(&(j, l)) = p.last() {
            let (u, a) = &memo[&p[..p.len() - 1]];
            let a = *a;
            let b = j as usize;
            let taps = coarse_taps_2d(&psi[(j * config.l + l) as usize], ph, pw, 1 << a);
            let (r, c) = (ph >> a, pw >> a);
            let (nr, nc) = (ph >> b, pw >> b);
            let s = 1 << (b - a);
            let mut v = vec![0.0; nr * nc];
            for yy in 0..nr {
                for xx in 0..nc {
                    v[yy * nc + xx] = circ_2d(u, r, c, &taps, yy * s, xx * s).abs();
                }
            }
            memo.insert(p.clone(), (v, b));
        }
        let (u, k) = &memo[p];
        rows.push(average(u, *k));
    }
    let mut order: Vec<usize> = (0..paths.len()).collect();
    order.sort_by(|&a, &b| (paths[a].len(), &paths[a]).cmp(&(paths[b].len(), &paths[b])));
    Ok(ScatteringOutput2D {
        tensor: order.iter().flat_map(|&i| rows[i].clone()).collect(),
        channels: paths.len(),
        height: oh,
        width: ow,
        paths: order.iter().map(|&i| ScatteringPath::oriented(&paths[i])).collect(),
        input_shape: (height, width),
    })
}
