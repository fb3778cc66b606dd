//! Brute-force reference implementations for the wstx test suites.
//!
//! Nothing here is fast. Every routine refuses inputs beyond [`OracleBudget`]
//! so a mistaken call cannot stall a test run. The only things shared with
//! the production crate are the data types and the filter spectra (the
//! filters *define* the transform; everything computed from them is redone
//! here with explicit sums).

pub mod metrics;
pub mod scatter;

pub use metrics::{auc_pairs, eer_brute, sweep_min_dcf};
pub use scatter::{direct_scatter_1d, direct_scatter_2d, enumerate_paths_1d_brute, enumerate_paths_2d_brute};

/// Input size limits for the quadratic-cost oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_signal_length: usize,
    pub max_image: (usize, usize),
    pub max_scores: usize,
}

pub const BUDGET: OracleBudget = OracleBudget {
    max_signal_length: 1024,
    max_image: (64, 64),
    max_scores: 200,
};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum OracleError {
    #[error("input exceeds the oracle budget: {0}")]
    OverBudget(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// Central-difference gradient of `loss` at `params`.
pub fn fd_gradient(
    loss: impl Fn(&[f64]) -> f64,
    params: &[f64],
    eps: f64,
) -> Result<Vec<f64>, OracleError> {
    let mut p = params.to_vec();
    let mut g = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + eps;
        let up = loss(&p);
        p[i] = orig - eps;
        let down = loss(&p);
        p[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(OracleError::NonFinite(format!("loss at coordinate {i}")));
        }
        g.push((up - down) / (2.0 * eps));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient() {
        let w = [0.3, -1.2, 4.0, 0.0];
        let g = fd_gradient(|p| 0.5 * p.iter().map(|v| v * v).sum::<f64>(), &w, 1e-5).unwrap();
        for (a, b) in g.iter().zip(&w) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn refuses_non_finite_loss() {
        let r = fd_gradient(|p| if p[0] > 0.0 { f64::NAN } else { 0.0 }, &[0.0], 1e-3);
        assert!(matches!(r, Err(OracleError::NonFinite(_))));
    }

    #[test]
    fn second_order_accuracy() {
        // Error of central differences shrinks ~4x when eps halves.
        let f = |p: &[f64]| (p[0] * 1.3).sin() * p[1].exp();
        let x = [0.4, 0.2];
        let exact = [1.3 * (0.52f64).cos() * 0.2f64.exp(), (0.52f64).sin() * 0.2f64.exp()];
        let err = |eps| {
            let g = fd_gradient(f, &x, eps).unwrap();
            (g[0] - exact[0]).abs().max((g[1] - exact[1]).abs())
        };
        let ratio = err(1e-2) / err(5e-3);
        assert!((2.5..=6.0).contains(&ratio), "ratio {ratio}");
    }
}
