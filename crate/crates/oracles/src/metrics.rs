//! Detection metrics by exhaustive enumeration.
//!
//! Scores are "higher = more likely fake". A miss is a fake scored below the
//! threshold; a false alarm is a real scored at or above it.

use crate::{OracleError, BUDGET};

fn check(scores: &[f64], is_fake: &[bool]) -> Result<(usize, usize), OracleError> {
    if scores.len() != is_fake.len() {
        return Err(OracleError::Invalid("length mismatch".into()));
    }
    if scores.len() > BUDGET.max_scores {
        return Err(OracleError::OverBudget(format!("{} scores", scores.len())));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(OracleError::NonFinite("score".into()));
    }
    let nf = is_fake.iter().filter(|&&f| f).count();
    let nr = is_fake.len() - nf;
    if nf == 0 || nr == 0 {
        return Err(OracleError::Invalid("both classes required".into()));
    }
    Ok((nf, nr))
}

/// `(P_miss, P_fa)` at threshold `tau`, counting every item.
fn rates(scores: &[f64], is_fake: &[bool], tau: f64, nf: usize, nr: usize) -> (f64, f64) {
    let mut miss = 0;
    let mut fa = 0;
    for (&s, &f) in scores.iter().zip(is_fake) {
        if f && s < tau {
            miss += 1;
        }
        if !f && s >= tau {
            fa += 1;
        }
    }
    (miss as f64 / nf as f64, fa as f64 / nr as f64)
}

/// Minimum of `β·P_miss + P_fa` over `grid_size` evenly spaced thresholds
/// spanning the scores, every midpoint between scores, and ±∞.
pub fn sweep_min_dcf(
    scores: &[f64],
    is_fake: &[bool],
    beta: f64,
    grid_size: usize,
) -> Result<f64, OracleError> {
    let (nf, nr) = check(scores, is_fake)?;
    let lo = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut taus = vec![f64::NEG_INFINITY, f64::INFINITY];
    for i in 0..grid_size {
        taus.push(lo - 1.0 + (hi - lo + 2.0) * i as f64 / (grid_size.max(2) - 1) as f64);
    }
    for &a in scores {
        for &b in scores {
            if a < b {
                taus.push(0.5 * (a + b));
            }
        }
    }
    Ok(taus
        .into_iter()
        .map(|t| {
            let (pm, pf) = rates(scores, is_fake, t, nf, nr);
            beta * pm + pf
        })
        .fold(f64::INFINITY, f64::min))
}

/// Equal error rate of the ROC convex hull: the lowest point where any
/// chord between two achievable operating points meets `P_miss = P_fa`.
pub fn eer_brute(scores: &[f64], is_fake: &[bool]) -> Result<f64, OracleError> {
    let (nf, nr) = check(scores, is_fake)?;
    let mut taus = vec![f64::NEG_INFINITY, f64::INFINITY];
    taus.extend_from_slice(scores);
    let pts: Vec<(f64, f64)> = taus
        .iter()
        .map(|&t| rates(scores, is_fake, t, nf, nr))
        .collect();
    let mut best = f64::INFINITY;
    for &(m1, f1) in &pts {
        for &(m2, f2) in &pts {
            // Point on the chord: (m1 + a(m2−m1), f1 + a(f2−f1)), a ∈ [0, 1].
            let d1 = m1 - f1;
            let d2 = m2 - f2;
            if d1 == 0.0 {
                best = best.min(m1);
            } else if d1 * d2 < 0.0 {
                let a = d1 / (d1 - d2);
                best = best.min(m1 + a * (m2 - m1));
            }
        }
    }
    Ok(best)
}

/// `P(score_fake > score_real)` with ties worth ½, over all pairs.
pub fn auc_pairs(scores: &[f64], is_fake: &[bool]) -> Result<f64, OracleError> {
    let (nf, nr) = check(scores, is_fake)?;
    let mut twice = 0u64;
    for (&a, &fa) in scores.iter().zip(is_fake) {
        for (&b, &fb) in scores.iter().zip(is_fake) {
            if fa && !fb {
                twice += match a.partial_cmp(&b).unwrap() {
                    std::cmp::Ordering::Greater => 2,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => 0,
                };
            }
        }
    }
    Ok(twice as f64 / (2 * nf * nr) as f64)
}
