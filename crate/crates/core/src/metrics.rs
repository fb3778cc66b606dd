//! Spoofing-countermeasure metrics: minDCF, EER, F1, AUC and bootstrap
//! intervals.
//!
//! Score polarity is fixed everywhere: higher means "more likely fake".
//! A *miss* is a fake scored below the threshold, a *false alarm* is a real
//! scored at or above it.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Real,
    Fake,
}

impl Label {
    pub fn is_fake(self) -> bool {
        self == Label::Fake
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Real => "real",
            Label::Fake => "fake",
        }
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(Label::Real),
            "fake" => Ok(Label::Fake),
            other => Err(Error::Format(format!(
                "label must be `real` or `fake`, got `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Paired scores and ground truth.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreSet {
    pub scores: Vec<f64>,
    pub labels: Vec<Label>,
}

impl ScoreSet {
    pub fn new(scores: Vec<f64>, labels: Vec<Label>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::Metric(format!(
                "{} scores but {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::Metric(format!("score {i} is not finite")));
        }
        Ok(ScoreSet { scores, labels })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// `(fakes, reals)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let f = self.labels.iter().filter(|l| l.is_fake()).count();
        (f, self.labels.len() - f)
    }

    fn subset(&self, idx: &[usize]) -> ScoreSet {
        ScoreSet {
            scores: idx.iter().map(|&i| self.scores[i]).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Cost model of the detection cost function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DcfParams {
    pub c_miss: f64,
    pub c_fa: f64,
    pub pi_spoof: f64,
}

impl Default for DcfParams {
    fn default() -> Self {
        DcfParams {
            c_miss: 1.0,
            c_fa: 10.0,
            pi_spoof: 0.05,
        }
    }
}

impl DcfParams {
    /// `β = (C_miss / C_fa) · (1 − π) / π`.
    pub fn beta(&self) -> f64 {
        (self.c_miss * (1.0 - self.pi_spoof)) / (self.c_fa * self.pi_spoof)
    }
}

/// A metric value together with the threshold that attains it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub value: f64,
    pub threshold: f64,
}

/// Score-sorted groups of tied scores with per-class counts.
struct Groups {
    /// `(score, fakes, reals)` ascending by score.
    groups: Vec<(f64, usize, usize)>,
    fakes: usize,
    reals: usize,
}

impl Groups {
    fn new(set: &ScoreSet) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::Metric("empty score set".into()));
        }
        let (fakes, reals) = set.class_counts();
        if fakes == 0 || reals == 0 {
            return Err(Error::Metric(
                "both real and fake items are required".into(),
            ));
        }
        let mut order: Vec<usize> = (0..set.len()).collect();
        order.sort_by(|&a, &b| set.scores[a].total_cmp(&set.scores[b]));
        let mut groups: Vec<(f64, usize, usize)> = Vec::new();
        for i in order {
            let s = set.scores[i];
            let fake = set.labels[i].is_fake() as usize;
            match groups.last_mut() {
                Some(g) if g.0 == s => {
                    g.1 += fake;
                    g.2 += 1 - fake;
                }
                _ => groups.push((s, fake, 1 - fake)),
            }
        }
        Ok(Groups {
            groups,
            fakes,
            reals,
        })
    }

    /// Every candidate threshold with its `(misses, false alarms)`:
    /// −∞, midpoints between consecutive distinct scores, +∞.
    fn operating_counts(&self) -> Vec<(f64, usize, usize)> {
        let mut out = Vec::with_capacity(self.groups.len() + 1);
        let mut miss = 0;
        let mut fa = self.reals;
        out.push((f64::NEG_INFINITY, miss, fa));
        for (i, g) in self.groups.iter().enumerate() {
            miss += g.1;
            fa -= g.2;
            let tau = match self.groups.get(i + 1) {
                Some(next) => {
                    let mid = 0.5 * (g.0 + next.0);
                    // Adjacent floats have no representable midpoint.
                    if mid > g.0 {
                        mid
                    } else {
                        next.0
                    }
                }
                None => f64::INFINITY,
            };
            out.push((tau, miss, fa));
        }
        out
    }
}

/// Minimum of `β·P_miss(τ) + P_fa(τ)` over all thresholds.
pub fn min_dcf(set: &ScoreSet, params: &DcfParams) -> Result<OperatingPoint> {
    let g = Groups::new(set)?;
    let beta = params.beta();
    let mut best = OperatingPoint {
        value: f64::INFINITY,
        threshold: f64::NAN,
    };
    for (tau, miss, fa) in g.operating_counts() {
        let pm = miss as f64 / g.fakes as f64;
        let pf = fa as f64 / g.reals as f64;
        let v = beta * pm + pf;
        if v < best.value {
            best = OperatingPoint {
                value: v,
                threshold: tau,
            };
        }
    }
    Ok(best)
}

/// Equal error rate on the ROC convex hull.
///
/// The returned threshold interpolates linearly between the thresholds of
/// the two hull vertices that bracket the crossing (or is the finite one of
/// the two when the other is infinite).
pub fn eer(set: &ScoreSet) -> Result<OperatingPoint> {
    let g = Groups::new(set)?;
    // (P_miss, P_fa, τ) with P_miss non-decreasing, P_fa non-increasing.
    let pts: Vec<(f64, f64, f64)> = g
        .operating_counts()
        .into_iter()
        .map(|(t, m, f)| (m as f64 / g.fakes as f64, f as f64 / g.reals as f64, t))
        .collect();
    let mut hull: Vec<(f64, f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        let d1 = a.0 - a.1;
        let d2 = b.0 - b.1;
        if d1 == 0.0 {
            return Ok(OperatingPoint {
                value: a.0,
                threshold: a.2,
            });
        }
        if d1 < 0.0 && d2 >= 0.0 {
            let alpha = d1 / (d1 - d2);
            let threshold = match (a.2.is_finite(), b.2.is_finite()) {
                (true, true) => a.2 + alpha * (b.2 - a.2),
                (true, false) => a.2,
                (false, true) => b.2,
                (false, false) => 0.0,
            };
            return Ok(OperatingPoint {
                value: a.0 + alpha * (b.0 - a.0),
                threshold,
            });
        }
    }
    unreachable!("the hull runs from (0, 1) to (1, 0) and must cross the diagonal")
}

/// `P(score_fake > score_real)`, ties counted ½.
pub fn auc(set: &ScoreSet) -> Result<f64> {
    let g = Groups::new(set)?;
    let mut reals_below = 0u64;
    let mut twice = 0u64;
    for &(_, f, r) in &g.groups {
        twice += f as u64 * (2 * reals_below + r as u64);
        reals_below += r as u64;
    }
    Ok(twice as f64 / (2 * g.fakes * g.reals) as f64)
}

/// F1 of the fake class when items scoring at or above `threshold` are
/// flagged as fake. Zero when nothing is flagged and nothing is fake.
pub fn f1(set: &ScoreSet, threshold: f64) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::Metric("empty score set".into()));
    }
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&s, &l) in set.scores.iter().zip(&set.labels) {
        match (s >= threshold, l.is_fake()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    let denom = 2 * tp + fp + fneg;
    Ok(if denom == 0 || tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    })
}

/// Point estimate with a ±2σ bootstrap half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricCi {
    pub value: f64,
    pub ci2sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub c_miss: f64,
    pub c_fa: f64,
    pub pi_spoof: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub min_dcf: MetricCi,
    pub eer: MetricCi,
    pub f1: MetricCi,
    pub auc: MetricCi,
    pub params: ReportParams,
    pub n_bootstrap: usize,
    pub seed: u64,
    pub f1_threshold: f64,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }
}

/// Threshold on `p̂` used for F1 unless told otherwise.
pub const DEFAULT_F1_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy)]
pub struct BootstrapOptions {
    pub n: usize,
    pub seed: u64,
    pub f1_threshold: f64,
    pub exec: Exec,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions {
            n: 1000,
            seed: 0,
            f1_threshold: DEFAULT_F1_THRESHOLD,
            exec: Exec::default(),
        }
    }
}

/// Smallest score set accepted by [`bootstrap`].
pub const MIN_BOOTSTRAP_ITEMS: usize = 10;

/// `n` resamples of `set` with the given seed; see [`bootstrap_with`].
pub fn bootstrap(set: &ScoreSet, params: &DcfParams, n: usize, seed: u64) -> Result<EvalReport> {
    bootstrap_with(
        set,
        params,
        &BootstrapOptions {
            n,
            seed,
            ..Default::default()
        },
    )
}

/// Point estimates on the full set and `2·std` over resamples drawn with
/// replacement. Resamples missing a class are redrawn. Resample `i` uses its
/// own ChaCha stream, so the report is identical under any execution policy.
pub fn bootstrap_with(
    set: &ScoreSet,
    params: &DcfParams,
    opts: &BootstrapOptions,
) -> Result<EvalReport> {
    if set.len() < MIN_BOOTSTRAP_ITEMS {
        return Err(Error::Metric(format!(
            "bootstrap needs at least {MIN_BOOTSTRAP_ITEMS} items, got {}",
            set.len()
        )));
    }
    if opts.n < 2 {
        return Err(Error::Metric("bootstrap needs at least 2 resamples".into()));
    }
    let point = all_metrics(set, params, opts.f1_threshold)?;
    let m = set.len();
    let draws = opts.exec.map_range(opts.n, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(i as u64);
        loop {
            let idx: Vec<usize> = (0..m).map(|_| rng.random_range(0..m)).collect();
            let sub = set.subset(&idx);
            let (f, r) = sub.class_counts();
            if f > 0 && r > 0 {
                return all_metrics(&sub, params, opts.f1_threshold)
                    .expect("resample has both classes");
            }
        }
    });
    let spread = |k: usize| {
        let vals: Vec<f64> = draws.iter().map(|d| d[k]).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
        MetricCi {
            value: point[k],
            ci2sigma: 2.0 * var.sqrt(),
        }
    };
    Ok(EvalReport {
        min_dcf: spread(0),
        eer: spread(1),
        f1: spread(2),
        auc: spread(3),
        params: ReportParams {
            c_miss: params.c_miss,
            c_fa: params.c_fa,
            pi_spoof: params.pi_spoof,
            beta: params.beta(),
        },
        n_bootstrap: opts.n,
        seed: opts.seed,
        f1_threshold: opts.f1_threshold,
    })
}

fn all_metrics(set: &ScoreSet, params: &DcfParams, f1_threshold: f64) -> Result<[f64; 4]> {
    Ok([
        min_dcf(set, params)?.value,
        eer(set)?.value,
        f1(set, f1_threshold)?,
        auc(set)?,
    ])
}

#[derive(Debug, Serialize, Deserialize)]
struct ScoreRow {
    id: String,
    score: f64,
    label: Label,
}

/// Reads an `id,score,label` CSV.
pub fn read_scores(path: &Path) -> Result<(Vec<String>, ScoreSet)> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["id", "score", "label"] {
        return Err(Error::Format(format!(
            "{}: expected header `id,score,label`",
            path.display()
        )));
    }
    let mut ids = Vec::new();
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for row in rdr.deserialize() {
        let row: ScoreRow = row?;
        ids.push(row.id);
        scores.push(row.score);
        labels.push(row.label);
    }
    Ok((ids, ScoreSet::new(scores, labels)?))
}

/// Writes an `id,score,label` CSV.
pub fn write_scores(path: &Path, ids: &[String], set: &ScoreSet) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for ((id, &score), &label) in ids.iter().zip(&set.scores).zip(&set.labels) {
        w.serialize(ScoreRow {
            id: id.clone(),
            score,
            label,
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Fake, Real};

    fn set(fake: &[f64], real: &[f64]) -> ScoreSet {
        let mut s = fake.to_vec();
        s.extend_from_slice(real);
        let mut l = vec![Fake; fake.len()];
        l.extend(vec![Real; real.len()]);
        ScoreSet::new(s, l).unwrap()
    }

    #[test]
    fn beta_default() {
        assert_eq!(DcfParams::default().beta(), 1.9);
    }

    #[test]
    fn separated_scores() {
        let s = set(&[0.9, 0.8], &[0.2, 0.1]);
        assert_eq!(min_dcf(&s, &DcfParams::default()).unwrap().value, 0.0);
        assert_eq!(eer(&s).unwrap().value, 0.0);
        assert_eq!(auc(&s).unwrap(), 1.0);
        assert_eq!(f1(&s, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn tied_scores() {
        let s = set(&[0.3; 3], &[0.3; 4]);
        assert_eq!(eer(&s).unwrap().value, 0.5);
        assert_eq!(auc(&s).unwrap(), 0.5);
    }

    #[test]
    fn small_examples() {
        let s = set(&[0.9, 0.4], &[0.6, 0.1]);
        assert_eq!(auc(&s).unwrap(), 0.75);
        // Candidates: −∞ → 1, 0.25 → 0.5, 0.5 → 0.95+0.5, 0.75 → 0.95, +∞ → 1.9.
        let m = min_dcf(&s, &DcfParams::default()).unwrap();
        assert!((m.value - 0.5).abs() < 1e-15);
        assert_eq!(m.threshold, 0.25);
        let e = eer(&set(&[0.8, 0.3], &[0.7, 0.2])).unwrap();
        assert!((e.value - 0.25).abs() < 1e-15);
    }

    #[test]
    fn f1_conventions() {
        let s = set(&[0.9, 0.8, 0.1], &[0.7, 0.2]);
        // TP=2, FP=1, FN=1.
        assert!((f1(&s, 0.5).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f1(&s, 2.0).unwrap(), 0.0);
        assert!(f1(&ScoreSet::default(), 0.5).is_err());
    }

    #[test]
    fn single_class_is_an_error() {
        let s = set(&[0.1, 0.2], &[]);
        assert!(matches!(eer(&s), Err(Error::Metric(_))));
        assert!(matches!(auc(&s), Err(Error::Metric(_))));
        assert!(matches!(min_dcf(&s, &DcfParams::default()), Err(Error::Metric(_))));
    }

    #[test]
    fn bootstrap_deterministic_and_degenerate() {
        let s = set(&[5.0; 8], &[-5.0; 8]);
        let a = bootstrap(&s, &DcfParams::default(), 200, 3).unwrap();
        let b = bootstrap(&s, &DcfParams::default(), 200, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.eer.ci2sigma < 1e-9 && a.min_dcf.ci2sigma < 1e-9);
        assert_eq!(a.auc.ci2sigma, 0.0);
        assert_eq!(a.f1.ci2sigma, 0.0);
        let seq = bootstrap_with(
            &s,
            &DcfParams::default(),
            &BootstrapOptions {
                n: 200,
                seed: 3,
                exec: Exec::Sequential,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(a, seq);
        assert!(bootstrap(&set(&[1.0; 3], &[0.0; 3]), &DcfParams::default(), 10, 0).is_err());
    }

    #[test]
    fn report_json_shape() {
        let s = set(&[0.9, 0.6, 0.7, 0.3, 0.8], &[0.1, 0.4, 0.2, 0.65, 0.5]);
        let r = bootstrap(&s, &DcfParams::default(), 50, 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for k in ["min_dcf", "eer", "f1", "auc"] {
            assert!(v[k]["value"].is_number() && v[k]["ci2sigma"].as_f64().unwrap() >= 0.0);
        }
        assert_eq!(v["params"]["beta"], 1.9);
        assert_eq!(v["n_bootstrap"], 50);
        assert_eq!(v["seed"], 1);
    }

    #[test]
    fn score_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let s = set(&[0.25, 1.0 / 3.0], &[0.1]);
        let ids = vec!["a".to_string(), "b".into(), "c".into()];
        write_scores(&p, &ids, &s).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("id,score,label\n"));
        let (ids2, s2) = read_scores(&p).unwrap();
        assert_eq!(ids, ids2);
        assert_eq!(s, s2);
    }
}
