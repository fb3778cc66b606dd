use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wstx::metrics::{auc, eer, min_dcf, DcfParams, Label, ScoreSet};
use wstx_oracles::{auc_pairs, eer_brute, sweep_min_dcf};

fn random_set(rng: &mut ChaCha8Rng) -> ScoreSet {
    let n = rng.random_range(2..=50);
    let levels = rng.random_range(2..64);
    let mut labels: Vec<Label> = (0..n)
        .map(|_| if rng.random_bool(0.5) { Label::Fake } else { Label::Real })
        .collect();
    labels[0] = Label::Fake;
    labels[1] = Label::Real;
    // Dyadic scores: ties are common and every midpoint is exact.
    let scores = labels
        .iter()
        .map(|l| {
            let base = rng.random_range(0..levels) as f64 / 64.0;
            base + if l.is_fake() { 0.25 } else { 0.0 }
        })
        .collect();
    ScoreSet::new(scores, labels).unwrap()
}

#[test]
fn metrics_agree_with_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let params = DcfParams::default();
    for _ in 0..1000 {
        let s = random_set(&mut rng);
        let fake: Vec<bool> = s.labels.iter().map(|l| l.is_fake()).collect();
        let d = min_dcf(&s, &params).unwrap().value;
        let d_ref = sweep_min_dcf(&s.scores, &fake, params.beta(), 200).unwrap();
        assert!((d - d_ref).abs() <= 1e-12, "{d} vs {d_ref}");
        let e = eer(&s).unwrap().value;
        let e_ref = eer_brute(&s.scores, &fake).unwrap();
        assert!((e - e_ref).abs() <= 1e-9, "{e} vs {e_ref}");
        assert_eq!(auc(&s).unwrap(), auc_pairs(&s.scores, &fake).unwrap());
    }
}

#[test]
fn monotone_transforms_leave_rank_metrics_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let s = random_set(&mut rng);
        let t = ScoreSet::new(s.scores.iter().map(|v| (3.0 * v).exp() - 7.0).collect(), s.labels.clone()).unwrap();
        let p = DcfParams::default();
        assert_eq!(min_dcf(&s, &p).unwrap().value, min_dcf(&t, &p).unwrap().value);
        assert_eq!(eer(&s).unwrap().value, eer(&t).unwrap().value);
        assert_eq!(auc(&s).unwrap(), auc(&t).unwrap());
        let d = min_dcf(&s, &p).unwrap().value;
        assert!(d <= p.beta().min(1.0) + 1e-12);
    }
}
