use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wstx::classifier::{train, BlockSpec, Example, Labeled, LinearHead, TrainConfig};
use wstx::config::{FrontendKind, FrontendSpec};
use wstx::dataset::{synthesize, SynthesisParams};
use wstx::experiment::Extractor;
use wstx::metrics::{auc, Label, ScoreSet};
use wstx::scattering1d::ScatteringConfig1D;
use wstx::Exec;
use wstx_oracles::fd_gradient;

fn gaussian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut worst = 0.0f64;
    for instance in 0..50 {
        let specs = [
            BlockSpec { width: rng.random_range(1..6), projected: true },
            BlockSpec { width: rng.random_range(1..4), projected: instance % 2 == 0 },
        ];
        let mut head = LinearHead::new(&specs, rng.random_range(1..6), instance);
        let n = rng.random_range(2..12);
        let examples: Vec<Example> = (0..n)
            .map(|_| Example::new(specs.iter().map(|s| gaussian(&mut rng, s.width, 2.0)).collect()))
            .collect();
        let labels: Vec<Label> = (0..n)
            .map(|_| if rng.random_bool(0.5) { Label::Fake } else { Label::Real })
            .collect();
        head.fit_standardization(&examples).unwrap();
        let params = gaussian(&mut rng, head.num_params(), 1.0);
        head.set_params(&params).unwrap();

        let (_, analytic) = head.loss_and_gradient(&examples, &labels).unwrap();
        let numeric = fd_gradient(
            |p| {
                let mut h = head.clone();
                h.set_params(p).unwrap();
                h.loss(&examples, &labels).unwrap()
            },
            &params,
            1e-5,
        )
        .unwrap();
        for (a, b) in analytic.iter().zip(&numeric) {
            let scale = a.abs().max(b.abs());
            if scale > 1e-8 {
                worst = worst.max((a - b).abs() / scale);
            }
        }
    }
    assert!(worst < 1e-4, "max relative error {worst}");
}

fn labeled_cloud(n: usize, seed: u64) -> (Vec<Example>, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = if i % 2 == 0 { Label::Real } else { Label::Fake };
            let shift = if label.is_fake() { 0.8 } else { 0.0 };
            let x = gaussian(&mut rng, 20, 1.0).into_iter().map(|v| v + shift).collect();
            (Example::new(vec![x]), label)
        })
        .unzip()
}

#[test]
fn shuffled_labels_give_chance_auc() {
    let (train_x, mut train_y) = labeled_cloud(500, 1);
    let (dev_x, mut dev_y) = labeled_cloud(500, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    train_y.shuffle(&mut rng);
    dev_y.shuffle(&mut rng);
    let specs = [BlockSpec { width: 20, projected: true }];
    let out = train(
        &specs,
        Labeled { examples: &train_x, labels: &train_y },
        None,
        &TrainConfig { seed: 9, ..TrainConfig::default() },
    )
    .unwrap();
    let scores = dev_x.iter().map(|e| out.head.score(e).unwrap()).collect();
    let a = auc(&ScoreSet::new(scores, dev_y).unwrap()).unwrap();
    assert!((0.4..=0.6).contains(&a), "dev AUC {a}");
}

fn synthetic_examples(spec: FrontendSpec, voices: std::ops::Range<u64>) -> (Vec<Example>, Vec<Label>) {
    let params = SynthesisParams::default();
    let ex = Extractor::new(spec).unwrap();
    let jobs: Vec<(u64, Label)> = voices.flat_map(|i| [(2 * i, Label::Real), (2 * i + 1, Label::Fake)]).collect();
    let xs = Exec::Parallel.map(&jobs, |&(v, l)| ex.example(&synthesize(&params, 7, v, l)).unwrap());
    (xs, jobs.iter().map(|j| j.1).collect())
}

#[test]
fn small_steps_never_raise_the_loss() {
    let (x, y) = synthetic_examples(FrontendSpec::default_for(FrontendKind::Mel), 0..20);
    let specs = [BlockSpec { width: 80, projected: true }];
    let cfg = TrainConfig { learning_rate: 1e-4, seed: 5, ..TrainConfig::default() };
    let out = train(&specs, Labeled { examples: &x, labels: &y }, None, &cfg).unwrap();
    assert_eq!(out.loss_history.len(), 100);
    for (e, w) in out.loss_history.windows(2).enumerate() {
        assert!(w[1] <= w[0], "epoch {}: {} -> {}", e + 2, w[0], w[1]);
    }
    assert!(out.loss_history[99] < out.loss_history[0]);
}

#[test]
fn scaling_weights_keeps_the_ranking() {
    let (x, _) = labeled_cloud(60, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut head = LinearHead::new(&[BlockSpec { width: 20, projected: false }], 144, 0);
    let w = gaussian(&mut rng, 20, 0.3);
    let rank = |h: &LinearHead| {
        let s: Vec<f64> = x.iter().map(|e| h.logit(e).unwrap()).collect();
        let mut idx: Vec<usize> = (0..s.len()).collect();
        idx.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
        idx
    };
    head.set_classifier(w.clone(), 0.1).unwrap();
    let before = rank(&head);
    for c in [1.5, 4.0, 25.0] {
        head.set_classifier(w.iter().map(|v| v * c).collect(), 0.1 * c).unwrap();
        assert_eq!(rank(&head), before, "c={c}");
    }
}

#[test]
fn class_mean_direction_separates_synthetic_clips() {
    let spec = FrontendSpec::Wst1d(ScatteringConfig1D::new(6, 10, 2).unwrap());
    let (fit_x, fit_y) = synthetic_examples(spec, 0..40);
    let (eval_x, eval_y) = synthetic_examples(spec, 40..80);
    let width = fit_x[0].blocks[0].len();
    let mut head = LinearHead::new(&[BlockSpec { width, projected: false }], 144, 0);
    head.fit_standardization(&fit_x).unwrap();

    // Standardized class-mean difference, read back through the head itself.
    let standardized_mean = |fake: bool| -> Vec<f64> {
        let picked: Vec<&Example> = fit_x.iter().zip(&fit_y).filter(|(_, l)| l.is_fake() == fake).map(|(e, _)| e).collect();
        (0..width)
            .map(|d| {
                let mut unit = vec![0.0; width];
                unit[d] = 1.0;
                let mut h = head.clone();
                h.set_classifier(unit, 0.0).unwrap();
                picked.iter().map(|e| h.logit(e).unwrap()).sum::<f64>() / picked.len() as f64
            })
            .collect()
    };
    let (real, fake) = (standardized_mean(false), standardized_mean(true));
    head.set_classifier(fake.iter().zip(&real).map(|(f, r)| f - r).collect(), 0.0).unwrap();

    let scores = eval_x.iter().map(|e| head.score(e).unwrap()).collect();
    let a = auc(&ScoreSet::new(scores, eval_y).unwrap()).unwrap();
    assert!(a > 0.9, "held-out AUC {a}");
}
