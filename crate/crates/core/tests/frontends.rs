use wstx::config::{FrontendKind, FrontendSpec};
use wstx::dataset::{SyntheticVoice, SynthesisParams};
use wstx::experiment::Extractor;
use wstx::frontends::{filter_centers, FilterSpacing};
use wstx::scattering1d::{Scattering1D, ScatteringConfig1D, ScatteringOutput1D};

fn relative_rows(a: &ScatteringOutput1D, b: &ScatteringOutput1D, order: u32) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for r in a.order_rows(order) {
        for (u, v) in a.row(r).iter().zip(b.row(r)) {
            num += (u - v) * (u - v);
            den += u * u;
        }
    }
    (num / den).sqrt()
}

#[test]
fn modulation_shows_up_in_second_order() {
    // Modulation only: no phase resets.
    let params = SynthesisParams { reset_rate: (0.0, 0.0), ..SynthesisParams::default() };
    let t = Scattering1D::new(ScatteringConfig1D::new(2, 10, 2).unwrap(), 64_000).unwrap();
    for index in 0..4 {
        let voice = SyntheticVoice::draw(&params, 7, index);
        let real = t.scatter(&voice.render(false)).unwrap();
        let modulated = t.scatter(&voice.render(true)).unwrap();
        let (d1, d2) = (relative_rows(&real, &modulated, 1), relative_rows(&real, &modulated, 2));
        assert!(d2 > d1, "voice {index}: order 1 {d1}, order 2 {d2}");
    }
}

#[test]
fn render_blocks_match_feature_shapes() {
    let audio: Vec<f64> = (0..64_000).map(|i| 0.1 * (i as f64 * 0.3).sin()).collect();
    let mel = Extractor::new(FrontendSpec::default_for(FrontendKind::Mel)).unwrap();
    let blocks = mel.render(&audio).unwrap();
    assert_eq!(blocks.len(), 1);
    assert_eq!((blocks[0].1, blocks[0].2), (80, 399));

    let wst = Extractor::new(FrontendSpec::default_for(FrontendKind::Wst1d)).unwrap();
    let shapes: Vec<(String, usize, usize)> = wst.render(&audio).unwrap().into_iter().map(|(n, r, c, _)| (n, r, c)).collect();
    let frames = 64_000 / 4;
    assert_eq!(
        shapes,
        vec![("order0".into(), 1, frames), ("order1".into(), 20, frames), ("order2".into(), 190, frames)]
    );

    let x2 = Extractor::new(FrontendSpec::default_for(FrontendKind::Wstx2)).unwrap();
    let rows: Vec<usize> = x2.render(&audio).unwrap().iter().map(|b| b.1).collect();
    assert_eq!(rows, vec![20, 20 * 20, 20 * 100]);
}

#[test]
fn tone_energy_peaks_at_nearest_filter() {
    let audio: Vec<f64> = (0..64_000)
        .map(|i| 0.1 * (std::f64::consts::TAU * 1000.0 * i as f64 / 16_000.0).sin())
        .collect();
    for (spec, spacing) in [(FrontendSpec::Mel, FilterSpacing::Mel), (FrontendSpec::Linear, FilterSpacing::Linear)] {
        let mean = Extractor::new(spec).unwrap().map(&audio).unwrap().mean_frame();
        let peak = (0..mean.len()).max_by(|&a, &b| mean[a].total_cmp(&mean[b])).unwrap();
        let centres = filter_centers(spacing, 80);
        let nearest = (0..80)
            .min_by(|&a, &b| (centres[a] - 1000.0).abs().total_cmp(&(centres[b] - 1000.0).abs()))
            .unwrap();
        assert_eq!(peak, nearest, "{spacing:?}");
    }
}
