use std::path::Path;

use wstx::config::{FrontendKind, FrontendSpec, Grid};
use wstx::dataset::make_synthetic_corpus;
use wstx::experiment::{compare, compare_csv, extract_cached, extract_features, sweep, sweep_csv, Corpus, EvalSettings};
use wstx::Exec;

fn corpus(dir: &Path) -> Corpus {
    make_synthetic_corpus(dir, 12, 7, Exec::Parallel).unwrap();
    Corpus::load(&dir.join("manifest.csv"), None).unwrap()
}

fn settings(seed: u64) -> EvalSettings {
    EvalSettings { seed, n_bootstrap: 50, ..EvalSettings::default() }
}

#[test]
fn grid_sweep_has_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path());
    let (cells, warnings) = Grid::parse("J=2,3;Q=1;M=1,2", FrontendKind::Wst1d).unwrap().cells();
    assert!(warnings.is_empty());
    let cells = &cells[..3];
    let rows = sweep(&c, FrontendKind::Wst1d, cells, 0, &settings(1), Exec::Parallel, None);
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.report.is_some() && r.note.is_empty()));
    let dcf: Vec<f64> = rows.iter().map(|r| r.report.as_ref().unwrap().min_dcf.value).collect();
    assert!(dcf.windows(2).all(|w| w[0] <= w[1]));
    let csv = sweep_csv(FrontendKind::Wst1d, &rows);
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("J,Q,M,minDCF,"));
}

#[test]
fn comparison_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path());
    let specs = [FrontendSpec::Mel, FrontendSpec::Linear];
    let a = compare_csv(&compare(&c, &specs, &settings(3), Exec::Parallel, None).unwrap());
    let b = compare_csv(&compare(&c, &specs, &settings(3), Exec::Sequential, None).unwrap());
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 3);
}

#[test]
fn cached_features_equal_fresh_ones() {
    let dir = tempfile::tempdir().unwrap();
    let cache = tempfile::tempdir().unwrap();
    let c = corpus(dir.path());
    let spec = FrontendSpec::default_for(FrontendKind::Wstx2);
    let fresh = extract_features(&c, &spec, Exec::Parallel).unwrap();
    let first = extract_cached(&c, &spec, Exec::Parallel, Some(cache.path())).unwrap();
    let second = extract_cached(&c, &spec, Exec::Parallel, Some(cache.path())).unwrap();
    assert_eq!(fresh, first);
    assert_eq!(first, second);
}
