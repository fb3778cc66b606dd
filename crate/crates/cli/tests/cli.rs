use std::path::Path;
use std::process::{Command, Output};

use wstx::dataset::write_wav;

fn wstx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wstx"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synthetic_prepare_reports_split_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("corpus");
    let o = wstx(&["prepare", "--synthetic", "10", "--seed", "7", "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("wrote 30 segments"), "{}", stderr(&o));
    assert!(stderr(&o).contains("(train 18, dev 2, test 10)"), "{}", stderr(&o));

    let again = wstx(&["prepare", "--synthetic", "10", "--out", path(&out)]);
    assert_eq!(again.status.code(), Some(2));
    assert!(stderr(&again).contains("--force"));
    let forced = wstx(&["prepare", "--synthetic", "10", "--force", "--out", path(&out)]);
    assert!(forced.status.success(), "{}", stderr(&forced));
}

#[test]
fn empty_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty");
    std::fs::create_dir(&input).unwrap();
    let o = wstx(&["prepare", path(&input), "--out", path(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no usable audio"), "{}", stderr(&o));
}

#[test]
fn directory_prepare_chunks_long_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    for label in ["real", "fake"] {
        std::fs::create_dir_all(input.join(label)).unwrap();
        for i in 0..3 {
            let x: Vec<f64> = (0..168_000).map(|t| 0.1 * ((t * (i + 2)) as f64 * 0.01).sin()).collect();
            write_wav(&input.join(label).join(format!("{i}.wav")), &x, 16_000).unwrap();
        }
    }
    let out = dir.path().join("out");
    let o = wstx(&["prepare", path(&input), "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    // 10.5 s per file gives two segments each.
    let manifest = std::fs::read_to_string(out.join("manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 1 + 6 * 2);
}

#[test]
fn unknown_frontend_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = wstx(&["render", path(&dir.path().join("x.wav")), "--frontend", "bogus", "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    let o = wstx(&["compare", path(&dir.path().join("m.csv")), "--frontends", "mel,bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus"), "{}", stderr(&o));
}

#[test]
fn render_writes_mel_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("seg.wav");
    let x: Vec<f64> = (0..64_000).map(|t| 0.1 * (t as f64 * 0.05).sin()).collect();
    write_wav(&wav, &x, 16_000).unwrap();
    let out = dir.path().join("plots").join("mel.csv");
    let o = wstx(&["render", path(&wav), "--frontend", "mel", "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 80);
    assert!(rows.iter().all(|r| r.split(',').count() == 399));

    let again = wstx(&["render", path(&wav), "--frontend", "mel", "--out", path(&out)]);
    assert_eq!(again.status.code(), Some(2));
}

#[test]
fn compare_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    assert!(wstx(&["prepare", "--synthetic", "10", "--out", path(&corpus)]).status.success());
    let manifest = corpus.join("manifest.csv");
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = wstx(&["compare", path(&manifest), "--frontends", "mel,linear", "--seed", "3", "--out", path(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(out).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    assert_eq!(a, b);
    assert!(String::from_utf8(a).unwrap().starts_with("frontend,params,minDCF"));
}

#[test]
fn compare_writes_run_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    assert!(wstx(&["prepare", "--synthetic", "10", "--out", path(&corpus)]).status.success());
    let manifest = corpus.join("manifest.csv");
    let (runs, table) = (dir.path().join("runs"), dir.path().join("t.csv"));
    let args = ["compare", path(&manifest), "--frontends", "mel", "--artifacts", path(&runs), "--out", path(&table)];
    let o = wstx(&args);
    assert!(o.status.success(), "{}", stderr(&o));

    let scores = std::fs::read_to_string(runs.join("mel_scores.csv")).unwrap();
    assert!(scores.starts_with("id,score,label"));
    assert_eq!(scores.lines().count(), 1 + 10);
    let report = std::fs::read_to_string(runs.join("mel_report.json")).unwrap();
    assert!(report.contains("\"min_dcf\"") && report.contains("\"ci2sigma\""), "{report}");
    let ckpt = wstx::classifier::Checkpoint::read(&runs.join("mel_checkpoint.json")).unwrap();
    assert!(ckpt.head().is_ok());

    let again = wstx(&args);
    assert_eq!(again.status.code(), Some(2));
}
