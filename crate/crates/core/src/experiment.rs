//! Corpus-level feature extraction, train/evaluate runs, parameter sweeps and
//! front-end comparisons.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::{train, BlockSpec, Example, Labeled, TrainConfig, TrainOutcome};
use crate::config::{cell_spec, Cell, FrontendKind, FrontendSpec, RunConfig};
use crate::dataset::{read_wav, resample, Manifest, Split, TARGET_RATE};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::frontends::{
    wst1d_standalone_features, wstx2_pooled, CqFrontend, FeatureMap, FilterSpacing, StftFrontend, NUM_FILTERS,
    NUM_FRAMES, SEGMENT_SAMPLES,
};
use crate::metrics::{bootstrap_with, BootstrapOptions, DcfParams, EvalReport, Label, ScoreSet};
use crate::scattering1d::Scattering1D;
use crate::scattering2d::Scattering2D;
use crate::tensor::{read_tensor, write_tensor, Sidecar, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    /// Path as written in the manifest.
    pub id: String,
    pub path: PathBuf,
    pub label: Label,
    pub split: Split,
}

/// Every labeled segment of a run, in manifest order (test entries last).
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub items: Vec<Item>,
}

impl Corpus {
    /// Reads `manifest`; test entries come from it or, if it has none, from
    /// `test_manifest` (default: `test_manifest.csv` beside the manifest).
    pub fn load(manifest: &Path, test_manifest: Option<&Path>) -> Result<Self> {
        let m = Manifest::read(manifest)?;
        let mut items = Vec::new();
        let mut push = |m: &Manifest| {
            for e in &m.entries {
                items.push(Item {
                    id: e.path.clone(),
                    path: m.resolve(e),
                    label: e.label,
                    split: e.split,
                });
            }
        };
        push(&m);
        if m.count(Split::Test) == 0 {
            let sibling = manifest.with_file_name("test_manifest.csv");
            let path = test_manifest.map(Path::to_path_buf).or_else(|| sibling.exists().then_some(sibling));
            if let Some(p) = path {
                push(&Manifest::read(&p)?);
            }
        }
        Ok(Corpus { items })
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.items.len()).filter(|&i| self.items[i].split == split).collect()
    }
}

/// Reads one 4 s segment, resampling to 16 kHz if needed.
pub fn load_segment(path: &Path) -> Result<Vec<f64>> {
    let (audio, rate) = read_wav(path)?;
    let audio = resample(&audio, rate, TARGET_RATE)?;
    if audio.len() != SEGMENT_SAMPLES {
        return Err(Error::Data(format!(
            "{} holds {:.2} s of audio, not one 4 s segment; run `wstx prepare` to chunk it first",
            path.display(),
            audio.len() as f64 / TARGET_RATE as f64
        )));
    }
    Ok(audio)
}

enum Inner {
    Stft(StftFrontend),
    Cq(CqFrontend),
    Wst1d(Scattering1D),
    Wstx1(Scattering1D, StftFrontend),
    Wstx2(Scattering2D, StftFrontend),
}

/// `(name, rows, cols, values)` of one rendered block.
pub type RenderBlock = (String, usize, usize, Vec<f64>);

/// A prepared front-end that maps a segment to pooled classifier inputs.
pub struct Extractor {
    spec: FrontendSpec,
    inner: Inner,
}

impl Extractor {
    pub fn new(spec: FrontendSpec) -> Result<Self> {
        let mel = || StftFrontend::new(FilterSpacing::Mel, NUM_FILTERS);
        let inner = match spec {
            FrontendSpec::Mel => Inner::Stft(mel()?),
            FrontendSpec::Linear => Inner::Stft(StftFrontend::new(FilterSpacing::Linear, NUM_FILTERS)?),
            FrontendSpec::Cq => Inner::Cq(CqFrontend::new()),
            FrontendSpec::Wst1d(c) => Inner::Wst1d(Scattering1D::new(c, SEGMENT_SAMPLES)?),
            FrontendSpec::Wstx1(c) => Inner::Wstx1(Scattering1D::new(c, SEGMENT_SAMPLES)?, mel()?),
            FrontendSpec::Wstx2(c) => Inner::Wstx2(Scattering2D::new(c, NUM_FRAMES, NUM_FILTERS)?, mel()?),
        };
        Ok(Extractor { spec, inner })
    }

    pub fn spec(&self) -> &FrontendSpec {
        &self.spec
    }

    pub fn block_specs(&self) -> Vec<BlockSpec> {
        let plain = |width| BlockSpec { width, projected: false };
        let proj = |width| BlockSpec { width, projected: true };
        match &self.inner {
            Inner::Stft(_) | Inner::Cq(_) => vec![plain(NUM_FILTERS)],
            Inner::Wst1d(t) => vec![plain(t.paths().len())],
            Inner::Wstx1(t, _) => vec![proj(t.paths().len()), proj(NUM_FILTERS)],
            Inner::Wstx2(t, _) => vec![proj(t.output_shape().2)],
        }
    }

    /// The frame-level map of the front-end: filterbank energies, the 1D
    /// scattering matrix, or the map fed to the fusion pipelines.
    pub fn map(&self, audio: &[f64]) -> Result<FeatureMap> {
        match &self.inner {
            Inner::Stft(f) => f.features(audio),
            Inner::Cq(f) => f.features(audio),
            Inner::Wst1d(t) => wst1d_standalone_features(audio, t),
            Inner::Wstx1(_, f) | Inner::Wstx2(_, f) => f.features(audio),
        }
    }

    pub fn example(&self, audio: &[f64]) -> Result<Example> {
        Ok(match &self.inner {
            Inner::Stft(_) | Inner::Cq(_) => Example::from(&self.map(audio)?),
            Inner::Wst1d(t) => Example::new(vec![t.scatter(audio)?.pooled()]),
            Inner::Wstx1(t, f) => Example::new(vec![t.scatter(audio)?.pooled(), f.features(audio)?.mean_frame()]),
            Inner::Wstx2(t, f) => Example::new(vec![wstx2_pooled(&f.features(audio)?, t)?]),
        })
    }

    /// Per-order heatmaps with frames along the columns.
    pub fn render(&self, audio: &[f64]) -> Result<Vec<RenderBlock>> {
        let by_order_1d = |t: &Scattering1D| -> Result<Vec<RenderBlock>> {
            let s = t.scatter(audio)?;
            Ok((0..=t.config().order)
                .map(|m| {
                    let rows = s.order_rows(m);
                    let n = rows.len();
                    let vals = rows.flat_map(|r| s.row(r).to_vec()).collect();
                    (format!("order{m}"), n, s.num_frames, vals)
                })
                .collect())
        };
        match &self.inner {
            Inner::Stft(_) | Inner::Cq(_) => {
                let map = self.map(audio)?;
                Ok(vec![(String::new(), map.channels, map.frames, map.transposed())])
            }
            Inner::Wst1d(t) | Inner::Wstx1(t, _) => by_order_1d(t),
            Inner::Wstx2(t, f) => {
                let s = t.scatter(&f.features(audio)?.values)?;
                let max_order = s.paths.iter().map(|p| p.order).max().unwrap_or(0);
                Ok((0..=max_order)
                    .map(|m| {
                        // Rows: (path, reduced channel); columns: reduced frames.
                        let chans = s.order_channels(m);
                        let rows = chans.len() * s.width;
                        let mut vals = Vec::with_capacity(rows * s.height);
                        for c in chans {
                            let plane = s.channel(c);
                            for d in 0..s.width {
                                vals.extend((0..s.height).map(|t| plane[t * s.width + d]));
                            }
                        }
                        (format!("order{m}"), rows, s.height, vals)
                    })
                    .collect())
            }
        }
    }
}

/// Pooled inputs for every corpus item, rounded to `f32` so cached and
/// freshly computed features are identical.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub spec: FrontendSpec,
    pub blocks: Vec<BlockSpec>,
    pub examples: Vec<Example>,
}

pub fn extract_features(corpus: &Corpus, spec: &FrontendSpec, exec: Exec) -> Result<FeatureSet> {
    let ex = Extractor::new(*spec)?;
    let examples = exec.try_map(&corpus.items, |item| {
        let audio = load_segment(&item.path)?;
        let mut e = ex.example(&audio)?;
        for b in &mut e.blocks {
            b.iter_mut().for_each(|v| *v = *v as f32 as f64);
        }
        Ok::<_, Error>(e)
    })?;
    Ok(FeatureSet {
        spec: *spec,
        blocks: ex.block_specs(),
        examples,
    })
}

#[derive(Serialize, Deserialize, PartialEq)]
struct CacheKey {
    spec: FrontendSpec,
    blocks: Vec<BlockSpec>,
}

/// Like [`extract_features`], reusing `<cache>/<key>.wstx` when its sidecar
/// matches the spec and the corpus paths.
pub fn extract_cached(corpus: &Corpus, spec: &FrontendSpec, exec: Exec, cache: Option<&Path>) -> Result<FeatureSet> {
    let Some(dir) = cache else {
        return extract_features(corpus, spec, exec);
    };
    let file = dir.join(format!("{}.wstx", spec.cache_key()));
    let ids: Vec<String> = corpus.items.iter().map(|i| i.path.to_string_lossy().into_owned()).collect();
    if file.exists() {
        if let Ok((t, side)) = read_tensor(&file) {
            if let Ok(key) = serde_json::from_value::<CacheKey>(side.config.clone()) {
                let width: usize = key.blocks.iter().map(|b| b.width).sum();
                if key.spec == *spec && side.paths == ids && t.dims == [ids.len() as u32, width as u32] {
                    log::info!("reusing cached features {}", file.display());
                    let examples = t
                        .data
                        .chunks_exact(width.max(1))
                        .map(|row| {
                            let mut off = 0;
                            Example::new(
                                key.blocks
                                    .iter()
                                    .map(|b| {
                                        let v = row[off..off + b.width].iter().map(|&x| x as f64).collect();
                                        off += b.width;
                                        v
                                    })
                                    .collect(),
                            )
                        })
                        .collect();
                    return Ok(FeatureSet { spec: *spec, blocks: key.blocks, examples });
                }
            }
        }
        log::warn!("ignoring stale feature cache {}", file.display());
    }
    let set = extract_features(corpus, spec, exec)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let width: usize = set.blocks.iter().map(|b| b.width).sum();
    let flat: Vec<f32> = set
        .examples
        .iter()
        .flat_map(|e| e.blocks.iter().flatten().map(|&v| v as f32))
        .collect();
    let key = CacheKey { spec: *spec, blocks: set.blocks.clone() };
    write_tensor(
        &file,
        &Tensor::new(vec![ids.len() as u32, width as u32], flat)?,
        &Sidecar { config: serde_json::to_value(&key)?, paths: ids },
    )?;
    Ok(set)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    pub train: TrainConfig,
    pub n_bootstrap: usize,
    pub dcf: DcfParams,
    pub f1_threshold: f64,
    /// Seeds the classifier initialization and the bootstrap.
    pub seed: u64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings::from_config(&RunConfig::default())
    }
}

impl EvalSettings {
    pub fn from_config(cfg: &RunConfig) -> Self {
        EvalSettings {
            train: cfg.train.clone(),
            n_bootstrap: cfg.eval.n_bootstrap,
            dcf: cfg.eval.dcf(),
            f1_threshold: cfg.eval.f1_threshold,
            seed: cfg.seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub report: EvalReport,
    pub outcome: TrainOutcome,
    /// Ids of the evaluated segments, aligned with `scores`.
    pub ids: Vec<String>,
    pub scores: ScoreSet,
}

fn gather(corpus: &Corpus, features: &FeatureSet, idx: &[usize]) -> (Vec<Example>, Vec<Label>) {
    idx.iter()
        .map(|&i| (features.examples[i].clone(), corpus.items[i].label))
        .unzip()
}

/// Trains on the train split (selecting on dev) and evaluates `p̂` on the
/// test split, or on dev when the corpus has no test split.
pub fn run(corpus: &Corpus, features: &FeatureSet, settings: &EvalSettings, exec: Exec) -> Result<RunResult> {
    if features.examples.len() != corpus.items.len() {
        return Err(Error::Contract("features are not aligned with the corpus".into()));
    }
    let (tx, ty) = gather(corpus, features, &corpus.indices(Split::Train));
    let dev_idx = corpus.indices(Split::Dev);
    let (dx, dy) = gather(corpus, features, &dev_idx);
    let mut eval_idx = corpus.indices(Split::Test);
    if eval_idx.is_empty() {
        log::warn!("corpus has no test split; reporting on dev");
        eval_idx = dev_idx.clone();
    }
    let cfg = TrainConfig { seed: settings.seed, ..settings.train.clone() };
    let dev = (!dx.is_empty()).then_some(Labeled { examples: &dx, labels: &dy });
    let outcome = train(&features.blocks, Labeled { examples: &tx, labels: &ty }, dev, &cfg)?;
    let (ex, ey) = gather(corpus, features, &eval_idx);
    let scores = ex.iter().map(|e| outcome.head.score(e)).collect::<Result<Vec<_>>>()?;
    let set = ScoreSet::new(scores, ey)?;
    let report = bootstrap_with(
        &set,
        &settings.dcf,
        &BootstrapOptions {
            n: settings.n_bootstrap,
            seed: settings.seed,
            f1_threshold: settings.f1_threshold,
            exec,
        },
    )?;
    Ok(RunResult {
        report,
        outcome,
        ids: eval_idx.iter().map(|&i| corpus.items[i].id.clone()).collect(),
        scores: set,
    })
}

/// One line of a sweep or comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub spec: Option<FrontendSpec>,
    pub frontend: FrontendKind,
    pub cell: Option<Cell>,
    pub report: Option<EvalReport>,
    pub note: String,
}

fn evaluate_spec(
    corpus: &Corpus,
    spec: &FrontendSpec,
    settings: &EvalSettings,
    exec: Exec,
    cache: Option<&Path>,
) -> Result<EvalReport> {
    let features = extract_cached(corpus, spec, exec, cache)?;
    Ok(run(corpus, &features, settings, exec)?.report)
}

/// Trains and evaluates every cell. Invalid cells and failed runs become
/// rows with a note instead of aborting the sweep.
pub fn sweep(
    corpus: &Corpus,
    kind: FrontendKind,
    cells: &[Cell],
    oversampling: u32,
    settings: &EvalSettings,
    exec: Exec,
    cache: Option<&Path>,
) -> Vec<TableRow> {
    let mut rows = exec.map(cells, |&cell| {
        let base = TableRow { spec: None, frontend: kind, cell: Some(cell), report: None, note: String::new() };
        match cell_spec(kind, cell, oversampling) {
            Err(e) => {
                log::warn!("skipping grid cell {cell:?}: {e}");
                TableRow { note: format!("skipped: {e}"), ..base }
            }
            Ok(spec) => match evaluate_spec(corpus, &spec, settings, exec, cache) {
                Ok(r) => TableRow { spec: Some(spec), report: Some(r), ..base },
                Err(e) => {
                    log::warn!("grid cell {cell:?} failed: {e}");
                    TableRow { spec: Some(spec), note: format!("failed: {e}"), ..base }
                }
            },
        }
    });
    rows.sort_by(|a, b| {
        let key = |r: &TableRow| r.report.as_ref().map_or(f64::INFINITY, |r| r.min_dcf.value);
        key(a).total_cmp(&key(b)).then(a.cell.cmp(&b.cell))
    });
    rows
}

/// Full run results per spec, in the given order, sharing seed and classifier settings.
pub fn compare_runs(
    corpus: &Corpus,
    specs: &[FrontendSpec],
    settings: &EvalSettings,
    exec: Exec,
    cache: Option<&Path>,
) -> Result<Vec<(FrontendSpec, RunResult)>> {
    specs
        .iter()
        .map(|spec| {
            let features = extract_cached(corpus, spec, exec, cache)?;
            Ok((*spec, run(corpus, &features, settings, exec)?))
        })
        .collect()
}

/// Table rows for [`compare_runs`] output.
pub fn comparison_rows(runs: &[(FrontendSpec, RunResult)]) -> Vec<TableRow> {
    runs.iter()
        .map(|(spec, r)| TableRow {
            spec: Some(*spec),
            frontend: spec.kind(),
            cell: None,
            report: Some(r.report.clone()),
            note: String::new(),
        })
        .collect()
}

/// One row per spec, in the given order, sharing seed and classifier settings.
pub fn compare(
    corpus: &Corpus,
    specs: &[FrontendSpec],
    settings: &EvalSettings,
    exec: Exec,
    cache: Option<&Path>,
) -> Result<Vec<TableRow>> {
    Ok(comparison_rows(&compare_runs(corpus, specs, settings, exec, cache)?))
}

const METRIC_HEADER: &str = "minDCF,minDCF_2sigma,EER_pct,EER_pct_2sigma,F1_pct,F1_pct_2sigma,AUC_pct,AUC_pct_2sigma";

fn metric_fields(r: Option<&EvalReport>) -> String {
    match r {
        None => ",,,,,,,".to_string(),
        Some(r) => format!(
            "{:.4},{:.4},{:.2},{:.2},{:.2},{:.2},{:.2},{:.2}",
            r.min_dcf.value,
            r.min_dcf.ci2sigma,
            100.0 * r.eer.value,
            100.0 * r.eer.ci2sigma,
            100.0 * r.f1.value,
            100.0 * r.f1.ci2sigma,
            100.0 * r.auc.value,
            100.0 * r.auc.ci2sigma
        ),
    }
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Sweep layout: `J,Q|L,M,` metrics, `note`.
pub fn sweep_csv(kind: FrontendKind, rows: &[TableRow]) -> String {
    let q = if kind.is_1d() { "Q" } else { "L" };
    let mut out = format!("J,{q},M,{METRIC_HEADER},note\n");
    for r in rows {
        let (j, ql, m) = r.cell.unwrap_or_default();
        let _ = writeln!(out, "{j},{ql},{m},{},{}", metric_fields(r.report.as_ref()), csv_text(&r.note));
    }
    out
}

/// Comparison layout: `frontend,params,` metrics.
pub fn compare_csv(rows: &[TableRow]) -> String {
    let mut out = format!("frontend,params,{METRIC_HEADER}\n");
    for r in rows {
        let params = r.spec.map(|s| s.params_label()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{}", r.frontend, csv_text(&params), metric_fields(r.report.as_ref()));
    }
    out
}

/// Writes a `rows × cols` matrix as headerless CSV.
pub fn write_matrix_csv(path: &Path, rows: usize, cols: usize, values: &[f64]) -> Result<()> {
    if values.len() != rows * cols {
        return Err(Error::Contract("matrix size mismatch".into()));
    }
    let mut out = String::with_capacity(values.len() * 12);
    for r in 0..rows {
        for (c, v) in values[r * cols..(r + 1) * cols].iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
