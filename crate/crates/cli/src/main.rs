use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Parser, Subcommand};
use wstx::config::{parse_frontends, FrontendKind, Grid, RunConfig, MAX_SWEEP_CELLS};
use wstx::dataset::{make_synthetic_corpus, prepare_directory, Split};
use wstx::classifier::Checkpoint;
use wstx::experiment::{
    compare_csv, compare_runs, comparison_rows, load_segment, sweep, sweep_csv, write_matrix_csv, Corpus, EvalSettings,
    Extractor, RunResult,
};
use wstx::metrics::write_scores;
use wstx::Exec;

#[derive(Parser)]
#[command(name = "wstx", version, about = "Wavelet scattering front-ends for speech deepfake detection")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for corpus splits, classifier initialization and bootstrap.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,
    /// Output directory (prepare), CSV file (sweep, compare) or CSV path (render).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Chunk a labeled WAV tree (or synthesize a corpus) into 4 s segments plus a manifest.
    Prepare {
        /// Directory with `real/` and `fake/` subtrees.
        in_dir: Option<PathBuf>,
        /// Generate this many synthetic clips per class instead.
        #[arg(long)]
        synthetic: Option<usize>,
    },
    /// Train and evaluate one front-end over a parameter grid.
    Sweep {
        manifest: Option<PathBuf>,
        #[arg(long)]
        frontend: Option<FrontendKind>,
        /// e.g. "J=2,4;Q=1,8,10;M=1,2"
        #[arg(long)]
        grid: String,
        #[arg(long)]
        test_manifest: Option<PathBuf>,
        /// Feature cache directory.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Train and evaluate several front-ends with a shared classifier and seed.
    Compare {
        manifest: Option<PathBuf>,
        #[arg(long, default_value = "mel,linear,cq,wstx1,wstx2")]
        frontends: String,
        #[arg(long)]
        test_manifest: Option<PathBuf>,
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Also write scores, report and checkpoint per front-end into this directory.
        #[arg(long)]
        artifacts: Option<PathBuf>,
    },
    /// Write the feature matrix of one 4 s segment as CSV.
    Render {
        wav: PathBuf,
        #[arg(long)]
        frontend: Option<FrontendKind>,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<wstx::Error> for Failure {
    fn from(e: wstx::Error) -> Self {
        match e {
            wstx::Error::Config(_) | wstx::Error::Domain(_) => Failure::Usage(e.into()),
            _ => Failure::Runtime(e.into()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(anyhow!("{msg}"))
}

fn refuse_existing(path: &Path, force: bool) -> CmdResult {
    if path.exists() && !force {
        return Err(usage(format!("{} exists; pass --force to overwrite", path.display())));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs.or(cfg.jobs) {
        if j == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Failure::Runtime(e.into()))?;
    }
    let out = cli.out.clone().or_else(|| cfg.paths.out.clone());
    match cli.command {
        Command::Prepare { in_dir, synthetic } => prepare(&cfg, in_dir, synthetic, out, cli.force),
        Command::Sweep { manifest, frontend, grid, test_manifest, cache } => {
            if let Some(f) = frontend {
                cfg.frontend = f;
            }
            let corpus = load_corpus(&cfg, manifest, test_manifest)?;
            let kind = cfg.frontend;
            let grid = Grid::parse(&grid, kind)?;
            let (cells, warnings) = grid.cells();
            for w in &warnings {
                log::warn!("{w}");
            }
            if cells.len() > MAX_SWEEP_CELLS {
                return Err(usage(format!("grid has {} cells; the limit is {MAX_SWEEP_CELLS}", cells.len())));
            }
            if let Some(o) = &out {
                refuse_existing(o, cli.force)?;
            }
            let oversampling = cfg.wst.oversampling.unwrap_or(0);
            let cache = cache.or_else(|| cfg.paths.cache.clone());
            let rows = sweep(
                &corpus,
                kind,
                &cells,
                oversampling,
                &EvalSettings::from_config(&cfg),
                Exec::Parallel,
                cache.as_deref(),
            );
            emit(&sweep_csv(kind, &rows), out.as_deref())
        }
        Command::Compare { manifest, frontends, test_manifest, cache, artifacts } => {
            let kinds = parse_frontends(&frontends)?;
            let specs = kinds.iter().map(|&k| cfg.spec_for(k)).collect::<Result<Vec<_>, _>>()?;
            let corpus = load_corpus(&cfg, manifest, test_manifest)?;
            if let Some(o) = &out {
                refuse_existing(o, cli.force)?;
            }
            if let Some(dir) = &artifacts {
                for k in &kinds {
                    for t in artifact_paths(dir, k.as_str()) {
                        refuse_existing(&t, cli.force)?;
                    }
                }
            }
            let cache = cache.or_else(|| cfg.paths.cache.clone());
            let runs = compare_runs(&corpus, &specs, &EvalSettings::from_config(&cfg), Exec::Parallel, cache.as_deref())?;
            if let Some(dir) = &artifacts {
                std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(anyhow!("creating {}: {e}", dir.display())))?;
                for (spec, r) in &runs {
                    write_artifacts(dir, spec.kind().as_str(), r)?;
                }
            }
            emit(&compare_csv(&comparison_rows(&runs)), out.as_deref())
        }
        Command::Render { wav, frontend } => {
            if let Some(f) = frontend {
                cfg.frontend = f;
            }
            render(&cfg, &wav, out, cli.force)
        }
    }
}

fn prepare(cfg: &RunConfig, in_dir: Option<PathBuf>, synthetic: Option<usize>, out: Option<PathBuf>, force: bool) -> CmdResult {
    let out = out.ok_or_else(|| usage("prepare needs --out <dir>"))?;
    refuse_existing(&out.join("manifest.csv"), force)?;
    match (in_dir, synthetic) {
        (Some(_), Some(_)) => return Err(usage("give either an input directory or --synthetic, not both")),
        (None, None) => return Err(usage("no usable audio: give an input directory or --synthetic <n>")),
        (None, Some(n)) => {
            make_synthetic_corpus(&out, n, cfg.seed, Exec::Parallel)?;
        }
        (Some(dir), None) => {
            if !dir.is_dir() {
                return Err(usage(format!("{} is not a directory", dir.display())));
            }
            let report = prepare_directory(&dir, &out, cfg.seed, Exec::Parallel)?;
            for (p, why) in &report.skipped {
                eprintln!("skipped {}: {why}", p.display());
            }
            eprintln!("{} sources used, {} skipped", report.sources, report.skipped.len());
        }
    }
    let corpus = Corpus::load(&out.join("manifest.csv"), None)?;
    let count = |s| corpus.indices(s).len();
    eprintln!(
        "wrote {} segments to {} (train {}, dev {}, test {})",
        corpus.items.len(),
        out.display(),
        count(Split::Train),
        count(Split::Dev),
        count(Split::Test)
    );
    Ok(())
}

fn load_corpus(cfg: &RunConfig, manifest: Option<PathBuf>, test_manifest: Option<PathBuf>) -> Result<Corpus, Failure> {
    let manifest = manifest
        .or_else(|| cfg.paths.manifest.clone())
        .ok_or_else(|| usage("no manifest given (positional argument or [paths].manifest)"))?;
    if !manifest.is_file() {
        return Err(usage(format!("manifest {} not found", manifest.display())));
    }
    let test = test_manifest.or_else(|| cfg.paths.test_manifest.clone());
    Ok(Corpus::load(&manifest, test.as_deref())?)
}

fn emit(csv: &str, out: Option<&Path>) -> CmdResult {
    match out {
        None => print!("{csv}"),
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(e.into()))?;
            }
            std::fs::write(p, csv).map_err(|e| Failure::Runtime(anyhow!("writing {}: {e}", p.display())))?;
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn artifact_paths(dir: &Path, name: &str) -> [PathBuf; 3] {
    [
        dir.join(format!("{name}_scores.csv")),
        dir.join(format!("{name}_report.json")),
        dir.join(format!("{name}_checkpoint.json")),
    ]
}

fn write_artifacts(dir: &Path, name: &str, r: &RunResult) -> CmdResult {
    let [scores, report, checkpoint] = artifact_paths(dir, name);
    write_scores(&scores, &r.ids, &r.scores)?;
    std::fs::write(&report, r.report.to_json()).map_err(|e| Failure::Runtime(anyhow!("writing {}: {e}", report.display())))?;
    Checkpoint::from_outcome(&r.outcome).write(&checkpoint)?;
    Ok(())
}

fn render(cfg: &RunConfig, wav: &Path, out: Option<PathBuf>, force: bool) -> CmdResult {
    let out = out.ok_or_else(|| usage("render needs --out <file.csv>"))?;
    let audio = match load_segment(wav) {
        Ok(a) => a,
        Err(wstx::Error::Data(m)) => return Err(usage(m)),
        Err(e) => return Err(e.into()),
    };
    let ex = Extractor::new(cfg.spec_for(cfg.frontend)?)?;
    let blocks = ex.render(&audio)?;
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let targets: Vec<PathBuf> = blocks
        .iter()
        .map(|(name, ..)| {
            if blocks.len() == 1 {
                out.clone()
            } else {
                out.with_file_name(format!("{stem}_{name}.csv"))
            }
        })
        .collect();
    for t in &targets {
        refuse_existing(t, force)?;
    }
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(anyhow!("creating {}: {e}", dir.display())))?;
    }
    for ((_, rows, cols, values), t) in blocks.iter().zip(&targets) {
        write_matrix_csv(t, *rows, *cols, values)?;
        eprintln!("wrote {} ({rows} x {cols})", t.display());
    }
    Ok(())
}
