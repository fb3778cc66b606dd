//! Run configuration (TOML) and sweep grids.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::TrainConfig;
use crate::error::{Error, Result};
use crate::metrics::{DcfParams, DEFAULT_F1_THRESHOLD};
use crate::scattering1d::ScatteringConfig1D;
use crate::scattering2d::ScatteringConfig2D;

pub const MAX_SWEEP_CELLS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrontendKind {
    Mel,
    Linear,
    Cq,
    Wst1d,
    Wstx1,
    Wstx2,
}

impl FrontendKind {
    pub const ALL: [FrontendKind; 6] = [
        FrontendKind::Mel,
        FrontendKind::Linear,
        FrontendKind::Cq,
        FrontendKind::Wst1d,
        FrontendKind::Wstx1,
        FrontendKind::Wstx2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FrontendKind::Mel => "mel",
            FrontendKind::Linear => "linear",
            FrontendKind::Cq => "cq",
            FrontendKind::Wst1d => "wst1d",
            FrontendKind::Wstx1 => "wstx1",
            FrontendKind::Wstx2 => "wstx2",
        }
    }

    /// Whether the front-end is parameterized by a 1D scattering transform.
    pub fn is_1d(self) -> bool {
        matches!(self, FrontendKind::Wst1d | FrontendKind::Wstx1)
    }
}

impl std::fmt::Display for FrontendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FrontendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FrontendKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown front-end `{s}` (expected one of mel, linear, cq, wst1d, wstx1, wstx2)"
                ))
            })
    }
}

/// Parses a comma-separated front-end list.
pub fn parse_frontends(list: &str) -> Result<Vec<FrontendKind>> {
    let kinds = list
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<Vec<_>>>()?;
    if kinds.is_empty() {
        return Err(Error::Config("empty front-end list".into()));
    }
    Ok(kinds)
}

/// A front-end together with its scattering parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "frontend", rename_all = "lowercase")]
pub enum FrontendSpec {
    Mel,
    Linear,
    Cq,
    Wst1d(ScatteringConfig1D),
    Wstx1(ScatteringConfig1D),
    Wstx2(ScatteringConfig2D),
}

impl FrontendSpec {
    /// Default configuration for each front-end.
    pub fn default_for(kind: FrontendKind) -> Self {
        let wst = ScatteringConfig1D::new(2, 10, 2).expect("valid default");
        match kind {
            FrontendKind::Mel => FrontendSpec::Mel,
            FrontendKind::Linear => FrontendSpec::Linear,
            FrontendKind::Cq => FrontendSpec::Cq,
            FrontendKind::Wst1d => FrontendSpec::Wst1d(wst),
            FrontendKind::Wstx1 => FrontendSpec::Wstx1(wst),
            FrontendKind::Wstx2 => FrontendSpec::Wstx2(ScatteringConfig2D::new(2, 10, 2).expect("valid default")),
        }
    }

    pub fn kind(&self) -> FrontendKind {
        match self {
            FrontendSpec::Mel => FrontendKind::Mel,
            FrontendSpec::Linear => FrontendKind::Linear,
            FrontendSpec::Cq => FrontendKind::Cq,
            FrontendSpec::Wst1d(_) => FrontendKind::Wst1d,
            FrontendSpec::Wstx1(_) => FrontendKind::Wstx1,
            FrontendSpec::Wstx2(_) => FrontendKind::Wstx2,
        }
    }

    /// Parameter summary such as `J=2 Q=10 M=2`; empty for filterbanks.
    pub fn params_label(&self) -> String {
        match self {
            FrontendSpec::Wst1d(c) | FrontendSpec::Wstx1(c) => {
                let mut s = format!("J={} Q={} M={}", c.j, c.q, c.order);
                if c.oversampling > 0 {
                    s.push_str(&format!(" os={}", c.oversampling));
                }
                s
            }
            FrontendSpec::Wstx2(c) => format!("J={} L={} M={}", c.j, c.l, c.order),
            _ => String::new(),
        }
    }

    /// Stable identifier used for cache file names.
    pub fn cache_key(&self) -> String {
        let p = self.params_label().replace(['=', ' '], "");
        if p.is_empty() {
            self.kind().to_string()
        } else {
            format!("{}_{p}", self.kind())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WstSection {
    #[serde(rename = "J")]
    pub j: Option<u32>,
    #[serde(rename = "Q")]
    pub q: Option<u32>,
    #[serde(rename = "L")]
    pub l: Option<u32>,
    #[serde(rename = "M")]
    pub m: Option<u32>,
    pub oversampling: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub n_bootstrap: usize,
    pub c_miss: f64,
    pub c_fa: f64,
    pub pi_spoof: f64,
    pub f1_threshold: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        let d = DcfParams::default();
        EvalSection {
            n_bootstrap: 1000,
            c_miss: d.c_miss,
            c_fa: d.c_fa,
            pi_spoof: d.pi_spoof,
            f1_threshold: DEFAULT_F1_THRESHOLD,
        }
    }
}

impl EvalSection {
    pub fn dcf(&self) -> DcfParams {
        DcfParams {
            c_miss: self.c_miss,
            c_fa: self.c_fa,
            pi_spoof: self.pi_spoof,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub manifest: Option<PathBuf>,
    /// Defaults to `test_manifest.csv` next to the manifest when present.
    pub test_manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Feature cache directory; features are recomputed when unset.
    pub cache: Option<PathBuf>,
}

/// Everything one run needs; mirrors the TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub frontend: FrontendKind,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub wst: WstSection,
    pub train: TrainConfig,
    pub eval: EvalSection,
    pub paths: PathsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            frontend: FrontendKind::Wstx1,
            seed: 0,
            jobs: None,
            wst: WstSection::default(),
            train: TrainConfig::default(),
            eval: EvalSection::default(),
            paths: PathsSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.spec_for(self.frontend)?;
        let e = &self.eval;
        if !(e.pi_spoof > 0.0 && e.pi_spoof < 1.0) || !(e.c_miss > 0.0) || !(e.c_fa > 0.0) {
            return Err(Error::Config("eval costs must be positive and pi_spoof in (0, 1)".into()));
        }
        Ok(())
    }

    /// The spec for `kind`, with the `[wst]` section overriding its defaults.
    pub fn spec_for(&self, kind: FrontendKind) -> Result<FrontendSpec> {
        let w = &self.wst;
        Ok(match FrontendSpec::default_for(kind) {
            FrontendSpec::Wst1d(d) | FrontendSpec::Wstx1(d) => {
                if w.l.is_some() {
                    return Err(Error::Config(format!("{kind} takes Q, not L")));
                }
                let c = ScatteringConfig1D::new(w.j.unwrap_or(d.j), w.q.unwrap_or(d.q), w.m.unwrap_or(d.order))?
                    .with_oversampling(w.oversampling.unwrap_or(0))?;
                if kind == FrontendKind::Wst1d {
                    FrontendSpec::Wst1d(c)
                } else {
                    FrontendSpec::Wstx1(c)
                }
            }
            FrontendSpec::Wstx2(d) => {
                if w.q.is_some() || w.oversampling.is_some() {
                    return Err(Error::Config("wstx2 takes J, L and M only".into()));
                }
                FrontendSpec::Wstx2(ScatteringConfig2D::new(
                    w.j.unwrap_or(d.j),
                    w.l.unwrap_or(d.l),
                    w.m.unwrap_or(d.order),
                )?)
            }
            other => other,
        })
    }
}

/// One value list per axis of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub j: Vec<u32>,
    /// Q for 1D front-ends, L for wstx2.
    pub ql: Vec<u32>,
    pub m: Vec<u32>,
}

/// A grid cell: `(J, Q|L, M)`.
pub type Cell = (u32, u32, u32);

impl Grid {
    /// Parses `J=2,4;Q=1,8,10;M=1,2,3`. Axes left out take the front-end's
    /// default. `Q` and `L` are interchangeable but must match the front-end.
    pub fn parse(text: &str, kind: FrontendKind) -> Result<Self> {
        let (dj, dq, dm) = match FrontendSpec::default_for(kind) {
            FrontendSpec::Wst1d(c) | FrontendSpec::Wstx1(c) => (c.j, c.q, c.order),
            FrontendSpec::Wstx2(c) => (c.j, c.l, c.order),
            _ => return Err(Error::Config(format!("{kind} has no scattering parameters to sweep"))),
        };
        let qname = if kind.is_1d() { "Q" } else { "L" };
        let mut grid = Grid { j: vec![dj], ql: vec![dq], m: vec![dm] };
        let mut seen = BTreeSet::new();
        for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, values) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("grid axis `{part}` is not KEY=v1,v2")))?;
            let key = key.trim();
            let values = values
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<u32>()
                        .map_err(|_| Error::Config(format!("grid value `{}` for {key} is not an integer", v.trim())))
                })
                .collect::<Result<Vec<u32>>>()?;
            if values.is_empty() {
                return Err(Error::Config(format!("grid axis {key} has no values")));
            }
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("grid axis {key} given twice")));
            }
            match key {
                "J" => grid.j = values,
                k if k == qname => grid.ql = values,
                "M" => grid.m = values,
                other => {
                    return Err(Error::Config(format!(
                        "unknown grid axis `{other}` for {kind} (expected J, {qname}, M)"
                    )))
                }
            }
        }
        Ok(grid)
    }

    /// Cartesian product in axis order with duplicates removed; the second
    /// value holds a warning per dropped duplicate.
    pub fn cells(&self) -> (Vec<Cell>, Vec<String>) {
        let mut seen = BTreeSet::new();
        let mut cells = Vec::new();
        let mut warnings = Vec::new();
        for &j in &self.j {
            for &q in &self.ql {
                for &m in &self.m {
                    if seen.insert((j, q, m)) {
                        cells.push((j, q, m));
                    } else {
                        warnings.push(format!("duplicate grid cell ({j}, {q}, {m}) ignored"));
                    }
                }
            }
        }
        (cells, warnings)
    }
}

/// Builds the spec for one sweep cell.
pub fn cell_spec(kind: FrontendKind, (j, ql, m): Cell, oversampling: u32) -> Result<FrontendSpec> {
    match kind {
        FrontendKind::Wst1d | FrontendKind::Wstx1 => {
            let c = ScatteringConfig1D::new(j, ql, m)?.with_oversampling(oversampling)?;
            Ok(if kind == FrontendKind::Wst1d {
                FrontendSpec::Wst1d(c)
            } else {
                FrontendSpec::Wstx1(c)
            })
        }
        FrontendKind::Wstx2 => {
            // Validates that the path count is defined for this order.
            crate::scattering2d::path_count_2d(j, ql, m)?;
            Ok(FrontendSpec::Wstx2(ScatteringConfig2D::new(j, ql, m)?))
        }
        other => Err(Error::Config(format!("{other} has no scattering parameters to sweep"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_roundtrip_and_overrides() {
        let cfg = RunConfig::from_toml(
            r#"
            frontend = "wstx2"
            seed = 3
            [wst]
            J = 3
            L = 8
            [train]
            epochs = 10
            "#,
        )
        .unwrap();
        assert_eq!(cfg.train.learning_rate, 5e-4);
        assert_eq!(cfg.spec_for(FrontendKind::Wstx2).unwrap().params_label(), "J=3 L=8 M=2");
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(RunConfig::from_toml("frontend = \"mfcc\"").is_err());
        assert!(RunConfig::from_toml("[wst]\nJ = 1").is_err());
        assert!(RunConfig::from_toml("frontend = \"wstx2\"\n[wst]\nQ = 4").is_err());
        assert!(RunConfig::from_toml("[train]\nlearning_rate = -1.0").is_err());
        assert!(RunConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn grid_expansion() {
        let g = Grid::parse("J=2,4;Q=1,8,10;M=1,2,3", FrontendKind::Wstx1).unwrap();
        assert_eq!(g.cells().0.len(), 18);
        let (cells, warn) = Grid::parse("J=2,2;M=2", FrontendKind::Wstx1).unwrap().cells();
        assert_eq!(cells, vec![(2, 10, 2)]);
        assert_eq!(warn.len(), 1);
        assert!(Grid::parse("J=2;L=4", FrontendKind::Wstx1).is_err());
        assert!(Grid::parse("J=2;L=4", FrontendKind::Wstx2).is_ok());
        assert!(Grid::parse("J=x", FrontendKind::Wstx2).is_err());
        assert!(Grid::parse("J=2", FrontendKind::Mel).is_err());
    }

    #[test]
    fn frontend_lists() {
        assert_eq!(
            parse_frontends("mel, wstx1,wstx2").unwrap(),
            vec![FrontendKind::Mel, FrontendKind::Wstx1, FrontendKind::Wstx2]
        );
        assert!(parse_frontends("mel,foo").is_err());
        assert!(cell_spec(FrontendKind::Wstx2, (2, 4, 3), 0).is_err());
    }
}
