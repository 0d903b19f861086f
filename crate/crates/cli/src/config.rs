//! Experiment configuration: one JSON document, unknown keys rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use landscape::projection::CloudSpec;
use landscape::{Dataset, Scheme};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the subcommand when present.
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default)]
    pub scheme: Option<Scheme>,
    #[serde(default)]
    pub dataset: Option<DatasetSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub options: Options,
}

/// `{"scalars": [...]}`, `{"inputs": [[...], ...]}`, `{"csv": "path"}` or
/// `{"random_sorted": n, "lo": -1, "hi": 1}`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum DatasetSpec {
    Scalars(ScalarsSpec),
    Inputs(InputsSpec),
    Csv(CsvSpec),
    Random(RandomSpec),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarsSpec {
    pub scalars: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputsSpec {
    pub inputs: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSpec {
    pub csv: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub random_sorted: usize,
    #[serde(default = "minus_one")]
    pub lo: f64,
    #[serde(default = "one")]
    pub hi: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSpec {
    pub route: EmbeddingRouteSpec,
    /// Rows of the inner matrix (affine routes); a single row of one entry for free-knot.
    #[serde(default)]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingRouteSpec {
    Affine,
    Constant,
    FreeKnot,
}

fn one() -> f64 {
    1.0
}

fn minus_one() -> f64 {
    -1.0
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default = "Options::labels")]
    pub labels: usize,
    #[serde(default = "Options::starts")]
    pub starts: usize,
    #[serde(default = "Options::max_iters")]
    pub max_iters: usize,
    #[serde(default = "two")]
    pub multiplier: f64,
    /// Defaults to the scheme's certified cap.
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub target_gap: Option<f64>,
    #[serde(default = "Options::growth_samples")]
    pub growth_samples: usize,
    #[serde(default)]
    pub embedding: Option<EmbeddingSpec>,
    /// Point with a zero first weight matrix; drawn at random when absent.
    #[serde(default)]
    pub alpha_bar: Option<Vec<f64>>,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default = "one")]
    pub nu: f64,
    #[serde(default = "Options::s_grid")]
    pub s_grid: Vec<f64>,
    #[serde(default)]
    pub toy_cloud: Option<CloudSpec>,
    #[serde(default)]
    pub linear_cloud: Option<CloudSpec>,
    #[serde(default = "Options::csv_stride")]
    pub csv_stride: usize,
    #[serde(default = "Options::jung_trials")]
    pub jung_trials: usize,
    #[serde(default = "Options::jung_max_dim")]
    pub jung_max_dim: usize,
    #[serde(default = "Options::reg_radius")]
    pub reg_radius: f64,
}

impl Options {
    fn labels() -> usize {
        16
    }
    fn starts() -> usize {
        8
    }
    fn max_iters() -> usize {
        500
    }
    fn growth_samples() -> usize {
        200
    }
    fn s_grid() -> Vec<f64> {
        vec![0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0]
    }
    fn csv_stride() -> usize {
        1
    }
    fn jung_trials() -> usize {
        1000
    }
    fn jung_max_dim() -> usize {
        6
    }
    fn reg_radius() -> f64 {
        0.1
    }
}

impl Default for Options {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let Some(Scheme::FeedForward(_) | Scheme::ResNet(_) | Scheme::FreeKnotSpline { .. }) = &cfg.scheme {
            cfg.scheme.as_ref().expect("present").validate()?;
        }
        Ok(cfg)
    }

    pub fn check_command(&self, name: &str) -> Result<()> {
        match &self.command {
            Some(c) if c != name => bail!("config is for `{c}`, not `{name}`"),
            _ => Ok(()),
        }
    }

    pub fn scheme(&self) -> Result<&Scheme> {
        self.scheme.as_ref().context("config needs a `scheme`")
    }

    /// Relative CSV paths resolve against the config file's directory.
    pub fn dataset(&self, base: &Path, seed: u64) -> Result<Dataset> {
        let spec = self.dataset.as_ref().context("config needs a `dataset`")?;
        Ok(match spec {
            DatasetSpec::Scalars(s) => Dataset::from_scalars(&s.scalars)?,
            DatasetSpec::Inputs(s) => Dataset::new(s.inputs.clone())?,
            DatasetSpec::Csv(s) => Dataset::from_csv(&base.join(&s.csv))?,
            DatasetSpec::Random(s) => Dataset::random_sorted_1d(s.random_sorted, s.lo, s.hi, &mut landscape::rng::task_rng(seed, u64::MAX))?,
        })
    }
}
