use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cim_core::experiments::{independent_opo_config, CampaignSpec, ProblemSource};
use cim_core::quantum::SqueezeConfig;
use cim_core::sde::SimConfig;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::CliError;

pub type Bands = BTreeMap<String, [f64; 2]>;

/// Reads and parses a TOML run file.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Loads `path` when given, otherwise the defaults.
pub fn load_or_default<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    path.map_or_else(|| Ok(T::default()), load)
}

/// Resolves `p` against the directory holding the config file.
pub fn relative_to(config: Option<&Path>, p: &Path) -> PathBuf {
    match config.and_then(Path::parent) {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

pub type SolveConfig = CampaignSpec;

/// Rewrites a relative G-set path of a campaign against the config directory.
pub fn rebase_problem(spec: &mut SolveConfig, config: Option<&Path>) {
    if let ProblemSource::Gset { path } = &mut spec.problem {
        *path = relative_to(config, path);
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurveyConfig {
    pub orders: Vec<usize>,
    pub trials_per_graph: u64,
    pub sim: SimConfig,
    pub check: Bands,
}

impl Default for SurveyConfig {
    fn default() -> Self {
        Self {
            orders: vec![4, 6, 8],
            trials_per_graph: 1000,
            sim: SimConfig::default(),
            check: Bands::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GsetConfig {
    pub instances: Vec<PathBuf>,
    pub metadata: PathBuf,
    #[serde(default = "default_runs")]
    pub runs: u64,
    #[serde(default)]
    pub allow_large: bool,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub check: Bands,
}

fn default_runs() -> u64 {
    20
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SqueezeRunConfig {
    pub p_values: Vec<f64>,
    pub squeeze: SqueezeConfig,
    pub check: Bands,
}

impl Default for SqueezeRunConfig {
    fn default() -> Self {
        Self {
            p_values: vec![0.0, 0.5, 0.9],
            squeeze: SqueezeConfig::default(),
            check: Bands::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutConfig {
    pub n: usize,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        Self { n: 4 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndependentConfig {
    pub n: usize,
    pub trials: u64,
    pub sim: SimConfig,
    pub check: Bands,
}

impl Default for IndependentConfig {
    fn default() -> Self {
        Self {
            n: 4,
            trials: 1000,
            sim: independent_opo_config(),
            check: Bands::new(),
        }
    }
}
