use std::path::{Path, PathBuf};

use carnot_core::GridSpec;
use serde::Deserialize;

/// Experiment description read from a TOML file. Every table is optional;
/// a check falls back to its own defaults for anything not given here.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Check ids to run; absent means the full registry.
    pub checks: Option<Vec<String>>,
    pub output_dir: Option<PathBuf>,
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub params: ParamSets,
    #[serde(default)]
    pub suite: SuiteSpec,
    #[serde(default)]
    pub files: Files,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSets {
    pub alpha: Option<Vec<f64>>,
    pub sigma: Option<Vec<f64>>,
    pub s: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
    pub q: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub t: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_count() -> usize {
    20
}

fn default_seed() -> u64 {
    1
}

impl Default for SuiteSpec {
    fn default() -> Self {
        Self {
            count: default_count(),
            seed: default_seed(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Files {
    /// Measure CSV for the embedding checks.
    pub measure: Option<PathBuf>,
    /// Node-list CSV added to the set families.
    pub sets: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Reads a config and resolves its relative file paths against the
    /// config's directory.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg = Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.files.measure, &mut cfg.files.sets, &mut cfg.output_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

impl ParamSets {
    pub fn get(list: &Option<Vec<f64>>, default: &[f64]) -> Vec<f64> {
        list.clone().unwrap_or_else(|| default.to_vec())
    }
}
