//! Run configuration: a TOML file with one table per stage.
//!
//! Precedence, lowest first: built-in defaults, the config file, then the
//! `--seed` and `--out` flags. The global `seed` replaces every per-stage
//! seed (generator, train, analysis, bench) so one number pins a run.

use std::path::{Path, PathBuf};

use harmonrank::data::{GeneratorSpec, Schema};
use harmonrank::experiments::{AnalysisConfig, BenchConfig, SkewConfig, TrainConfig};
use harmonrank::model::{Ablation, LinearInput, ModelConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::output::sorted_json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub data: DataSection,
    pub model: ModelSection,
    pub train: TrainConfig,
    pub sweep: SweepSection,
    pub skew: SkewConfig,
    pub bench: BenchConfig,
    pub analysis: AnalysisConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            data: DataSection::default(),
            model: ModelSection::default(),
            train: TrainConfig::default(),
            sweep: SweepSection::default(),
            skew: SkewConfig::default(),
            bench: BenchConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

/// Where data comes from and how it is split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Input CSV for `train`, `eval`, `sweep` and `analyze`. Without it the
    /// generator below is run in memory.
    pub path: Option<PathBuf>,
    /// Held-out share of the data.
    pub test_fraction: f64,
    /// Overrides the sample count of the generator.
    pub num_samples: Option<usize>,
    /// Full generator spec; the five-objective ladder when absent.
    pub generator: Option<GeneratorSpec>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            path: None,
            test_fraction: 1.0 / 6.0,
            num_samples: None,
            generator: None,
        }
    }
}

/// Model widths and switches. Objectives and features come from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub buckets: usize,
    pub embed_dim: usize,
    pub key_dim: usize,
    pub feature_dim: usize,
    pub ablation: Ablation,
    pub linear_path_input: LinearInput,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::default();
        Self {
            buckets: m.buckets,
            embed_dim: m.embed_dim,
            key_dim: m.key_dim,
            feature_dim: m.feature_dim,
            ablation: m.ablation,
            linear_path_input: m.linear_path_input,
        }
    }
}

/// Weight grid for `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Explicit weight vectors. Empty: uniform weights plus, for every
    /// objective and every entry of `boosts`, that objective boosted.
    pub grid: Vec<Vec<f64>>,
    pub boosts: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            grid: Vec::new(),
            boosts: vec![2.0, 4.0],
        }
    }
}

impl SweepSection {
    pub fn weight_grid(&self, m: usize) -> Vec<Vec<f64>> {
        if !self.grid.is_empty() {
            return self.grid.clone();
        }
        let mut grid = vec![vec![1.0; m]];
        for j in 0..m {
            for &b in &self.boosts {
                let mut w = vec![1.0; m];
                w[j] = b;
                grid.push(w);
            }
        }
        grid
    }
}

impl RunConfig {
    /// Reads a config file; unknown keys are an error.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Applies flag overrides and propagates the global seed.
    pub fn resolve(mut self, seed: Option<u64>, out: Option<PathBuf>) -> Result<Self> {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(o) = out {
            self.out = o;
        }
        self.train.seed = self.seed;
        self.analysis.seed = self.seed;
        self.bench.seed = self.seed;
        if let Some(g) = self.data.generator.as_mut() {
            g.seed = self.seed;
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let t = self.data.test_fraction;
        if !(t > 0.0 && t < 1.0) {
            return Err(CliError::Config(format!(
                "data.test_fraction {t} must lie in (0, 1)"
            )));
        }
        self.train.validate()?;
        self.generator_spec().validate()?;
        Ok(())
    }

    /// Generator spec after defaults and overrides.
    pub fn generator_spec(&self) -> GeneratorSpec {
        let mut spec = self
            .data
            .generator
            .clone()
            .unwrap_or_else(|| GeneratorSpec::standard(self.seed));
        if let Some(n) = self.data.num_samples {
            spec.num_samples = n;
        }
        spec
    }

    pub fn model_config(&self, schema: &Schema) -> ModelConfig {
        let m = &self.model;
        ModelConfig {
            num_objectives: schema.num_objectives(),
            personalized_features: schema.features.clone(),
            buckets: m.buckets,
            embed_dim: m.embed_dim,
            key_dim: m.key_dim,
            feature_dim: m.feature_dim,
            ablation: m.ablation,
            linear_path_input: m.linear_path_input,
        }
    }

    /// SHA-256 of the settings, excluding file locations, so that the same
    /// experiment run in two directories hashes identically.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        c.data.path = None;
        let digest = Sha256::digest(sorted_json(&c).as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
