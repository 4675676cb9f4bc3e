use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::losses::sigmoid;
use crate::model::{attention_logits, ModelConfig, ModelParams};
use crate::rng;
use crate::stats::pearson;

/// Which off-diagonal entries enter the correlation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "objective")]
pub enum PairSet {
    /// All `M(M−1)` ordered off-diagonal pairs.
    #[default]
    OffDiagonal,
    /// Row `m` only: `(m, n)` for `n ≠ m`.
    AnchorRow(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub pairs: PairSet,
    pub permutations: usize,
    pub seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            pairs: PairSet::OffDiagonal,
            permutations: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResult {
    /// Label Spearman matrix; `None` where a column is constant.
    pub rho: Vec<Vec<Option<f64>>>,
    /// Dataset mean of `sigmoid(Q_r K_rᵀ / √d_k)`.
    pub attention: Vec<Vec<f64>>,
    pub pearson_r: f64,
    /// Two-sided permutation p-value.
    pub p_value: f64,
    pub num_pairs: usize,
}

/// Mean sigmoid-normalized self-attention logits over the dataset.
pub fn mean_attention(
    params: &ModelParams,
    cfg: &ModelConfig,
    dataset: &Dataset,
) -> Result<Vec<Vec<f64>>> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput);
    }
    let m = cfg.num_objectives;
    let mut acc = vec![0.0; m * m];
    for s in &dataset.samples {
        for (a, l) in acc.iter_mut().zip(attention_logits(s, params, cfg)?) {
            *a += sigmoid(l);
        }
    }
    let n = dataset.len() as f64;
    Ok(acc
        .chunks(m)
        .map(|r| r.iter().map(|v| v / n).collect())
        .collect())
}

/// Pearson correlation and its two-sided permutation p-value
/// `(1 + #{|r_π| ≥ |r|}) / (1 + permutations)`.
pub fn permutation_test(
    x: &[f64],
    y: &[f64],
    permutations: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let r = pearson(x, y).ok_or(Error::DegenerateLabels)?;
    let mut rng = rng::stream(seed, "analysis/permutation");
    let mut shuffled = y.to_vec();
    let mut hits = 0usize;
    for _ in 0..permutations {
        shuffled.shuffle(&mut rng);
        let rp = pearson(x, &shuffled).unwrap_or(0.0);
        if rp.abs() >= r.abs() - 1e-12 {
            hits += 1;
        }
    }
    Ok((r, (1 + hits) as f64 / (1 + permutations) as f64))
}

pub fn attention_analysis(
    params: &ModelParams,
    model_cfg: &ModelConfig,
    dataset: &Dataset,
    cfg: &AnalysisConfig,
) -> Result<AnalysisResult> {
    let m = model_cfg.num_objectives;
    model_cfg.check_schema(&dataset.schema)?;
    let rho = dataset.label_spearman();
    let attention = mean_attention(params, model_cfg, dataset)?;
    let pairs: Vec<(usize, usize)> = match cfg.pairs {
        PairSet::OffDiagonal => (0..m)
            .flat_map(|a| (0..m).filter(move |&b| b != a).map(move |b| (a, b)))
            .collect(),
        PairSet::AnchorRow(a) if a < m => (0..m).filter(|&b| b != a).map(|b| (a, b)).collect(),
        PairSet::AnchorRow(a) => {
            return Err(Error::Config(format!("anchor objective {a} out of range")))
        }
    };
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs
        .iter()
        .filter_map(|&(a, b)| rho[a][b].map(|r| (r, attention[a][b])))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::Config("fewer than 3 defined objective pairs".into()));
    }
    let (pearson_r, p_value) = permutation_test(&xs, &ys, cfg.permutations, cfg.seed)?;
    Ok(AnalysisResult {
        rho,
        attention,
        pearson_r,
        p_value,
        num_pairs: xs.len(),
    })
}
