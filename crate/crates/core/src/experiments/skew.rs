use serde::{Deserialize, Serialize};

use super::{evaluate, train, LossKind, TrainConfig};
use crate::data::{downsample_positives, generate, split, GeneratorSpec};
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkewConfig {
    /// Extra skew factors; 1 is the original ratio, 10 keeps a tenth of
    /// the positives.
    pub ratios: Vec<f64>,
    pub losses: Vec<LossKind>,
    /// Objective to downsample; `None` picks the rarest one.
    pub objective: Option<usize>,
    pub seeds: Vec<u64>,
    pub test_fraction: f64,
}

impl Default for SkewConfig {
    fn default() -> Self {
        Self {
            ratios: vec![1.0, 10.0],
            losses: vec![LossKind::RankAuc, LossKind::Mbce],
            objective: None,
            seeds: vec![1, 2, 3],
            test_fraction: 1.0 / 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewRow {
    pub loss: LossKind,
    pub ratio: f64,
    /// Seed-averaged held-out AUC sum.
    pub auc_sum: f64,
    /// `100·(base − auc_sum)/base` against ratio 1 of the same loss.
    pub rel_drop_pct: f64,
    pub per_seed: Vec<f64>,
}

/// Downsamples the training split of one objective, trains every loss on
/// it, and evaluates on the untouched test split. Each seed regenerates
/// the dataset from `spec` with that seed.
pub fn skew_experiment(
    spec: &GeneratorSpec,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    cfg: &SkewConfig,
) -> Result<Vec<SkewRow>> {
    if cfg.ratios.is_empty() || cfg.losses.is_empty() || cfg.seeds.is_empty() {
        return Err(Error::Config("skew needs ratios, losses and seeds".into()));
    }
    if let Some(r) = cfg.ratios.iter().find(|r| !(r.is_finite() && **r >= 1.0)) {
        return Err(Error::Config(format!("skew factor {r} must be at least 1")));
    }
    let mut sums = vec![vec![Vec::new(); cfg.ratios.len()]; cfg.losses.len()];
    for &seed in &cfg.seeds {
        let data = generate(&GeneratorSpec {
            seed,
            ..spec.clone()
        })?;
        let (train_set, test_set) = split(&data, cfg.test_fraction, rng::sub_seed(seed, "split"))?;
        let objective = match cfg.objective {
            Some(o) => o,
            None => rarest(&train_set.positive_rates()),
        };
        let counts = train_set.positive_counts();
        let (pos, neg) = (
            counts[objective] as f64,
            (train_set.len() - counts[objective]) as f64,
        );
        for (ri, &factor) in cfg.ratios.iter().enumerate() {
            let skewed = if factor == 1.0 {
                train_set.clone()
            } else {
                downsample_positives(
                    &train_set,
                    objective,
                    pos / neg / factor,
                    rng::sub_seed(seed, "skew"),
                )?
            };
            for (li, &loss) in cfg.losses.iter().enumerate() {
                let run = TrainConfig {
                    seed,
                    ..train_cfg.with_loss(loss)
                };
                let out = train(&skewed, None, model_cfg, &run)?;
                sums[li][ri].push(evaluate(&out.params, model_cfg, &test_set)?.sum);
            }
        }
    }
    let base_idx = cfg.ratios.iter().position(|&r| r == 1.0);
    let mut rows = Vec::new();
    for (li, &loss) in cfg.losses.iter().enumerate() {
        let means: Vec<f64> = sums[li]
            .iter()
            .map(|v| v.iter().sum::<f64>() / v.len() as f64)
            .collect();
        for (ri, &ratio) in cfg.ratios.iter().enumerate() {
            let rel_drop_pct = match base_idx {
                Some(b) => 100.0 * (means[b] - means[ri]) / means[b],
                None => f64::NAN,
            };
            rows.push(SkewRow {
                loss,
                ratio,
                auc_sum: means[ri],
                rel_drop_pct,
                per_seed: sums[li][ri].clone(),
            });
        }
    }
    Ok(rows)
}

fn rarest(rates: &[f64]) -> usize {
    rates
        .iter()
        .enumerate()
        .filter(|(_, r)| **r > 0.0)
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(i, _)| i)
}
