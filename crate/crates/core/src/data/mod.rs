//! Impression logs: samples, schema, splitting, batching and skew control.

mod csv_io;
mod generate;

pub use csv_io::{load_csv, save_csv};
pub use generate::{bias_for_rate, generate, FeatureGenSpec, GeneratorSpec};

use std::path::PathBuf;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::BatchLabels;
use crate::rng;

/// One impression: upstream per-objective scores, their labels, and the
/// categorical personalized feature ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
    pub features: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub name: String,
    pub cardinality: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub objectives: Vec<String>,
    pub features: Vec<FeatureSchema>,
}

impl Schema {
    pub fn num_objectives(&self) -> usize {
        self.objectives.len()
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    fn check_sample(&self, s: &Sample) -> std::result::Result<(), String> {
        if s.scores.len() != self.objectives.len() || s.labels.len() != self.objectives.len() {
            return Err("objective count does not match schema".into());
        }
        if s.features.len() != self.features.len() {
            return Err("feature count does not match schema".into());
        }
        if let Some(v) = s
            .scores
            .iter()
            .find(|v| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(format!("score {v} outside [0, 1]"));
        }
        if s.labels.iter().any(|&y| y > 1) {
            return Err("label must be 0 or 1".into());
        }
        for (f, id) in self.features.iter().zip(&s.features) {
            if *id >= f.cardinality {
                return Err(format!(
                    "feature {} id {id} exceeds cardinality {}",
                    f.name, f.cardinality
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Generated(GeneratorSpec),
    File(PathBuf),
    Derived(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub schema: Schema,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, schema: Schema, provenance: Provenance) -> Result<Self> {
        for (row, s) in samples.iter().enumerate() {
            schema
                .check_sample(s)
                .map_err(|msg| Error::Csv { row: row + 1, msg })?;
        }
        Ok(Self {
            samples,
            schema,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_objectives(&self) -> usize {
        self.schema.num_objectives()
    }

    pub fn label_column(&self, m: usize) -> Vec<u8> {
        self.samples.iter().map(|s| s.labels[m]).collect()
    }

    pub fn labels(&self) -> BatchLabels {
        let cols = (0..self.num_objectives())
            .map(|m| self.label_column(m))
            .collect();
        BatchLabels::new(self.schema.objectives.clone(), cols)
            .expect("dataset labels are validated on construction")
    }

    pub fn labels_for(&self, indices: &[usize]) -> BatchLabels {
        let cols = (0..self.num_objectives())
            .map(|m| indices.iter().map(|&i| self.samples[i].labels[m]).collect())
            .collect();
        BatchLabels::new(self.schema.objectives.clone(), cols)
            .expect("dataset labels are validated on construction")
    }

    pub fn positive_counts(&self) -> Vec<usize> {
        (0..self.num_objectives())
            .map(|m| self.samples.iter().filter(|s| s.labels[m] == 1).count())
            .collect()
    }

    pub fn positive_rates(&self) -> Vec<f64> {
        let n = self.len().max(1) as f64;
        self.positive_counts()
            .into_iter()
            .map(|c| c as f64 / n)
            .collect()
    }

    pub fn subset(&self, indices: &[usize], tag: &str) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            schema: self.schema.clone(),
            provenance: Provenance::Derived(tag.to_string()),
        }
    }

    /// Label Spearman correlation matrix; `None` where a column is constant.
    pub fn label_spearman(&self) -> Vec<Vec<Option<f64>>> {
        let m = self.num_objectives();
        let cols: Vec<Vec<f64>> = (0..m)
            .map(|j| {
                self.samples
                    .iter()
                    .map(|s| f64::from(s.labels[j]))
                    .collect()
            })
            .collect();
        let mut rho = vec![vec![None; m]; m];
        for a in 0..m {
            for b in a..m {
                let r = crate::stats::spearman(&cols[a], &cols[b]);
                rho[a][b] = r;
                rho[b][a] = r;
            }
        }
        rho
    }
}

/// Random disjoint train/test split. Both parts keep generation order.
pub fn split(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction {test_fraction} must lie in (0, 1)"
        )));
    }
    let n = dataset.len();
    let n_test = (n as f64 * test_fraction).round() as usize;
    let mut rng = rng::stream(seed, "split");
    let mut test_idx = index::sample(&mut rng, n, n_test).into_vec();
    test_idx.sort_unstable();
    let mut is_test = vec![false; n];
    for &i in &test_idx {
        is_test[i] = true;
    }
    let train_idx: Vec<usize> = (0..n).filter(|&i| !is_test[i]).collect();
    Ok((
        dataset.subset(&train_idx, "train"),
        dataset.subset(&test_idx, "test"),
    ))
}

/// Index batches covering `0..len` exactly once. Without a seed the order is
/// the natural one, which gives contiguous chunks.
pub fn batches(
    len: usize,
    batch_size: usize,
    shuffle_seed: Option<u64>,
) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let mut order: Vec<usize> = (0..len).collect();
    if let Some(seed) = shuffle_seed {
        order.shuffle(&mut rng::stream(seed, "batches"));
    }
    Ok(order.chunks(batch_size).map(<[usize]>::to_vec).collect())
}

/// Keeps every negative of `objective` and a uniformly random subset of its
/// positives so that positives/negatives ≈ `target_ratio`.
pub fn downsample_positives(
    dataset: &Dataset,
    objective: usize,
    target_ratio: f64,
    seed: u64,
) -> Result<Dataset> {
    if objective >= dataset.num_objectives() {
        return Err(Error::Config(format!("objective {objective} out of range")));
    }
    if !(target_ratio.is_finite() && target_ratio > 0.0) {
        return Err(Error::Config(format!(
            "target ratio {target_ratio} must be positive"
        )));
    }
    let (pos, neg): (Vec<usize>, Vec<usize>) =
        (0..dataset.len()).partition(|&i| dataset.samples[i].labels[objective] == 1);
    let keep = (target_ratio * neg.len() as f64).round() as usize;
    if keep > pos.len() {
        return Err(Error::Config(format!(
            "target ratio {target_ratio} needs {keep} positives, only {} available",
            pos.len()
        )));
    }
    if keep == 0 {
        return Err(Error::Config(format!(
            "target ratio {target_ratio} leaves no positives"
        )));
    }
    if keep == pos.len() {
        return Ok(dataset.clone());
    }
    let mut rng = rng::stream(seed, "downsample");
    let mut kept: Vec<usize> = index::sample(&mut rng, pos.len(), keep)
        .into_iter()
        .map(|k| pos[k])
        .chain(neg)
        .collect();
    kept.sort_unstable();
    let mut out = dataset.subset(&kept, "downsampled");
    out.provenance = Provenance::Derived(format!(
        "downsample objective {objective} to ratio {target_ratio}"
    ));
    Ok(out)
}
