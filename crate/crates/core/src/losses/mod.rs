//! AUC metrics and training losses.
//!
//! Every loss takes the ensemble scores of one mini-batch together with the
//! batch's multi-objective labels and returns the loss value and its
//! gradient with respect to the scores. Objectives whose column lacks either
//! a positive or a negative in the batch contribute nothing.

mod auc;
mod aucm;
mod baselines;
mod rank;

pub use auc::{auc_report, exact_auc, exact_auc_with, AucReport, TieMode};
pub use aucm::{aucm_objective, aucm_step, AucmGradient, AucmState};
pub use baselines::{
    label_agg_loss, mbce_loss, pairwise_logistic_loss, pairwise_logistic_loss_with,
    pairwise_square_loss, pairwise_square_loss_with, MbceHeads, MbceOutput, PairNorm,
};
pub use rank::rank_auc_loss;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary labels of one batch, stored one column per objective.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchLabels {
    names: Vec<String>,
    columns: Vec<Vec<u8>>,
}

impl BatchLabels {
    pub fn new(names: Vec<String>, columns: Vec<Vec<u8>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Config("at least one objective is required".into()));
        }
        if names.len() != columns.len() {
            return Err(Error::LengthMismatch {
                expected: columns.len(),
                got: names.len(),
            });
        }
        let n = columns[0].len();
        for col in &columns {
            if col.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: col.len(),
                });
            }
            if col.iter().any(|&v| v > 1) {
                return Err(Error::Config("labels must be 0 or 1".into()));
            }
        }
        Ok(Self { names, columns })
    }

    /// Unnamed objectives `obj0, obj1, …`.
    pub fn from_columns(columns: Vec<Vec<u8>>) -> Result<Self> {
        let names = (0..columns.len()).map(|m| format!("obj{m}")).collect();
        Self::new(names, columns)
    }

    pub fn from_rows(names: Vec<String>, rows: &[Vec<u8>]) -> Result<Self> {
        let m = names.len();
        let mut columns = vec![Vec::with_capacity(rows.len()); m];
        for row in rows {
            if row.len() != m {
                return Err(Error::LengthMismatch {
                    expected: m,
                    got: row.len(),
                });
            }
            for (col, &v) in columns.iter_mut().zip(row) {
                col.push(v);
            }
        }
        Self::new(names, columns)
    }

    pub fn len(&self) -> usize {
        self.columns[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_objectives(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, m: usize) -> &[u8] {
        &self.columns[m]
    }

    pub fn columns(&self) -> &[Vec<u8>] {
        &self.columns
    }

    /// `(positives, negatives)` counts for objective `m`.
    pub fn class_counts(&self, m: usize) -> (usize, usize) {
        let pos = self.columns[m].iter().filter(|&&v| v == 1).count();
        (pos, self.len() - pos)
    }
}

/// Positive per-objective loss weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LossWeights(Vec<f64>);

impl LossWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::Config("loss weights must not be empty".into()));
        }
        if let Some(bad) = w.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Config(format!("loss weight {bad} is not positive")));
        }
        Ok(Self(w))
    }

    pub fn uniform(m: usize) -> Self {
        Self(vec![1.0; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Loss value and gradient with respect to the scores.
#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    pub grad: Vec<f64>,
}

fn check_inputs(scores: &[f64], batch: &BatchLabels, weights: &LossWeights) -> Result<()> {
    if scores.len() != batch.len() {
        return Err(Error::LengthMismatch {
            expected: batch.len(),
            got: scores.len(),
        });
    }
    if weights.len() != batch.num_objectives() {
        return Err(Error::LengthMismatch {
            expected: batch.num_objectives(),
            got: weights.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Indices of positives and negatives of one label column.
fn split_classes(column: &[u8]) -> (Vec<usize>, Vec<usize>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, &y) in column.iter().enumerate() {
        if y == 1 {
            pos.push(i);
        } else {
            neg.push(i);
        }
    }
    (pos, neg)
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}
