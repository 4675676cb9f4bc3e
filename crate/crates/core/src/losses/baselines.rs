//! Baseline losses: multi-objective BCE, label aggregation, and the
//! pairwise AUC surrogates.

use serde::{Deserialize, Serialize};

use super::{check_inputs, sigmoid, softplus, split_classes, BatchLabels, LossOutput, LossWeights};
use crate::error::{Error, Result};

/// Per-objective calibration heads `logit_m = scale_m·s + bias_m` used only
/// inside the BCE loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MbceHeads {
    pub scale: Vec<f64>,
    pub bias: Vec<f64>,
}

impl MbceHeads {
    pub fn identity(m: usize) -> Self {
        Self {
            scale: vec![1.0; m],
            bias: vec![0.0; m],
        }
    }

    /// Unit scales with biases at the logit of each base rate.
    pub fn from_positive_rates(rates: &[f64]) -> Self {
        let bias = rates
            .iter()
            .map(|&p| {
                let p = p.clamp(1e-6, 1.0 - 1e-6);
                (p / (1.0 - p)).ln()
            })
            .collect();
        Self {
            scale: vec![1.0; rates.len()],
            bias,
        }
    }

    pub fn len(&self) -> usize {
        self.scale.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scale.is_empty()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            scale: vec![0.0; self.len()],
            bias: vec![0.0; self.len()],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MbceOutput {
    pub loss: f64,
    pub grad_scores: Vec<f64>,
    pub grad_heads: MbceHeads,
}

/// `Σ_m w_m · mean_i BCE(σ(scale_m·s_i + bias_m), y_im)`.
pub fn mbce_loss(
    scores: &[f64],
    batch: &BatchLabels,
    weights: &LossWeights,
    heads: &MbceHeads,
) -> Result<MbceOutput> {
    check_inputs(scores, batch, weights)?;
    if heads.len() != batch.num_objectives() {
        return Err(Error::LengthMismatch {
            expected: batch.num_objectives(),
            got: heads.len(),
        });
    }
    let n = scores.len();
    let mut loss = 0.0;
    let mut grad_scores = vec![0.0; n];
    let mut grad_heads = heads.zeros_like();
    if n == 0 {
        return Ok(MbceOutput {
            loss,
            grad_scores,
            grad_heads,
        });
    }
    let inv_n = 1.0 / n as f64;
    for (m, &w) in weights.as_slice().iter().enumerate() {
        let (a, b) = (heads.scale[m], heads.bias[m]);
        let mut term = 0.0;
        for (i, (&s, &y)) in scores.iter().zip(batch.column(m)).enumerate() {
            let z = a * s + b;
            let y = f64::from(y);
            term += softplus(z) - y * z;
            let dz = w * inv_n * (sigmoid(z) - y);
            grad_scores[i] += dz * a;
            grad_heads.scale[m] += dz * s;
            grad_heads.bias[m] += dz;
        }
        loss += w * term * inv_n;
    }
    Ok(MbceOutput {
        loss,
        grad_scores,
        grad_heads,
    })
}

/// Mean squared error against the aggregated label `Σ_m w_m·y_im`.
pub fn label_agg_loss(
    scores: &[f64],
    batch: &BatchLabels,
    weights: &LossWeights,
) -> Result<LossOutput> {
    check_inputs(scores, batch, weights)?;
    let n = scores.len();
    if n == 0 {
        return Ok(LossOutput {
            loss: 0.0,
            grad: Vec::new(),
        });
    }
    let inv_n = 1.0 / n as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; n];
    for (i, &s) in scores.iter().enumerate() {
        let target: f64 = weights
            .as_slice()
            .iter()
            .enumerate()
            .map(|(m, w)| w * f64::from(batch.column(m)[i]))
            .sum();
        let r = s - target;
        loss += r * r * inv_n;
        grad[i] = 2.0 * r * inv_n;
    }
    Ok(LossOutput { loss, grad })
}

/// Normalization of pairwise losses within one objective.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairNorm {
    /// Average over the `P·N` positive/negative pairs.
    #[default]
    Mean,
    Sum,
}

/// `φ(d)` and `φ'(d)` for a pair margin `d = s_pos − s_neg`.
fn pairwise_loss<F>(
    scores: &[f64],
    batch: &BatchLabels,
    weights: &LossWeights,
    norm: PairNorm,
    surrogate: F,
) -> Result<LossOutput>
where
    F: Fn(f64) -> (f64, f64),
{
    check_inputs(scores, batch, weights)?;
    let mut loss = 0.0;
    let mut grad = vec![0.0; scores.len()];
    for (m, &w) in weights.as_slice().iter().enumerate() {
        let (pos, neg) = split_classes(batch.column(m));
        if pos.is_empty() || neg.is_empty() {
            continue;
        }
        let scale = match norm {
            PairNorm::Mean => w / (pos.len() * neg.len()) as f64,
            PairNorm::Sum => w,
        };
        let neg_scores: Vec<f64> = neg.iter().map(|&j| scores[j]).collect();
        let mut neg_grad = vec![0.0; neg.len()];
        let mut term = 0.0;
        for &i in &pos {
            let si = scores[i];
            let mut gi = 0.0;
            for (sj, gj) in neg_scores.iter().zip(neg_grad.iter_mut()) {
                let (v, dv) = surrogate(si - sj);
                term += v;
                gi += dv;
                *gj -= dv;
            }
            grad[i] += scale * gi;
        }
        for (&j, gj) in neg.iter().zip(neg_grad) {
            grad[j] += scale * gj;
        }
        loss += scale * term;
    }
    Ok(LossOutput { loss, grad })
}

/// Pairwise logistic surrogate `log(1 + exp(−(s_i − s_j)))`, pair-mean.
pub fn pairwise_logistic_loss(
    scores: &[f64],
    batch: &BatchLabels,
    weights: &LossWeights,
) -> Result<LossOutput> {
    pairwise_logistic_loss_with(scores, batch, weights, PairNorm::Mean)
}

pub fn pairwise_logistic_loss_with(
    scores: &[f64],
    batch: &BatchLabels,
    weights: &LossWeights,
    norm: PairNorm,
) -> Result<LossOutput> {
    pairwise_loss(scores, batch, weights, norm, |d| {
        (softplus(-d), -sigmoid(-d))
    })
}

/// Pairwise square surrogate `(1 − (s_i − s_j))²`, pair-mean.
pub fn pairwise_square_loss(
    scores: &[f64],
    batch: &BatchLabels,
    weights: &LossWeights,
) -> Result<LossOutput> {
    pairwise_square_loss_with(scores, batch, weights, PairNorm::Mean)
}

pub fn pairwise_square_loss_with(
    scores: &[f64],
    batch: &BatchLabels,
    weights: &LossWeights,
    norm: PairNorm,
) -> Result<LossOutput> {
    pairwise_loss(scores, batch, weights, norm, |d| {
        let r = 1.0 - d;
        (r * r, -2.0 * r)
    })
}
