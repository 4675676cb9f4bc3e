//! AUC-margin min-max loss.
//!
//! For each objective with frozen positive rate `p`:
//!
//! ```text
//! f = (1−p)·mean_pos (s−a)² + p·mean_neg (s−b)²
//!   + 2α·(p(1−p)·margin + p·mean_neg s − (1−p)·mean_pos s) − p(1−p)·α²
//! ```
//!
//! minimized over the scores and `(a, b)`, maximized over `α ≥ 0`.

use serde::{Deserialize, Serialize};

use super::{check_inputs, BatchLabels, LossWeights};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucmState {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub alpha: Vec<f64>,
    pub margin: f64,
    pub positive_rate: Vec<f64>,
}

impl AucmState {
    /// `a = b = α = 0`, margin 1. Rates come from the training split.
    pub fn new(positive_rate: Vec<f64>) -> Result<Self> {
        Self::with_margin(positive_rate, 1.0)
    }

    pub fn with_margin(positive_rate: Vec<f64>, margin: f64) -> Result<Self> {
        if positive_rate.is_empty() {
            return Err(Error::Config("AUCM needs at least one objective".into()));
        }
        if positive_rate
            .iter()
            .any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0)
        {
            return Err(Error::Config("positive rates must lie in [0, 1]".into()));
        }
        let m = positive_rate.len();
        Ok(Self {
            a: vec![0.0; m],
            b: vec![0.0; m],
            alpha: vec![0.0; m],
            margin,
            positive_rate,
        })
    }

    /// Objectives whose rate is 0 or 1 have no AUC and are excluded.
    pub fn excluded(&self) -> Vec<usize> {
        self.positive_rate
            .iter()
            .enumerate()
            .filter_map(|(m, &p)| (p <= 0.0 || p >= 1.0).then_some(m))
            .collect()
    }

    fn active(&self, m: usize) -> bool {
        let p = self.positive_rate[m];
        p > 0.0 && p < 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AucmGradient {
    pub loss: f64,
    pub grad_scores: Vec<f64>,
    pub grad_a: Vec<f64>,
    pub grad_b: Vec<f64>,
    pub grad_alpha: Vec<f64>,
}

/// Value and all partial derivatives at the current state.
pub fn aucm_objective(
    scores: &[f64],
    batch: &BatchLabels,
    weights: &LossWeights,
    state: &AucmState,
) -> Result<AucmGradient> {
    check_inputs(scores, batch, weights)?;
    let m_count = batch.num_objectives();
    if state.positive_rate.len() != m_count {
        return Err(Error::LengthMismatch {
            expected: m_count,
            got: state.positive_rate.len(),
        });
    }
    let mut out = AucmGradient {
        loss: 0.0,
        grad_scores: vec![0.0; scores.len()],
        grad_a: vec![0.0; m_count],
        grad_b: vec![0.0; m_count],
        grad_alpha: vec![0.0; m_count],
    };
    for (m, &w) in weights.as_slice().iter().enumerate() {
        if !state.active(m) {
            continue;
        }
        let (pos, neg) = batch.class_counts(m);
        if pos == 0 || neg == 0 {
            continue;
        }
        let col = batch.column(m);
        let p = state.positive_rate[m];
        let (a, b, alpha) = (state.a[m], state.b[m], state.alpha[m]);
        let (inv_pos, inv_neg) = (1.0 / pos as f64, 1.0 / neg as f64);

        let (mut sq_pos, mut sq_neg, mut mean_pos, mut mean_neg) = (0.0, 0.0, 0.0, 0.0);
        let (mut dev_pos, mut dev_neg) = (0.0, 0.0);
        for (&s, &y) in scores.iter().zip(col) {
            if y == 1 {
                sq_pos += (s - a) * (s - a);
                dev_pos += s - a;
                mean_pos += s;
            } else {
                sq_neg += (s - b) * (s - b);
                dev_neg += s - b;
                mean_neg += s;
            }
        }
        sq_pos *= inv_pos;
        sq_neg *= inv_neg;
        mean_pos *= inv_pos;
        mean_neg *= inv_neg;
        dev_pos *= inv_pos;
        dev_neg *= inv_neg;

        let pq = p * (1.0 - p);
        let coupling = pq * state.margin + p * mean_neg - (1.0 - p) * mean_pos;
        let f = (1.0 - p) * sq_pos + p * sq_neg + 2.0 * alpha * coupling - pq * alpha * alpha;
        out.loss += w * f;

        for (g, (&s, &y)) in out.grad_scores.iter_mut().zip(scores.iter().zip(col)) {
            *g += if y == 1 {
                w * (1.0 - p) * inv_pos * (2.0 * (s - a) - 2.0 * alpha)
            } else {
                w * p * inv_neg * (2.0 * (s - b) + 2.0 * alpha)
            };
        }
        out.grad_a[m] = -2.0 * w * (1.0 - p) * dev_pos;
        out.grad_b[m] = -2.0 * w * p * dev_neg;
        out.grad_alpha[m] = w * (2.0 * coupling - 2.0 * pq * alpha);
    }
    Ok(out)
}

/// One stochastic primal-dual step: descend on `(a, b)`, ascend on `α`
/// (projected onto `α ≥ 0`). Returns the loss and score gradient taken at
/// the state before the update; the caller descends the scores.
pub fn aucm_step(
    scores: &[f64],
    batch: &BatchLabels,
    weights: &LossWeights,
    state: &mut AucmState,
    lr: f64,
) -> Result<(f64, Vec<f64>)> {
    let g = aucm_objective(scores, batch, weights, state)?;
    for m in 0..state.a.len() {
        state.a[m] -= lr * g.grad_a[m];
        state.b[m] -= lr * g.grad_b[m];
        state.alpha[m] = (state.alpha[m] + lr * g.grad_alpha[m]).max(0.0);
    }
    Ok((g.loss, g.grad_scores))
}
