//! Differentiable ranking.
//!
//! Soft ranks are the Euclidean projection of `scores / ε` onto the
//! permutahedron spanned by the permutations of `(1, …, n)`. The projection
//! reduces to one sort plus an isotonic regression solved by
//! pool-adjacent-violators, so the forward pass costs `O(n log n)` and the
//! vector-Jacobian product costs `O(n)`.
//!
//! Ranks are ascending: the smallest score gets the rank closest to 1.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoftRankConfig {
    /// Scale ε of the quadratic regularizer. Scores are divided by ε before
    /// projection; smaller values approach hard ranks.
    pub regularization_strength: f64,
}

impl Default for SoftRankConfig {
    fn default() -> Self {
        Self {
            regularization_strength: 1.0,
        }
    }
}

impl SoftRankConfig {
    pub fn new(regularization_strength: f64) -> Result<Self> {
        let cfg = Self {
            regularization_strength,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let eps = self.regularization_strength;
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidRegularization(eps));
        }
        Ok(())
    }
}

/// Soft ranks together with the state needed for the backward pass.
#[derive(Debug, Clone)]
pub struct SoftRankResult {
    pub soft_ranks: Vec<f64>,
    /// `perm[k]` is the input index holding the k-th largest score.
    perm: Vec<usize>,
    /// Contiguous PAV blocks over positions of `perm`.
    blocks: Vec<Range<usize>>,
    regularization_strength: f64,
}

impl SoftRankResult {
    pub fn len(&self) -> usize {
        self.soft_ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.soft_ranks.is_empty()
    }

    /// Input indices ordered by decreasing score (stable for ties).
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }
}

/// Pool-adjacent-violators for a non-increasing fit. Returns the block
/// partition; each block's fitted value is the mean of its entries.
fn pav_decreasing(y: &[f64]) -> Vec<Range<usize>> {
    // (start, end, sum)
    let mut stack: Vec<(usize, usize, f64)> = Vec::with_capacity(y.len());
    for (i, &v) in y.iter().enumerate() {
        let mut cur = (i, i + 1, v);
        while let Some(&(start, end, sum)) = stack.last() {
            let prev_mean = sum / (end - start) as f64;
            let cur_mean = cur.2 / (cur.1 - cur.0) as f64;
            if prev_mean >= cur_mean {
                break;
            }
            stack.pop();
            cur = (start, cur.1, sum + cur.2);
        }
        stack.push(cur);
    }
    stack.into_iter().map(|(s, e, _)| s..e).collect()
}

/// Least-squares projection of `w` onto non-increasing vectors.
pub fn isotonic_regression(w: &[f64]) -> Result<Vec<f64>> {
    if w.is_empty() {
        return Err(Error::EmptyInput);
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut out = vec![0.0; w.len()];
    for block in pav_decreasing(w) {
        let mean = w[block.clone()].iter().sum::<f64>() / block.len() as f64;
        out[block].fill(mean);
    }
    Ok(out)
}

pub fn soft_rank(scores: &[f64], config: &SoftRankConfig) -> Result<SoftRankResult> {
    config.validate()?;
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let eps = config.regularization_strength;
    let n = scores.len();
    let z: Vec<f64> = scores.iter().map(|s| s / eps).collect();

    let mut perm: Vec<usize> = (0..n).collect();
    // Stable: tied inputs keep index order.
    perm.sort_by(|&a, &b| z[b].total_cmp(&z[a]));

    // Target vertex in sorted order is (n, n-1, ..., 1).
    let target = |k: usize| (n - k) as f64;
    let y: Vec<f64> = perm
        .iter()
        .enumerate()
        .map(|(k, &i)| z[i] - target(k))
        .collect();
    let blocks = pav_decreasing(&y);

    let mut soft_ranks = vec![0.0; n];
    for block in &blocks {
        // r = z - mean(z - w) = mean(w) + (z - mean(z)); exact on singletons.
        let len = block.len() as f64;
        let mean_w = (target(block.start) + target(block.end - 1)) / 2.0;
        let mean_z = perm[block.clone()].iter().map(|&i| z[i]).sum::<f64>() / len;
        for &i in &perm[block.clone()] {
            soft_ranks[i] = mean_w + (z[i] - mean_z);
        }
    }

    Ok(SoftRankResult {
        soft_ranks,
        perm,
        blocks,
        regularization_strength: eps,
    })
}

/// Vector-Jacobian product `Jᵀ·upstream` of [`soft_rank`].
///
/// In sorted coordinates the Jacobian is `(I − B) / ε` where `B` averages
/// within each PAV block, so every block of size one contributes nothing.
pub fn soft_rank_backward(
    result: &SoftRankResult,
    upstream: &[f64],
    config: &SoftRankConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    if upstream.len() != result.len() {
        return Err(Error::LengthMismatch {
            expected: result.len(),
            got: upstream.len(),
        });
    }
    if config.regularization_strength != result.regularization_strength {
        return Err(Error::Config(format!(
            "soft rank computed with ε = {}, backward called with ε = {}",
            result.regularization_strength, config.regularization_strength
        )));
    }
    let inv_eps = 1.0 / config.regularization_strength;
    let mut grad = vec![0.0; upstream.len()];
    for block in &result.blocks {
        if block.len() == 1 {
            continue;
        }
        let idx = &result.perm[block.clone()];
        let mean = idx.iter().map(|&i| upstream[i]).sum::<f64>() / block.len() as f64;
        for &i in idx {
            grad[i] = (upstream[i] - mean) * inv_eps;
        }
    }
    Ok(grad)
}
