use super::{check_inputs, BatchLabels, LossOutput, LossWeights};
use crate::error::Result;
use crate::softsort::{soft_rank, soft_rank_backward, SoftRankConfig};

/// Negative weighted sum of soft AUCs.
///
/// Each objective's term is the rank-sum AUC evaluated on soft ranks,
/// `(⟨r, y_m⟩ − P_m(P_m+1)/2) / (P_m·N_m)`. One soft-rank evaluation is
/// shared by all objectives, so forward is `O(n log n)` and the gradient
/// costs one extra `O(n)` pass.
pub fn rank_auc_loss(
    scores: &[f64],
    batch: &BatchLabels,
    weights: &LossWeights,
    cfg: &SoftRankConfig,
) -> Result<LossOutput> {
    check_inputs(scores, batch, weights)?;
    let n = scores.len();
    let ranks = soft_rank(scores, cfg)?;

    let mut loss = 0.0;
    // dloss/dr
    let mut upstream = vec![0.0; n];
    let mut any = false;
    for (m, &w) in weights.as_slice().iter().enumerate() {
        let col = batch.column(m);
        let (pos, neg) = batch.class_counts(m);
        if pos == 0 || neg == 0 {
            continue;
        }
        any = true;
        let (p, q) = (pos as f64, neg as f64);
        let norm = p * q;
        let dot: f64 = ranks
            .soft_ranks
            .iter()
            .zip(col)
            .filter(|(_, &y)| y == 1)
            .map(|(r, _)| r)
            .sum();
        loss -= w * (dot - p * (p + 1.0) / 2.0) / norm;
        let coef = w / norm;
        for (u, &y) in upstream.iter_mut().zip(col) {
            if y == 1 {
                *u -= coef;
            }
        }
    }
    let grad = if any {
        soft_rank_backward(&ranks, &upstream, cfg)?
    } else {
        vec![0.0; n]
    };
    Ok(LossOutput { loss, grad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::auc_report;

    #[test]
    fn hard_limit_equals_auc_sum() {
        let scores = [0.3, 0.1, 0.7, 0.2, 0.9, 0.5];
        let batch = BatchLabels::from_columns(vec![vec![0, 0, 1, 0, 1, 1], vec![1, 0, 0, 1, 0, 1]])
            .unwrap();
        let out = rank_auc_loss(
            &scores,
            &batch,
            &LossWeights::uniform(2),
            &SoftRankConfig::new(1e-6).unwrap(),
        )
        .unwrap();
        let rep = auc_report(&scores, &batch).unwrap();
        assert!((out.loss + rep.sum).abs() < 1e-12);
    }

    #[test]
    fn degenerate_objective_contributes_nothing() {
        let scores = [0.3, 0.1, 0.7, 0.2];
        let cfg = SoftRankConfig::new(0.5).unwrap();
        let one = BatchLabels::from_columns(vec![vec![0, 1, 1, 0]]).unwrap();
        let two = BatchLabels::from_columns(vec![vec![0, 1, 1, 0], vec![0; 4]]).unwrap();
        let a = rank_auc_loss(&scores, &one, &LossWeights::uniform(1), &cfg).unwrap();
        let b = rank_auc_loss(&scores, &two, &LossWeights::uniform(2), &cfg).unwrap();
        assert_eq!(a, b);

        let none = BatchLabels::from_columns(vec![vec![1; 4]]).unwrap();
        let c = rank_auc_loss(&scores, &none, &LossWeights::uniform(1), &cfg).unwrap();
        assert_eq!(c.loss, 0.0);
        assert_eq!(c.grad, vec![0.0; 4]);
    }

    #[test]
    fn rejects_non_finite() {
        let batch = BatchLabels::from_columns(vec![vec![0, 1]]).unwrap();
        assert!(rank_auc_loss(
            &[0.0, f64::INFINITY],
            &batch,
            &LossWeights::uniform(1),
            &SoftRankConfig::default()
        )
        .is_err());
    }
}
