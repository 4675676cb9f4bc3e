use serde::{Deserialize, Serialize};

use super::BatchLabels;
use crate::error::{Error, Result};
use crate::stats::mid_ranks;

/// How a tied positive/negative pair is credited.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieMode {
    /// Ties count 0.5 (Mann-Whitney convention).
    #[default]
    MidRank,
    /// Ties count 1, i.e. `𝕀(s_pos ≥ s_neg)`.
    Inclusive,
}

/// Per-objective AUC and their sum over the objectives that are defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucReport {
    /// `None` where the column has no positive or no negative.
    pub per_objective: Vec<Option<f64>>,
    pub sum: f64,
}

impl AucReport {
    pub fn has_degenerate(&self) -> bool {
        self.per_objective.iter().any(Option::is_none)
    }

    pub fn degenerate_objectives(&self) -> Vec<usize> {
        self.per_objective
            .iter()
            .enumerate()
            .filter_map(|(m, v)| v.is_none().then_some(m))
            .collect()
    }
}

pub fn exact_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    exact_auc_with(scores, labels, TieMode::MidRank)
}

/// Exact AUC in `O(n log n)`.
///
/// With [`TieMode::MidRank`] this is the rank-sum identity
/// `(Σ_{pos} r_i − P(P+1)/2) / (P·N)` on ascending mid-ranks.
pub fn exact_auc_with(scores: &[f64], labels: &[u8], ties: TieMode) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite);
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateLabels);
    }
    let (p, q) = (pos as f64, neg as f64);
    match ties {
        TieMode::MidRank => {
            let ranks = mid_ranks(scores);
            let rank_sum: f64 = ranks
                .iter()
                .zip(labels)
                .filter(|(_, &y)| y == 1)
                .map(|(r, _)| r)
                .sum();
            Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * q))
        }
        TieMode::Inclusive => {
            let mut order: Vec<usize> = (0..scores.len()).collect();
            order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
            let mut negs_below = 0usize;
            let mut credit = 0usize;
            let mut start = 0;
            while start < order.len() {
                let mut end = start;
                let (mut gp, mut gn) = (0, 0);
                while end < order.len() && scores[order[end]] == scores[order[start]] {
                    if labels[order[end]] == 1 {
                        gp += 1;
                    } else {
                        gn += 1;
                    }
                    end += 1;
                }
                credit += gp * (negs_below + gn);
                negs_below += gn;
                start = end;
            }
            Ok(credit as f64 / (p * q))
        }
    }
}

/// AUC of one score vector against every objective column. Degenerate
/// columns are reported as `None` and left out of the sum.
pub fn auc_report(scores: &[f64], batch: &BatchLabels) -> Result<AucReport> {
    if scores.len() != batch.len() {
        return Err(Error::LengthMismatch {
            expected: batch.len(),
            got: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite);
    }
    // Rank once, reuse across objectives.
    let ranks = mid_ranks(scores);
    let per_objective: Vec<Option<f64>> = batch
        .columns()
        .iter()
        .map(|col| {
            let (mut pos, mut rank_sum) = (0usize, 0.0);
            for (r, &y) in ranks.iter().zip(col) {
                if y == 1 {
                    pos += 1;
                    rank_sum += r;
                }
            }
            let neg = col.len() - pos;
            if pos == 0 || neg == 0 {
                return None;
            }
            let (p, q) = (pos as f64, neg as f64);
            Some((rank_sum - p * (p + 1.0) / 2.0) / (p * q))
        })
        .collect();
    let sum = per_objective.iter().flatten().sum();
    Ok(AucReport { per_objective, sum })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairwise(scores: &[f64], labels: &[u8], tie: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if labels[i] == 1 && labels[j] == 0 {
                    den += 1.0;
                    if scores[i] > scores[j] {
                        num += 1.0;
                    } else if scores[i] == scores[j] {
                        num += tie;
                    }
                }
            }
        }
        num / den
    }

    #[test]
    fn worked_example() {
        let s = [0.1, 0.4, 0.35, 0.8];
        let y = [0, 0, 1, 1];
        assert_eq!(exact_auc(&s, &y).unwrap(), 0.75);
        assert_eq!(pairwise(&s, &y, 0.5), 0.75);
    }

    #[test]
    fn perfect_and_all_tied() {
        assert_eq!(
            exact_auc(&[0.0, 0.2, 0.9, 1.5], &[0, 0, 1, 1]).unwrap(),
            1.0
        );
        assert_eq!(exact_auc(&[0.3; 6], &[0, 1, 0, 1, 0, 1]).unwrap(), 0.5);
        assert_eq!(
            exact_auc_with(&[0.3; 6], &[0, 1, 0, 1, 0, 1], TieMode::Inclusive).unwrap(),
            1.0
        );
    }

    #[test]
    fn inclusive_matches_pairwise() {
        let s = [0.1, 0.4, 0.4, 0.2, 0.4, 0.1];
        let y = [1, 0, 1, 0, 1, 0];
        let got = exact_auc_with(&s, &y, TieMode::Inclusive).unwrap();
        assert!((got - pairwise(&s, &y, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn degenerate() {
        assert!(matches!(
            exact_auc(&[0.1, 0.2], &[1, 1]),
            Err(Error::DegenerateLabels)
        ));
        let err = exact_auc(&[0.1, 0.2], &[0, 0]).unwrap_err();
        assert!(err.to_string().contains("degenerate labels"));
    }

    #[test]
    fn report_flags_degenerate_columns() {
        let batch = BatchLabels::from_columns(vec![vec![0, 1, 1], vec![0, 0, 0]]).unwrap();
        let rep = auc_report(&[0.1, 0.2, 0.3], &batch).unwrap();
        assert_eq!(rep.per_objective, vec![Some(1.0), None]);
        assert_eq!(rep.sum, 1.0);
        assert_eq!(rep.degenerate_objectives(), vec![1]);
    }

    #[test]
    fn report_single_objective_matches_exact() {
        let s = [0.1, 0.4, 0.35, 0.8, 0.4];
        let y = vec![0, 1, 1, 0, 0];
        let batch = BatchLabels::from_columns(vec![y.clone()]).unwrap();
        let rep = auc_report(&s, &batch).unwrap();
        assert_eq!(rep.sum, exact_auc(&s, &y).unwrap());
    }
}
