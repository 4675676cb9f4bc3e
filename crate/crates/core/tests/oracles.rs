mod common;

use harmonrank::losses::{exact_auc, rank_auc_loss, BatchLabels, LossWeights};
use harmonrank::stats::{pearson, spearman};
use harmonrank::{soft_rank, SoftRankConfig};
use proptest::prelude::*;

#[test]
fn rank_sum_auc_matches_pairwise_count() {
    common::check_auc_identity(1000).unwrap();
}

#[test]
fn projections_match_exhaustive_oracles() {
    common::check_projection_oracles(200).unwrap();
}

#[test]
fn soft_ranks_stay_in_the_permutahedron() {
    common::check_permutahedron_invariants(1000).unwrap();
}

#[test]
fn loss_gradients_match_finite_differences() {
    common::check_loss_gradients(30).unwrap();
}

#[test]
fn model_gradients_match_finite_differences() {
    common::check_model_gradients().unwrap();
}

#[test]
fn rank_loss_reaches_exact_auc_sum_in_the_hard_limit() {
    common::check_surrogate_limit(200).unwrap();
}

#[test]
fn spearman_matches_rank_then_pearson_oracle() {
    let mut r = common::rng(7);
    for _ in 0..200 {
        let n = rand::Rng::random_range(&mut r, 3..=100);
        let x = common::tied_scores(n, &mut r);
        let y = common::tied_scores(n, &mut r);
        // Brute-force mid-ranks: 1 + #smaller + (#equal − 1)/2.
        let rank = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .map(|a| {
                    let less = v.iter().filter(|b| *b < a).count() as f64;
                    let eq = v.iter().filter(|b| *b == a).count() as f64;
                    1.0 + less + (eq - 1.0) / 2.0
                })
                .collect()
        };
        match (spearman(&x, &y), pearson(&rank(&x), &rank(&y))) {
            (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12),
            (a, b) => assert_eq!(a, b),
        }
    }
}

fn batch_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (2usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(0u8..=1, n).prop_map(|mut y| {
                y[0] = 1;
                y[1] = 0;
                y
            }),
        )
    })
}

proptest! {
    #[test]
    fn auc_is_invariant_to_monotone_transforms((s, y) in batch_strategy()) {
        let t: Vec<f64> = s.iter().map(|v| (v / 2.0).exp()).collect();
        let a = exact_auc(&s, &y).unwrap();
        let b = exact_auc(&t, &y).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn soft_rank_is_translation_invariant((s, _y) in batch_strategy(), shift in -3.0f64..3.0, eps in 0.05f64..3.0) {
        let cfg = SoftRankConfig::new(eps).unwrap();
        let a = soft_rank(&s, &cfg).unwrap();
        let moved: Vec<f64> = s.iter().map(|v| v + shift).collect();
        let b = soft_rank(&moved, &cfg).unwrap();
        for (x, y) in a.soft_ranks.iter().zip(&b.soft_ranks) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn rank_loss_is_linear_in_weights((s, y) in batch_strategy(), w1 in 0.1f64..3.0, w2 in 0.1f64..3.0) {
        let cfg = SoftRankConfig::new(0.5).unwrap();
        let batch = BatchLabels::from_columns(vec![y.clone(), y.iter().map(|v| 1 - v).collect()]).unwrap();
        let both = rank_auc_loss(&s, &batch, &LossWeights::new(vec![w1, w2]).unwrap(), &cfg).unwrap();
        let first = rank_auc_loss(&s, &batch, &LossWeights::new(vec![w1, 1e-300]).unwrap(), &cfg).unwrap();
        let second = rank_auc_loss(&s, &batch, &LossWeights::new(vec![1e-300, w2]).unwrap(), &cfg).unwrap();
        prop_assert!((both.loss - first.loss - second.loss).abs() < 1e-9);
        for k in 0..s.len() {
            prop_assert!((both.grad[k] - first.grad[k] - second.grad[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn soft_rank_sum_is_constant(s in prop::collection::vec(-10.0f64..10.0, 1..64), eps in 0.01f64..10.0) {
        let r = soft_rank(&s, &SoftRankConfig::new(eps).unwrap()).unwrap();
        let n = s.len() as f64;
        prop_assert!((r.soft_ranks.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-8 * n * n);
        prop_assert!(common::majorization_violation(&r.soft_ranks) < 1e-8 * n * n);
    }
}
