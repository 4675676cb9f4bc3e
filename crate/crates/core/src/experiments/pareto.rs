use serde::{Deserialize, Serialize};

use super::{evaluate, train, TrainConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::ModelConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub weights: Vec<f64>,
    /// Held-out AUC per objective; `NaN` where undefined.
    pub auc: Vec<f64>,
    pub on_front: bool,
}

/// `a` dominates `b`: at least as good everywhere and better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y) && a.iter().zip(b).any(|(x, y)| x > y)
}

/// Sets `on_front` for every point.
pub fn mark_front(points: &mut [ParetoPoint]) {
    let flags: Vec<bool> = (0..points.len())
        .map(|i| {
            !points
                .iter()
                .enumerate()
                .any(|(j, q)| j != i && dominates(&q.auc, &points[i].auc))
        })
        .collect();
    for (p, f) in points.iter_mut().zip(flags) {
        p.on_front = f;
    }
}

/// Indices of the 2-D front on objectives `(a, b)`, sorted by AUC on `a`.
pub fn pair_front(points: &[ParetoPoint], a: usize, b: usize) -> Vec<usize> {
    let proj = |p: &ParetoPoint| [p.auc[a], p.auc[b]];
    let mut idx: Vec<usize> = (0..points.len())
        .filter(|&i| {
            !points
                .iter()
                .enumerate()
                .any(|(j, q)| j != i && dominates(&proj(q), &proj(&points[i])))
        })
        .collect();
    idx.sort_by(|&i, &j| points[i].auc[a].total_cmp(&points[j].auc[a]));
    idx
}

/// Trains one model per weight vector and marks the non-dominated points.
pub fn pareto_sweep(
    train_set: &Dataset,
    test_set: &Dataset,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    grid: &[Vec<f64>],
) -> Result<Vec<ParetoPoint>> {
    if grid.is_empty() {
        return Err(Error::Config("weight grid is empty".into()));
    }
    let mut points = Vec::with_capacity(grid.len());
    for w in grid {
        let run = TrainConfig {
            weights: w.clone(),
            ..cfg.clone()
        };
        let out = train(train_set, None, model_cfg, &run)?;
        let report = evaluate(&out.params, model_cfg, test_set)?;
        points.push(ParetoPoint {
            weights: w.clone(),
            auc: report
                .per_objective
                .iter()
                .map(|v| v.unwrap_or(f64::NAN))
                .collect(),
            on_front: false,
        });
    }
    mark_front(&mut points);
    Ok(points)
}
