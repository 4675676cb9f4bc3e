use std::hint::black_box;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{loss_step, LossKind, LossState};
use crate::error::{Error, Result};
use crate::losses::{BatchLabels, LossWeights};
use crate::rng;
use crate::softsort::SoftRankConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub n_values: Vec<usize>,
    pub losses: Vec<LossKind>,
    /// Timed rounds per cell; the median is reported.
    pub repeats: usize,
    /// Each round loops until at least this long.
    pub min_round_ms: u64,
    pub num_objectives: usize,
    pub positive_rate: f64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n_values: vec![1024, 4096, 16384],
            losses: vec![
                LossKind::RankAuc,
                LossKind::PairwiseLogistic,
                LossKind::Mbce,
            ],
            repeats: 5,
            min_round_ms: 50,
            num_objectives: 1,
            positive_rate: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub loss: LossKind,
    pub n: usize,
    pub seconds_per_call: f64,
    pub samples_per_sec: f64,
    /// `time(n)/time(n/4)` when `n/4` was also measured.
    pub growth_ratio: Option<f64>,
}

/// A random batch: standard-normal scores, Bernoulli labels with at least
/// one positive and one negative per objective.
pub fn random_batch(
    n: usize,
    m: usize,
    positive_rate: f64,
    seed: u64,
) -> Result<(Vec<f64>, BatchLabels)> {
    if n < 2 {
        return Err(Error::Config("bench batches need n ≥ 2".into()));
    }
    let mut rng = rng::stream(seed, &format!("bench/{n}"));
    let scores = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let columns = (0..m)
        .map(|_| {
            let mut col: Vec<u8> = (0..n)
                .map(|_| rng.random_bool(positive_rate) as u8)
                .collect();
            col[0] = 1;
            col[1] = 0;
            col
        })
        .collect();
    Ok((scores, BatchLabels::from_columns(columns)?))
}

fn time_call(
    mut f: impl FnMut() -> Result<()>,
    repeats: usize,
    min_round: Duration,
) -> Result<f64> {
    f()?;
    let mut rounds = Vec::with_capacity(repeats);
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let mut calls = 0u32;
        while calls == 0 || start.elapsed() < min_round {
            f()?;
            calls += 1;
        }
        rounds.push(start.elapsed().as_secs_f64() / f64::from(calls));
    }
    rounds.sort_by(f64::total_cmp);
    Ok(rounds[rounds.len() / 2])
}

/// Times one loss forward + backward per cell.
pub fn bench_losses(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if !(cfg.positive_rate > 0.0 && cfg.positive_rate < 1.0) {
        return Err(Error::Config("positive_rate must lie in (0, 1)".into()));
    }
    let m = cfg.num_objectives.max(1);
    let weights = LossWeights::uniform(m);
    let softrank = SoftRankConfig::default();
    let mut rows: Vec<BenchRow> = Vec::new();
    for &loss in &cfg.losses {
        for &n in &cfg.n_values {
            let (scores, labels) = random_batch(n, m, cfg.positive_rate, cfg.seed)?;
            let mut state = LossState::new(loss, &vec![cfg.positive_rate; m], 1.0)?;
            let secs = time_call(
                || {
                    black_box(loss_step(
                        loss, &scores, &labels, &weights, &softrank, &mut state, 0.0,
                    )?);
                    Ok(())
                },
                cfg.repeats,
                Duration::from_millis(cfg.min_round_ms),
            )?;
            let growth_ratio = rows
                .iter()
                .find(|r| r.loss == loss && r.n * 4 == n)
                .map(|r| secs / r.seconds_per_call);
            rows.push(BenchRow {
                loss,
                n,
                seconds_per_call: secs,
                samples_per_sec: n as f64 / secs,
                growth_ratio,
            });
        }
    }
    Ok(rows)
}
