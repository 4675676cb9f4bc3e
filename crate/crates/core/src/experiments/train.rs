use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{batches, Dataset};
use crate::error::{Error, Result};
use crate::losses::{
    auc_report, aucm_step, label_agg_loss, mbce_loss, pairwise_logistic_loss, pairwise_square_loss,
    rank_auc_loss, AucReport, AucmState, BatchLabels, LossWeights, MbceHeads,
};
use crate::model::{backward, forward, init_params, ModelConfig, ModelParams};
use crate::rng;
use crate::softsort::SoftRankConfig;

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    RankAuc,
    Mbce,
    LabelAgg,
    PairwiseLogistic,
    PairwiseSquare,
    Aucm,
}

impl LossKind {
    pub const ALL: [LossKind; 6] = [
        LossKind::RankAuc,
        LossKind::Mbce,
        LossKind::LabelAgg,
        LossKind::PairwiseLogistic,
        LossKind::PairwiseSquare,
        LossKind::Aucm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::RankAuc => "rank_auc",
            LossKind::Mbce => "mbce",
            LossKind::LabelAgg => "label_agg",
            LossKind::PairwiseLogistic => "pairwise_logistic",
            LossKind::PairwiseSquare => "pairwise_square",
            LossKind::Aucm => "aucm",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown loss {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    /// `epochs` shuffled passes over the training split.
    #[default]
    Offline,
    /// One pass over contiguous chunks, each replayed
    /// `streaming_inner_epochs` times.
    Streaming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub lr: f64,
    /// Per-loss learning rates that take precedence over `lr`.
    pub lr_by_loss: BTreeMap<LossKind, f64>,
    pub batch_size: usize,
    pub epochs: usize,
    pub mode: TrainMode,
    pub streaming_inner_epochs: usize,
    /// Per-objective loss weights; empty means uniform.
    pub weights: Vec<f64>,
    pub softrank: SoftRankConfig,
    /// Heavy-ball coefficient; 0 is plain SGD.
    pub momentum: f64,
    pub aucm_margin: f64,
    /// Evaluate on the test split every this many epochs (0: only at the end).
    pub eval_every: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: LossKind::RankAuc,
            lr: 1e-4,
            lr_by_loss: BTreeMap::new(),
            batch_size: 10240,
            epochs: 500,
            mode: TrainMode::Offline,
            streaming_inner_epochs: 20,
            weights: Vec::new(),
            softrank: SoftRankConfig::default(),
            momentum: 0.0,
            aucm_margin: 1.0,
            eval_every: 0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        for (what, lr) in std::iter::once(("lr", self.lr))
            .chain(self.lr_by_loss.values().map(|&v| ("lr_by_loss", v)))
        {
            if !(lr.is_finite() && lr >= 0.0) {
                return Err(Error::Config(format!(
                    "{what} must be finite and non-negative"
                )));
            }
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.streaming_inner_epochs == 0 {
            return Err(Error::Config(
                "streaming_inner_epochs must be at least 1".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("momentum must lie in [0, 1)".into()));
        }
        self.softrank.validate()
    }

    /// Learning rate for the configured loss.
    pub fn effective_lr(&self) -> f64 {
        self.lr_by_loss.get(&self.loss).copied().unwrap_or(self.lr)
    }

    /// Same settings with a different loss.
    pub fn with_loss(&self, loss: LossKind) -> Self {
        Self {
            loss,
            ..self.clone()
        }
    }

    pub fn loss_weights(&self, m: usize) -> Result<LossWeights> {
        if self.weights.is_empty() {
            return Ok(LossWeights::uniform(m));
        }
        if self.weights.len() != m {
            return Err(Error::LengthMismatch {
                expected: m,
                got: self.weights.len(),
            });
        }
        LossWeights::new(self.weights.clone())
    }
}

/// Auxiliary parameters some losses carry between steps.
#[derive(Debug, Clone, PartialEq)]
pub enum LossState {
    None,
    Mbce(MbceHeads),
    Aucm(AucmState),
}

impl LossState {
    /// Fresh state for `kind`, using base rates from the training split.
    pub fn new(kind: LossKind, positive_rates: &[f64], aucm_margin: f64) -> Result<Self> {
        Ok(match kind {
            LossKind::Mbce => LossState::Mbce(MbceHeads::from_positive_rates(positive_rates)),
            LossKind::Aucm => LossState::Aucm(AucmState::with_margin(
                positive_rates.to_vec(),
                aucm_margin,
            )?),
            _ => LossState::None,
        })
    }
}

/// Loss value and `dL/ds` for one batch. Stateful losses update their own
/// auxiliary parameters with step size `lr`.
pub fn loss_step(
    kind: LossKind,
    scores: &[f64],
    batch: &BatchLabels,
    weights: &LossWeights,
    softrank: &SoftRankConfig,
    state: &mut LossState,
    lr: f64,
) -> Result<(f64, Vec<f64>)> {
    match (kind, state) {
        (LossKind::RankAuc, _) => {
            let out = rank_auc_loss(scores, batch, weights, softrank)?;
            Ok((out.loss, out.grad))
        }
        (LossKind::LabelAgg, _) => {
            let out = label_agg_loss(scores, batch, weights)?;
            Ok((out.loss, out.grad))
        }
        (LossKind::PairwiseLogistic, _) => {
            let out = pairwise_logistic_loss(scores, batch, weights)?;
            Ok((out.loss, out.grad))
        }
        (LossKind::PairwiseSquare, _) => {
            let out = pairwise_square_loss(scores, batch, weights)?;
            Ok((out.loss, out.grad))
        }
        (LossKind::Mbce, LossState::Mbce(heads)) => {
            let out = mbce_loss(scores, batch, weights, heads)?;
            for m in 0..heads.len() {
                heads.scale[m] -= lr * out.grad_heads.scale[m];
                heads.bias[m] -= lr * out.grad_heads.bias[m];
            }
            Ok((out.loss, out.grad_scores))
        }
        (LossKind::Aucm, LossState::Aucm(st)) => aucm_step(scores, batch, weights, st, lr),
        (kind, _) => Err(Error::Config(format!("loss {kind} is missing its state"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean batch loss over the epoch (or chunk, in streaming mode).
    pub train_loss: f64,
    pub updates: usize,
    pub test: Option<AucReport>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub history: Vec<EpochRecord>,
    pub updates: usize,
    pub loss_state: LossState,
    /// Scores outside `[0, 1]` clamped during training.
    pub clamped: usize,
}

impl TrainOutcome {
    pub fn final_loss(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |r| r.train_loss)
    }
}

/// Scores for every sample, processed in chunks.
pub fn predict(params: &ModelParams, cfg: &ModelConfig, dataset: &Dataset) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(dataset.len());
    for chunk in dataset.samples.chunks(4096) {
        let (s, _) = forward(chunk, params, cfg)?;
        out.extend(s);
    }
    Ok(out)
}

pub fn evaluate(params: &ModelParams, cfg: &ModelConfig, dataset: &Dataset) -> Result<AucReport> {
    let scores = predict(params, cfg, dataset)?;
    auc_report(&scores, &dataset.labels())
}

/// Plain SGD on the ensemble model. Initial parameters come from the
/// `model/init` stream of `cfg.seed`.
pub fn train(
    train_set: &Dataset,
    test_set: Option<&Dataset>,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let params = init_params(model_cfg, rng::sub_seed(cfg.seed, "model"))?;
    train_from(params, train_set, test_set, model_cfg, cfg)
}

/// Like [`train`] but starting from given parameters.
pub fn train_from(
    mut params: ModelParams,
    train_set: &Dataset,
    test_set: Option<&Dataset>,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    model_cfg.validate()?;
    params.check_shapes(model_cfg)?;
    model_cfg.check_schema(&train_set.schema)?;
    if train_set.is_empty() {
        return Err(Error::EmptyInput);
    }
    let m = model_cfg.num_objectives;
    let weights = cfg.loss_weights(m)?;
    let lr = cfg.effective_lr();
    let mut state = LossState::new(cfg.loss, &train_set.positive_rates(), cfg.aucm_margin)?;
    let mut velocity = (cfg.momentum > 0.0).then(|| params.zeros_like());

    let chunks = match cfg.mode {
        TrainMode::Offline => Vec::new(),
        TrainMode::Streaming => batches(train_set.len(), cfg.batch_size, None)?,
    };
    let total = match cfg.mode {
        TrainMode::Offline => cfg.epochs,
        TrainMode::Streaming => chunks.len(),
    };

    let mut history = Vec::with_capacity(total);
    let mut updates = 0;
    let mut clamped = 0;
    for epoch in 0..total {
        let epoch_batches = match cfg.mode {
            TrainMode::Offline => {
                let seed = rng::sub_seed(cfg.seed, &format!("train/epoch/{epoch}"));
                batches(train_set.len(), cfg.batch_size, Some(seed))?
            }
            TrainMode::Streaming => vec![chunks[epoch].clone(); cfg.streaming_inner_epochs],
        };
        let mut loss_sum = 0.0;
        let n_batches = epoch_batches.len();
        for (step, idx) in epoch_batches.iter().enumerate() {
            let labels = train_set.labels_for(idx);
            let samples = idx.iter().map(|&i| &train_set.samples[i]);
            let diverged = |e| match e {
                Error::NonFinite => Error::Diverged {
                    epoch,
                    step,
                    loss: f64::NAN,
                },
                e => e,
            };
            let (scores, trace) = forward(samples, &params, model_cfg).map_err(diverged)?;
            clamped += trace.clamped;
            let (loss, dl_ds) = loss_step(
                cfg.loss,
                &scores,
                &labels,
                &weights,
                &cfg.softrank,
                &mut state,
                lr,
            )
            .map_err(diverged)?;
            if !loss.is_finite() || dl_ds.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch, step, loss });
            }
            loss_sum += loss;
            let grads = backward(&trace, &dl_ds, &params, model_cfg)?;
            match velocity.as_mut() {
                Some(v) => {
                    let mut next = grads;
                    next.axpy(cfg.momentum, v)?;
                    *v = next;
                    params.axpy(-lr, v)?;
                }
                None => params.axpy(-lr, &grads)?,
            }
            if !params.all_finite() {
                return Err(Error::Diverged { epoch, step, loss });
            }
            updates += 1;
        }
        let last = epoch + 1 == total;
        let test = match test_set {
            Some(t) if last || (cfg.eval_every > 0 && (epoch + 1) % cfg.eval_every == 0) => {
                Some(evaluate(&params, model_cfg, t)?)
            }
            _ => None,
        };
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / n_batches as f64,
            updates,
            test,
        });
    }
    Ok(TrainOutcome {
        params,
        history,
        updates,
        loss_state: state,
        clamped,
    })
}
