//! Training, evaluation and the analysis suite.

mod analysis;
mod bench;
mod pareto;
mod skew;
mod train;

pub use analysis::{
    attention_analysis, mean_attention, permutation_test, AnalysisConfig, AnalysisResult, PairSet,
};
pub use bench::{bench_losses, random_batch, BenchConfig, BenchRow};
pub use pareto::{dominates, mark_front, pair_front, pareto_sweep, ParetoPoint};
pub use skew::{skew_experiment, SkewConfig, SkewRow};
pub use train::{
    evaluate, loss_step, predict, train, train_from, EpochRecord, LossKind, LossState, TrainConfig,
    TrainMode, TrainOutcome,
};
