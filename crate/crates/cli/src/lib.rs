//! Command-line driver for `harmonrank`.
//!
//! Commands: `gen-data`, `train`, `eval`, `sweep`, `analyze`, `skew`,
//! `bench`. Every command takes `--config`, `--seed` and `--out`. Results
//! go to the output directory; the wall-clock timestamp lives only in
//! `meta.json`, so result files are byte-identical across reruns.
//!
//! | command    | writes                                                   |
//! |------------|----------------------------------------------------------|
//! | `gen-data` | `data.csv`, `data.json` (schema, positive rates, ρ)      |
//! | `train`    | `model.ckpt`, `metrics.json`, `history.jsonl`            |
//! | `eval`     | `metrics.json`                                           |
//! | `sweep`    | `pareto.csv`: `w_<obj>`…, `auc_<obj>`…, `on_front`       |
//! | `analyze`  | `analysis.json`: rho, attention, pearson_r, p_value      |
//! | `skew`     | `skew.csv`: loss, ratio, auc_sum, rel_drop_pct           |
//! | `bench`    | `bench.csv`: loss, n, samples_per_sec, growth_ratio      |

mod commands;
pub mod config;
mod error;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::RunConfig;
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "harmonrank",
    version,
    about = "Ranking-aligned multi-objective score ensembling"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Global seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic impression log.
    GenData,
    /// Train on the train split and report held-out AUCs.
    Train {
        /// Input CSV; overrides `data.path`.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Evaluate a checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
    },
    /// Train once per loss-weight vector and mark the Pareto front.
    Sweep {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Compare learned attention with label correlations.
    Analyze {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "all")]
        split: SplitArg,
    },
    /// Label-skew robustness of each loss.
    Skew,
    /// Loss throughput against batch size.
    Bench,
}

/// Parses arguments and runs the command.
pub fn run_from<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    run(cli)
}

pub fn run(cli: Cli) -> Result<()> {
    let base = match &cli.common.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let cfg = base.resolve(cli.common.seed, cli.common.out.clone())?;
    commands::dispatch(&cfg, &cli.command)
}
