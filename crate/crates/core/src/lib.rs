//! Ranking-aligned multi-objective score ensembling.
//!
//! The crate fuses per-objective upstream scores into one ranking score and
//! trains the fusion model directly on the sum of per-objective AUCs:
//!
//! - [`softsort`]: soft ranks by projection onto the permutahedron.
//! - [`losses`]: exact AUC, the rank-sum AUC loss, and baseline losses.
//! - [`model`]: the dual-path ensemble network with a manual backward pass.
//! - [`data`]: synthetic impression logs, CSV I/O, splits and batching.
//! - [`experiments`]: training, evaluation, and the analysis suite.

#![allow(clippy::needless_range_loop)]

pub mod data;
pub mod error;
pub mod experiments;
pub mod losses;
pub mod model;
pub mod rng;
pub mod softsort;
pub mod stats;

pub use error::{Error, Result};
pub use losses::{AucReport, BatchLabels, LossWeights};
pub use softsort::{soft_rank, soft_rank_backward, SoftRankConfig, SoftRankResult};
