//! The dual-path ensemble network.
//!
//! Per sample, each upstream score is bucketized and embedded with its own
//! table, giving an `M × d` token matrix `x`. Three additive paths read it:
//!
//! - relation-aware (`s1`): self-attention across objectives, then a
//!   cross-attention whose query comes from the personalized features;
//! - gated (`s2`): a sigmoid gate per objective scales that objective's
//!   embedding block before a linear read-out;
//! - linear (`s3`): first-order fusion of the raw scores (or embeddings).
//!
//! The ensemble score is `s = s1 + s2 + s3`. Forward caches every activation
//! the manual backward pass needs.

mod backward;
mod checkpoint;
mod forward;
mod params;

pub use backward::backward;
pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint,
};
pub use forward::{
    attention_logits, bucket_index, discretize, forward, forward_sample, relation_agnostic_forward,
    relation_aware_forward, ForwardTrace, RelationAgnosticOutput, RelationAwareOutput, SampleTrace,
};
pub use params::{init_params, ModelParams, Tensor};

use serde::{Deserialize, Serialize};

use crate::data::{FeatureSchema, Schema};
use crate::error::{Error, Result};

/// Input of the linear fusion path.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearInput {
    #[default]
    RawScores,
    Embeddings,
}

/// Component switches. Everything on is the full model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablation {
    /// Off: `x_r = x`.
    pub self_attention: bool,
    /// Off: `s1` is an affine read-out of `[p ; flatten(x_r)]`.
    pub cross_attention: bool,
    /// Off: the cross-attention query comes from a constant input, i.e. a
    /// learned static query.
    pub personalized: bool,
    /// Off: gate fixed at 1.
    pub gate: bool,
    /// Off: `s3 = b3`.
    pub linear_path: bool,
    /// Off: `s1 = b1`.
    pub relation_aware_path: bool,
    /// Off: `s2 = b2`.
    pub gated_path: bool,
}

impl Default for Ablation {
    fn default() -> Self {
        Self {
            self_attention: true,
            cross_attention: true,
            personalized: true,
            gate: true,
            linear_path: true,
            relation_aware_path: true,
            gated_path: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub num_objectives: usize,
    pub buckets: usize,
    pub embed_dim: usize,
    pub key_dim: usize,
    /// Width of each personalized feature embedding.
    pub feature_dim: usize,
    pub personalized_features: Vec<FeatureSchema>,
    pub ablation: Ablation,
    pub linear_path_input: LinearInput,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            num_objectives: 2,
            buckets: 300,
            embed_dim: 8,
            key_dim: 8,
            feature_dim: 4,
            personalized_features: Vec::new(),
            ablation: Ablation::default(),
            linear_path_input: LinearInput::RawScores,
        }
    }
}

impl ModelConfig {
    /// Default widths with objectives and features taken from a schema.
    pub fn for_schema(schema: &Schema) -> Self {
        Self {
            num_objectives: schema.num_objectives(),
            personalized_features: schema.features.clone(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_objectives < 2 {
            return Err(Error::Config(
                "the ensemble needs at least 2 objectives".into(),
            ));
        }
        if self.buckets < 2 {
            return Err(Error::Config("bucket count must be at least 2".into()));
        }
        if self.embed_dim == 0 || self.key_dim == 0 || self.feature_dim == 0 {
            return Err(Error::Config(
                "embedding and key widths must be positive".into(),
            ));
        }
        if let Some(f) = self
            .personalized_features
            .iter()
            .find(|f| f.cardinality == 0)
        {
            return Err(Error::Config(format!(
                "feature {} has zero cardinality",
                f.name
            )));
        }
        Ok(())
    }

    /// Checks that a dataset schema fits this model.
    pub fn check_schema(&self, schema: &Schema) -> Result<()> {
        if schema.num_objectives() != self.num_objectives {
            return Err(Error::Shape(format!(
                "model has {} objectives, data has {}",
                self.num_objectives,
                schema.num_objectives()
            )));
        }
        if schema.num_features() != self.personalized_features.len() {
            return Err(Error::Shape(format!(
                "model has {} personalized features, data has {}",
                self.personalized_features.len(),
                schema.num_features()
            )));
        }
        for (a, b) in self.personalized_features.iter().zip(&schema.features) {
            if b.cardinality > a.cardinality {
                return Err(Error::Shape(format!(
                    "feature {} has cardinality {} in data but {} in model",
                    b.name, b.cardinality, a.cardinality
                )));
            }
        }
        Ok(())
    }

    fn uses_features(&self) -> bool {
        self.ablation.personalized && !self.personalized_features.is_empty()
    }

    /// Width of the personalized vector `p` (1 for the constant stand-in).
    pub fn query_input_dim(&self) -> usize {
        if self.uses_features() {
            self.personalized_features.len() * self.feature_dim
        } else {
            1
        }
    }

    /// Width of a row of `x_r`.
    pub fn mixed_dim(&self) -> usize {
        if self.ablation.self_attention {
            self.key_dim
        } else {
            self.embed_dim
        }
    }

    fn w1_len(&self) -> usize {
        if self.ablation.cross_attention {
            self.key_dim
        } else {
            self.query_input_dim() + self.num_objectives * self.mixed_dim()
        }
    }

    fn w3_len(&self) -> usize {
        match self.linear_path_input {
            LinearInput::RawScores => self.num_objectives,
            LinearInput::Embeddings => self.num_objectives * self.embed_dim,
        }
    }
}
