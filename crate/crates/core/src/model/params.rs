use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ModelConfig;
use crate::error::{Error, Result};
use crate::rng;

/// Dense row-major tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    fn uniform<R: Rng>(shape: &[usize], bound: f64, rng: &mut R) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: (0..len).map(|_| rng.random_range(-bound..=bound)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row `r` of a 2-D tensor.
    pub fn row(&self, r: usize) -> &[f64] {
        let w = self.shape[1];
        &self.data[r * w..(r + 1) * w]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let w = self.shape[1];
        &mut self.data[r * w..(r + 1) * w]
    }
}

/// All trainable tensors. A gradient record uses the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// One `[B, d]` table per objective.
    pub embeddings: Vec<Tensor>,
    /// One `[cardinality, feature_dim]` table per personalized feature.
    pub feature_tables: Vec<Tensor>,
    pub w_q_self: Tensor,
    pub w_k_self: Tensor,
    pub w_v_self: Tensor,
    pub w_q_cross: Tensor,
    pub w_k_cross: Tensor,
    pub w_v_cross: Tensor,
    pub w1: Tensor,
    pub b1: Tensor,
    pub w_gate: Tensor,
    pub b_gate: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
    pub w3: Tensor,
    pub b3: Tensor,
    /// Bumped on every in-place update; traces record it.
    pub version: u64,
}

impl ModelParams {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let (m, d, dk) = (cfg.num_objectives, cfg.embed_dim, cfg.key_dim);
        Self {
            embeddings: (0..m).map(|_| Tensor::zeros(&[cfg.buckets, d])).collect(),
            feature_tables: cfg
                .personalized_features
                .iter()
                .map(|f| Tensor::zeros(&[f.cardinality as usize, cfg.feature_dim]))
                .collect(),
            w_q_self: Tensor::zeros(&[d, dk]),
            w_k_self: Tensor::zeros(&[d, dk]),
            w_v_self: Tensor::zeros(&[d, dk]),
            w_q_cross: Tensor::zeros(&[cfg.query_input_dim(), dk]),
            w_k_cross: Tensor::zeros(&[cfg.mixed_dim(), dk]),
            w_v_cross: Tensor::zeros(&[cfg.mixed_dim(), dk]),
            w1: Tensor::zeros(&[cfg.w1_len()]),
            b1: Tensor::zeros(&[1]),
            w_gate: Tensor::zeros(&[m, m * d]),
            b_gate: Tensor::zeros(&[m]),
            w2: Tensor::zeros(&[m * d]),
            b2: Tensor::zeros(&[1]),
            w3: Tensor::zeros(&[cfg.w3_len()]),
            b3: Tensor::zeros(&[1]),
            version: 0,
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        for (_, t) in out.named_tensors_mut() {
            t.data.fill(0.0);
        }
        out.version = 0;
        out
    }

    /// Tensors in a fixed order with stable names.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out: Vec<(String, &Tensor)> = Vec::new();
        for (m, t) in self.embeddings.iter().enumerate() {
            out.push((format!("embedding.{m}"), t));
        }
        for (f, t) in self.feature_tables.iter().enumerate() {
            out.push((format!("feature.{f}"), t));
        }
        out.extend([
            ("w_q_self".to_string(), &self.w_q_self),
            ("w_k_self".to_string(), &self.w_k_self),
            ("w_v_self".to_string(), &self.w_v_self),
            ("w_q_cross".to_string(), &self.w_q_cross),
            ("w_k_cross".to_string(), &self.w_k_cross),
            ("w_v_cross".to_string(), &self.w_v_cross),
            ("w1".to_string(), &self.w1),
            ("b1".to_string(), &self.b1),
            ("w_gate".to_string(), &self.w_gate),
            ("b_gate".to_string(), &self.b_gate),
            ("w2".to_string(), &self.w2),
            ("b2".to_string(), &self.b2),
            ("w3".to_string(), &self.w3),
            ("b3".to_string(), &self.b3),
        ]);
        out
    }

    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out: Vec<(String, &mut Tensor)> = Vec::new();
        for (m, t) in self.embeddings.iter_mut().enumerate() {
            out.push((format!("embedding.{m}"), t));
        }
        for (f, t) in self.feature_tables.iter_mut().enumerate() {
            out.push((format!("feature.{f}"), t));
        }
        out.extend([
            ("w_q_self".to_string(), &mut self.w_q_self),
            ("w_k_self".to_string(), &mut self.w_k_self),
            ("w_v_self".to_string(), &mut self.w_v_self),
            ("w_q_cross".to_string(), &mut self.w_q_cross),
            ("w_k_cross".to_string(), &mut self.w_k_cross),
            ("w_v_cross".to_string(), &mut self.w_v_cross),
            ("w1".to_string(), &mut self.w1),
            ("b1".to_string(), &mut self.b1),
            ("w_gate".to_string(), &mut self.w_gate),
            ("b_gate".to_string(), &mut self.b_gate),
            ("w2".to_string(), &mut self.w2),
            ("b2".to_string(), &mut self.b2),
            ("w3".to_string(), &mut self.w3),
            ("b3".to_string(), &mut self.b3),
        ]);
        out
    }

    pub fn num_scalars(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// `self += alpha · other`; bumps the version.
    pub fn axpy(&mut self, alpha: f64, other: &ModelParams) -> Result<()> {
        let theirs = other.named_tensors();
        let mine = self.named_tensors_mut();
        if mine.len() != theirs.len() {
            return Err(Error::Shape("parameter sets differ in tensor count".into()));
        }
        for ((name, a), (_, b)) in mine.into_iter().zip(theirs) {
            if a.shape != b.shape {
                return Err(Error::Shape(format!(
                    "{name}: {:?} vs {:?}",
                    a.shape, b.shape
                )));
            }
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += alpha * y;
            }
        }
        self.version += 1;
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.named_tensors()
            .iter()
            .all(|(_, t)| t.data.iter().all(|v| v.is_finite()))
    }

    /// Checks tensor shapes against a config.
    pub fn check_shapes(&self, cfg: &ModelConfig) -> Result<()> {
        let want = ModelParams::zeros(cfg);
        let have = self.named_tensors();
        let want = want.named_tensors();
        if have.len() != want.len() {
            return Err(Error::Shape(format!(
                "expected {} tensors, found {}",
                want.len(),
                have.len()
            )));
        }
        for ((name, a), (_, b)) in have.iter().zip(&want) {
            if a.shape != b.shape {
                return Err(Error::Shape(format!(
                    "{name}: expected {:?}, found {:?}",
                    b.shape, a.shape
                )));
            }
        }
        Ok(())
    }
}

/// Projections and read-outs are uniform in `±1/√fan_in`, embedding tables
/// uniform in `±0.05`, biases zero. Every tensor draws from its own named
/// stream, so tensors shared by two ablation variants start identical.
pub fn init_params(cfg: &ModelConfig, seed: u64) -> Result<ModelParams> {
    cfg.validate()?;
    let mut p = ModelParams::zeros(cfg);
    let qin = cfg.query_input_dim() as f64;
    let mixed = cfg.mixed_dim() as f64;
    let flat = (cfg.num_objectives * cfg.embed_dim) as f64;
    let d = cfg.embed_dim as f64;
    let (w1_len, w3_len) = (cfg.w1_len() as f64, cfg.w3_len() as f64);
    for (name, t) in p.named_tensors_mut() {
        let bound = match name.as_str() {
            n if n.starts_with("embedding.") || n.starts_with("feature.") => 0.05,
            "w_q_self" | "w_k_self" | "w_v_self" => 1.0 / d.sqrt(),
            "w_q_cross" => 1.0 / qin.sqrt(),
            "w_k_cross" | "w_v_cross" => 1.0 / mixed.sqrt(),
            "w1" => 1.0 / w1_len.sqrt(),
            "w_gate" | "w2" => 1.0 / flat.sqrt(),
            "w3" => 1.0 / w3_len.sqrt(),
            _ => continue,
        };
        let mut rng = rng::stream(seed, &format!("model/init/{name}"));
        let shape = t.shape.clone();
        *t = Tensor::uniform(&shape, bound, &mut rng);
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_init_is_reproducible() {
        let cfg = ModelConfig::default();
        let a = init_params(&cfg, 1).unwrap();
        assert_eq!(a, init_params(&cfg, 1).unwrap());
        assert_ne!(a, init_params(&cfg, 2).unwrap());
        assert_eq!(a.b1.data, vec![0.0]);
        assert!(a.embeddings[0].data.iter().all(|v| v.abs() <= 0.05));
        let bound = 1.0 / (cfg.embed_dim as f64).sqrt();
        assert!(a.w_q_self.data.iter().all(|v| v.abs() <= bound + 1e-15));
    }

    #[test]
    fn axpy_bumps_version_and_checks_shapes() {
        let cfg = ModelConfig::default();
        let mut a = init_params(&cfg, 1).unwrap();
        let g = a.clone();
        a.axpy(-1.0, &g).unwrap();
        assert_eq!(a.version, 1);
        assert!(a
            .named_tensors()
            .iter()
            .all(|(_, t)| t.data.iter().all(|v| *v == 0.0)));
        let other = ModelParams::zeros(&ModelConfig {
            embed_dim: 3,
            ..cfg
        });
        assert!(a.axpy(1.0, &other).is_err());
    }
}
