//! Latent-factor generator for multi-objective impression logs.
//!
//! Each impression draws a latent `z ~ N(0, I_k)`. Objective `m` has logit
//! `a_mᵀz + bias_m`; its label is Bernoulli on the (noisy) logit and its
//! upstream score is the sigmoid of an independently noised copy, standing in
//! for a prediction model that is informative but imperfect. Inter-objective
//! label correlation follows the cosine similarity of the loading rows.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{Dataset, FeatureSchema, Provenance, Sample, Schema};
use crate::error::{Error, Result};
use crate::losses::sigmoid;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureGenSpec {
    pub name: String,
    pub cardinality: u32,
    /// Correlation in `[0, 1]` between the feature's projection of `z` and
    /// the value that is quantized into a category.
    pub dependence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub num_samples: usize,
    pub objective_names: Vec<String>,
    /// One row `a_m` of length `k` per objective.
    pub loadings: Vec<Vec<f64>>,
    pub objective_bias: Vec<f64>,
    pub score_noise_sd: f64,
    pub label_noise_sd: f64,
    pub features: Vec<FeatureGenSpec>,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn num_objectives(&self) -> usize {
        self.objective_names.len()
    }

    pub fn latent_dim(&self) -> usize {
        self.loadings.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.num_objectives();
        if self.num_samples == 0 {
            return Err(Error::Config("num_samples must be at least 1".into()));
        }
        if m == 0 {
            return Err(Error::Config("at least one objective is required".into()));
        }
        if self.loadings.len() != m || self.objective_bias.len() != m {
            return Err(Error::Config(format!(
                "loadings ({}) and objective_bias ({}) must have one entry per objective ({m})",
                self.loadings.len(),
                self.objective_bias.len()
            )));
        }
        let k = self.latent_dim();
        if k == 0 || self.loadings.iter().any(|row| row.len() != k) {
            return Err(Error::Config(
                "loading rows must share a positive length".into(),
            ));
        }
        let finite = self
            .loadings
            .iter()
            .flatten()
            .chain(&self.objective_bias)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("loadings and biases must be finite".into()));
        }
        for sd in [self.score_noise_sd, self.label_noise_sd] {
            if !(sd.is_finite() && sd >= 0.0) {
                return Err(Error::Config(format!("noise sd {sd} must be non-negative")));
            }
        }
        for f in &self.features {
            if f.cardinality == 0 {
                return Err(Error::Config(format!(
                    "feature {} has zero cardinality",
                    f.name
                )));
            }
            if !(0.0..=1.0).contains(&f.dependence) {
                return Err(Error::Config(format!(
                    "feature {} dependence must lie in [0, 1]",
                    f.name
                )));
            }
        }
        Ok(())
    }

    /// Expected positive rate of each objective.
    pub fn expected_positive_rates(&self) -> Vec<f64> {
        self.loadings
            .iter()
            .zip(&self.objective_bias)
            .map(|(row, &b)| {
                let sd =
                    (row.iter().map(|v| v * v).sum::<f64>() + self.label_noise_sd.powi(2)).sqrt();
                mean_sigmoid(b, sd)
            })
            .collect()
    }

    pub fn schema(&self) -> Schema {
        Schema {
            objectives: self.objective_names.clone(),
            features: self
                .features
                .iter()
                .map(|f| FeatureSchema {
                    name: f.name.clone(),
                    cardinality: f.cardinality,
                })
                .collect(),
        }
    }

    /// Five objectives whose loadings form a similarity ladder to the first
    /// (`buy`): cosines 0.8, 0.6, 0.4, 0.2 for comment, long view, follow,
    /// like. Positive rates span 1:200 (buy) to 1:20 (long view).
    pub fn standard(seed: u64) -> Self {
        let names = ["buy", "comment", "long_view", "follow", "like"];
        let cosines: [f64; 5] = [1.0, 0.8, 0.6, 0.4, 0.2];
        let neg_per_pos = [200.0, 120.0, 20.0, 70.0, 40.0];
        let scale = 2.0;
        let k = names.len();
        let loadings: Vec<Vec<f64>> = cosines
            .iter()
            .enumerate()
            .map(|(m, &c)| {
                let mut row = vec![0.0; k];
                row[0] = scale * c;
                if m > 0 {
                    row[m] = scale * (1.0 - c * c).sqrt();
                }
                row
            })
            .collect();
        let label_noise_sd = 0.0;
        let objective_bias = neg_per_pos
            .iter()
            .map(|r| bias_for_rate(scale, label_noise_sd, 1.0 / (1.0 + r)))
            .collect();
        Self {
            num_samples: 60_000,
            objective_names: names.iter().map(|s| s.to_string()).collect(),
            loadings,
            objective_bias,
            score_noise_sd: 1.0,
            label_noise_sd,
            features: vec![
                FeatureGenSpec {
                    name: "age".into(),
                    cardinality: 8,
                    dependence: 0.7,
                },
                FeatureGenSpec {
                    name: "gender".into(),
                    cardinality: 2,
                    dependence: 0.5,
                },
                FeatureGenSpec {
                    name: "hour".into(),
                    cardinality: 6,
                    dependence: 0.3,
                },
            ],
            seed,
        }
    }
}

/// `E[σ(b + sd·Z)]` for standard normal `Z`, by Simpson's rule on ±10 sd.
fn mean_sigmoid(bias: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        return sigmoid(bias);
    }
    let steps = 2000;
    let (lo, hi) = (-10.0, 10.0);
    let h = (hi - lo) / steps as f64;
    let density = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let f = |z: f64| density(z) * sigmoid(bias + sd * z);
    let mut acc = f(lo) + f(hi);
    for i in 1..steps {
        let z = lo + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(z);
    }
    acc * h / 3.0
}

/// Bias giving expected positive rate `rate` when the logit has standard
/// deviation `sqrt(loading_norm² + label_noise_sd²)`.
pub fn bias_for_rate(loading_norm: f64, label_noise_sd: f64, rate: f64) -> f64 {
    let sd = (loading_norm * loading_norm + label_noise_sd * label_noise_sd).sqrt();
    let (mut lo, mut hi) = (-60.0, 60.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mean_sigmoid(mid, sd) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn generate(spec: &GeneratorSpec) -> Result<Dataset> {
    spec.validate()?;
    let k = spec.latent_dim();
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");

    // Feature directions: random unit vectors from their own stream.
    let mut dir_rng = rng::stream(spec.seed, "generator/feature-directions");
    let directions: Vec<Vec<f64>> = spec
        .features
        .iter()
        .map(|_| {
            let v: Vec<f64> = (0..k).map(|_| dir_rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect();

    let mut rng = rng::stream(spec.seed, "generator/samples");
    let mut samples = Vec::with_capacity(spec.num_samples);
    let mut z = vec![0.0; k];
    for _ in 0..spec.num_samples {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        let mut scores = Vec::with_capacity(spec.num_objectives());
        let mut labels = Vec::with_capacity(spec.num_objectives());
        for (row, &b) in spec.loadings.iter().zip(&spec.objective_bias) {
            let logit = row.iter().zip(&z).map(|(a, x)| a * x).sum::<f64>() + b;
            let label_noise: f64 = rng.sample(StandardNormal);
            let score_noise: f64 = rng.sample(StandardNormal);
            let p = sigmoid(logit + spec.label_noise_sd * label_noise);
            labels.push(u8::from(rng.random::<f64>() < p));
            scores.push(sigmoid(logit + spec.score_noise_sd * score_noise));
        }
        let mut features = Vec::with_capacity(spec.features.len());
        for (f, dir) in spec.features.iter().zip(&directions) {
            let proj = dir.iter().zip(&z).map(|(a, x)| a * x).sum::<f64>();
            let noise: f64 = rng.sample(StandardNormal);
            let v = f.dependence * proj + (1.0 - f.dependence * f.dependence).sqrt() * noise;
            let id = (std_normal.cdf(v) * f64::from(f.cardinality)).floor() as u32;
            features.push(id.min(f.cardinality - 1));
        }
        samples.push(Sample {
            scores,
            labels,
            features,
        });
    }
    Dataset::new(samples, spec.schema(), Provenance::Generated(spec.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(seed: u64) -> GeneratorSpec {
        GeneratorSpec {
            num_samples: 200,
            objective_names: vec!["a".into(), "b".into()],
            loadings: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            objective_bias: vec![-1.0, -2.0],
            score_noise_sd: 0.5,
            label_noise_sd: 0.1,
            features: vec![FeatureGenSpec {
                name: "f".into(),
                cardinality: 4,
                dependence: 0.5,
            }],
            seed,
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate(&tiny(4)).unwrap(), generate(&tiny(4)).unwrap());
        assert_ne!(generate(&tiny(4)).unwrap(), generate(&tiny(5)).unwrap());
    }

    #[test]
    fn invalid_specs() {
        let mut s = tiny(1);
        s.loadings.pop();
        assert!(generate(&s).is_err());
        let mut s = tiny(1);
        s.num_samples = 0;
        assert!(s.validate().is_err());
        let mut s = tiny(1);
        s.features[0].dependence = 1.5;
        assert!(s.validate().is_err());
    }

    #[test]
    fn bias_for_rate_inverts_mean_sigmoid() {
        for rate in [0.005, 0.05, 0.3] {
            let b = bias_for_rate(2.0, 0.5, rate);
            assert!((mean_sigmoid(b, (4.25f64).sqrt()) - rate).abs() < 1e-9);
        }
        assert!((bias_for_rate(0.0, 0.0, 0.25) - (1.0f64 / 3.0).ln()).abs() < 1e-9);
    }

    #[test]
    fn standard_spec_is_valid() {
        let s = GeneratorSpec::standard(1);
        s.validate().unwrap();
        let rates = s.expected_positive_rates();
        assert!((rates[0] - 1.0 / 201.0).abs() < 1e-9);
        assert!((rates[2] - 1.0 / 21.0).abs() < 1e-9);
    }
}
