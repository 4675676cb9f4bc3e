use super::{LinearInput, ModelConfig, ModelParams};
use crate::data::Sample;
use crate::error::{Error, Result};
use crate::losses::sigmoid;

/// `min(floor(s·B), B−1)`; `s` must already lie in `[0, 1]`.
pub fn bucket_index(score: f64, buckets: usize) -> usize {
    ((score * buckets as f64).floor() as usize).min(buckets - 1)
}

/// Token matrix `x` (row-major `M × d`), the bucket indices, and how many
/// scores had to be clamped into `[0, 1]`.
pub fn discretize(
    scores: &[f64],
    params: &ModelParams,
    cfg: &ModelConfig,
) -> Result<(Vec<f64>, Vec<usize>, usize)> {
    if scores.len() != cfg.num_objectives {
        return Err(Error::Shape(format!(
            "expected {} scores, got {}",
            cfg.num_objectives,
            scores.len()
        )));
    }
    let mut x = Vec::with_capacity(cfg.num_objectives * cfg.embed_dim);
    let mut idx = Vec::with_capacity(cfg.num_objectives);
    let mut clamped = 0;
    for (m, &s) in scores.iter().enumerate() {
        if !s.is_finite() {
            return Err(Error::NonFinite);
        }
        if !(0.0..=1.0).contains(&s) {
            clamped += 1;
        }
        let k = bucket_index(s.clamp(0.0, 1.0), cfg.buckets);
        x.extend_from_slice(params.embeddings[m].row(k));
        idx.push(k);
    }
    Ok((x, idx, clamped))
}

fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// `out[r, j] = Σ_i a[r, i]·w[i, j]` for row-major `a: rows × inner`.
fn matmul(a: &[f64], rows: usize, inner: usize, w: &[f64], cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        let orow = &mut out[r * cols..(r + 1) * cols];
        for i in 0..inner {
            let v = a[r * inner + i];
            if v == 0.0 {
                continue;
            }
            let wrow = &w[i * cols..(i + 1) * cols];
            for (o, &wv) in orow.iter_mut().zip(wrow) {
                *o += v * wv;
            }
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Activations of the relation-aware path for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationAwareOutput {
    pub s1: f64,
    /// `M × M`, row-stochastic. Identity when self-attention is off.
    pub attn_self: Vec<f64>,
    /// `M`, sums to 1. Empty when cross-attention is off.
    pub attn_cross: Vec<f64>,
    pub q: Vec<f64>,
    pub k: Vec<f64>,
    pub v: Vec<f64>,
    /// `x_r`, `M × mixed_dim`.
    pub mixed: Vec<f64>,
    pub q_cross: Vec<f64>,
    pub k_cross: Vec<f64>,
    pub v_cross: Vec<f64>,
    /// `A_p·V_p` (cross-attention) or `[p ; flatten(x_r)]` (concat variant).
    pub readout: Vec<f64>,
}

pub fn relation_aware_forward(
    x: &[f64],
    personal: &[f64],
    params: &ModelParams,
    cfg: &ModelConfig,
) -> Result<RelationAwareOutput> {
    let (m, d, dk) = (cfg.num_objectives, cfg.embed_dim, cfg.key_dim);
    if x.len() != m * d {
        return Err(Error::Shape(format!(
            "x has {} entries, want {}",
            x.len(),
            m * d
        )));
    }
    if personal.len() != cfg.query_input_dim() {
        return Err(Error::Shape(format!(
            "personalized vector has {} entries, want {}",
            personal.len(),
            cfg.query_input_dim()
        )));
    }
    let scale = 1.0 / (dk as f64).sqrt();
    let ab = cfg.ablation;

    let (q, k, v, attn_self, mixed) = if ab.self_attention {
        let q = matmul(x, m, d, &params.w_q_self.data, dk);
        let k = matmul(x, m, d, &params.w_k_self.data, dk);
        let v = matmul(x, m, d, &params.w_v_self.data, dk);
        let mut attn = vec![0.0; m * m];
        for a in 0..m {
            let row = &mut attn[a * m..(a + 1) * m];
            for (b, r) in row.iter_mut().enumerate() {
                *r = dot(&q[a * dk..(a + 1) * dk], &k[b * dk..(b + 1) * dk]) * scale;
            }
            softmax_in_place(row);
        }
        let mixed = matmul(&attn, m, m, &v, dk);
        (q, k, v, attn, mixed)
    } else {
        let mut eye = vec![0.0; m * m];
        for a in 0..m {
            eye[a * m + a] = 1.0;
        }
        (Vec::new(), Vec::new(), Vec::new(), eye, x.to_vec())
    };
    let xd = cfg.mixed_dim();

    let mut out = RelationAwareOutput {
        s1: params.b1.data[0],
        attn_self,
        attn_cross: Vec::new(),
        q,
        k,
        v,
        mixed,
        q_cross: Vec::new(),
        k_cross: Vec::new(),
        v_cross: Vec::new(),
        readout: Vec::new(),
    };
    if ab.cross_attention {
        let qc = matmul(personal, 1, personal.len(), &params.w_q_cross.data, dk);
        let kc = matmul(&out.mixed, m, xd, &params.w_k_cross.data, dk);
        let vc = matmul(&out.mixed, m, xd, &params.w_v_cross.data, dk);
        let mut attn: Vec<f64> = (0..m)
            .map(|a| dot(&kc[a * dk..(a + 1) * dk], &qc) * scale)
            .collect();
        softmax_in_place(&mut attn);
        let readout = matmul(&attn, 1, m, &vc, dk);
        out.s1 += dot(&params.w1.data, &readout);
        out.attn_cross = attn;
        out.q_cross = qc;
        out.k_cross = kc;
        out.v_cross = vc;
        out.readout = readout;
    } else {
        let mut h = Vec::with_capacity(personal.len() + out.mixed.len());
        h.extend_from_slice(personal);
        h.extend_from_slice(&out.mixed);
        out.s1 += dot(&params.w1.data, &h);
        out.readout = h;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationAgnosticOutput {
    pub s2: f64,
    pub s3: f64,
    pub gate: Vec<f64>,
    /// Per-objective read-outs `w2_m·x_m` before gating.
    pub block_out: Vec<f64>,
}

pub fn relation_agnostic_forward(
    x: &[f64],
    raw_scores: &[f64],
    params: &ModelParams,
    cfg: &ModelConfig,
) -> Result<RelationAgnosticOutput> {
    let (m, d) = (cfg.num_objectives, cfg.embed_dim);
    if x.len() != m * d || raw_scores.len() != m {
        return Err(Error::Shape(format!(
            "relation-agnostic inputs: x {} (want {}), scores {} (want {m})",
            x.len(),
            m * d,
            raw_scores.len()
        )));
    }
    let ab = cfg.ablation;
    let mut gate = vec![1.0; m];
    let mut block_out = vec![0.0; m];
    let mut s2 = params.b2.data[0];
    if ab.gated_path {
        if ab.gate {
            for (j, g) in gate.iter_mut().enumerate() {
                *g = sigmoid(dot(params.w_gate.row(j), x) + params.b_gate.data[j]);
            }
        }
        for j in 0..m {
            let blk = j * d..(j + 1) * d;
            block_out[j] = dot(&params.w2.data[blk.clone()], &x[blk]);
            s2 += gate[j] * block_out[j];
        }
    }
    let mut s3 = params.b3.data[0];
    if ab.linear_path {
        s3 += match cfg.linear_path_input {
            LinearInput::RawScores => dot(&params.w3.data, raw_scores),
            LinearInput::Embeddings => dot(&params.w3.data, x),
        };
    }
    Ok(RelationAgnosticOutput {
        s2,
        s3,
        gate,
        block_out,
    })
}

/// Everything one sample's backward pass needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTrace {
    /// Scores after clamping into `[0, 1]`.
    pub raw: Vec<f64>,
    pub buckets: Vec<usize>,
    pub features: Vec<u32>,
    pub x: Vec<f64>,
    pub personal: Vec<f64>,
    pub aware: RelationAwareOutput,
    pub agnostic: RelationAgnosticOutput,
    pub s: f64,
}

impl SampleTrace {
    pub fn s1(&self) -> f64 {
        self.aware.s1
    }
    pub fn s2(&self) -> f64 {
        self.agnostic.s2
    }
    pub fn s3(&self) -> f64 {
        self.agnostic.s3
    }
}

/// Traces of one batch, tagged with the parameter version they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub version: u64,
    pub samples: Vec<SampleTrace>,
    /// Scores outside `[0, 1]` that were clamped.
    pub clamped: usize,
}

fn personal_vector(features: &[u32], params: &ModelParams, cfg: &ModelConfig) -> Result<Vec<f64>> {
    if features.len() != cfg.personalized_features.len() {
        return Err(Error::Shape(format!(
            "expected {} personalized features, got {}",
            cfg.personalized_features.len(),
            features.len()
        )));
    }
    if !cfg.uses_features() {
        return Ok(vec![1.0]);
    }
    let mut p = Vec::with_capacity(cfg.query_input_dim());
    for (f, &id) in features.iter().enumerate() {
        let table = &params.feature_tables[f];
        if id as usize >= table.shape[0] {
            return Err(Error::Shape(format!(
                "feature {} id {id} outside table of {}",
                cfg.personalized_features[f].name, table.shape[0]
            )));
        }
        p.extend_from_slice(table.row(id as usize));
    }
    Ok(p)
}

pub fn forward_sample(
    scores: &[f64],
    features: &[u32],
    params: &ModelParams,
    cfg: &ModelConfig,
) -> Result<(SampleTrace, usize)> {
    let (x, buckets, clamped) = discretize(scores, params, cfg)?;
    let raw: Vec<f64> = scores.iter().map(|s| s.clamp(0.0, 1.0)).collect();
    let personal = personal_vector(features, params, cfg)?;
    let aware = if cfg.ablation.relation_aware_path {
        relation_aware_forward(&x, &personal, params, cfg)?
    } else {
        RelationAwareOutput {
            s1: params.b1.data[0],
            attn_self: Vec::new(),
            attn_cross: Vec::new(),
            q: Vec::new(),
            k: Vec::new(),
            v: Vec::new(),
            mixed: Vec::new(),
            q_cross: Vec::new(),
            k_cross: Vec::new(),
            v_cross: Vec::new(),
            readout: Vec::new(),
        }
    };
    let agnostic = relation_agnostic_forward(&x, &raw, params, cfg)?;
    let s = aware.s1 + agnostic.s2 + agnostic.s3;
    Ok((
        SampleTrace {
            raw,
            buckets,
            features: features.to_vec(),
            x,
            personal,
            aware,
            agnostic,
            s,
        },
        clamped,
    ))
}

/// Scores for a batch plus the traces for [`super::backward`].
pub fn forward<'a, I>(
    samples: I,
    params: &ModelParams,
    cfg: &ModelConfig,
) -> Result<(Vec<f64>, ForwardTrace)>
where
    I: IntoIterator<Item = &'a Sample>,
{
    let mut traces = Vec::new();
    let mut scores = Vec::new();
    let mut clamped = 0;
    for sample in samples {
        let (t, c) = forward_sample(&sample.scores, &sample.features, params, cfg)?;
        clamped += c;
        scores.push(t.s);
        traces.push(t);
    }
    Ok((
        scores,
        ForwardTrace {
            version: params.version,
            samples: traces,
            clamped,
        },
    ))
}

/// Raw self-attention logits `Q_r K_rᵀ / √d_k` (row-major `M × M`) for one
/// sample, before any normalization.
pub fn attention_logits(
    sample: &Sample,
    params: &ModelParams,
    cfg: &ModelConfig,
) -> Result<Vec<f64>> {
    let (m, d, dk) = (cfg.num_objectives, cfg.embed_dim, cfg.key_dim);
    let (x, _, _) = discretize(&sample.scores, params, cfg)?;
    let q = matmul(&x, m, d, &params.w_q_self.data, dk);
    let k = matmul(&x, m, d, &params.w_k_self.data, dk);
    let scale = 1.0 / (dk as f64).sqrt();
    let mut out = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            out[a * m + b] = dot(&q[a * dk..(a + 1) * dk], &k[b * dk..(b + 1) * dk]) * scale;
        }
    }
    Ok(out)
}
