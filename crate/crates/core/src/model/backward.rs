//! Reverse pass of the ensemble network.

use super::{ForwardTrace, LinearInput, ModelConfig, ModelParams, SampleTrace};
use crate::error::{Error, Result};

/// Gradients of `Σ_i dl_ds[i]·s_i` with respect to every parameter.
/// Embedding gradients touch only the looked-up rows.
pub fn backward(
    trace: &ForwardTrace,
    dl_ds: &[f64],
    params: &ModelParams,
    cfg: &ModelConfig,
) -> Result<ModelParams> {
    if trace.version != params.version {
        return Err(Error::StaleTrace {
            trace: trace.version,
            current: params.version,
        });
    }
    if dl_ds.len() != trace.samples.len() {
        return Err(Error::LengthMismatch {
            expected: trace.samples.len(),
            got: dl_ds.len(),
        });
    }
    let mut grads = params.zeros_like();
    let mut scratch = Scratch::new(cfg);
    for (t, &g) in trace.samples.iter().zip(dl_ds) {
        if g == 0.0 {
            continue;
        }
        accumulate(t, g, params, cfg, &mut grads, &mut scratch);
    }
    Ok(grads)
}

struct Scratch {
    dx: Vec<f64>,
    dmixed: Vec<f64>,
    dp: Vec<f64>,
}

impl Scratch {
    fn new(cfg: &ModelConfig) -> Self {
        Self {
            dx: vec![0.0; cfg.num_objectives * cfg.embed_dim],
            dmixed: vec![0.0; cfg.num_objectives * cfg.mixed_dim()],
            dp: vec![0.0; cfg.query_input_dim()],
        }
    }
}

fn accumulate(
    t: &SampleTrace,
    g: f64,
    params: &ModelParams,
    cfg: &ModelConfig,
    grads: &mut ModelParams,
    scratch: &mut Scratch,
) {
    let (m, d, dk) = (cfg.num_objectives, cfg.embed_dim, cfg.key_dim);
    let xd = cfg.mixed_dim();
    let ab = cfg.ablation;
    let scale = 1.0 / (dk as f64).sqrt();
    let Scratch { dx, dmixed, dp } = scratch;
    dx.fill(0.0);
    dmixed.fill(0.0);
    dp.fill(0.0);

    grads.b1.data[0] += g;
    grads.b2.data[0] += g;
    grads.b3.data[0] += g;

    // s3
    if ab.linear_path {
        match cfg.linear_path_input {
            LinearInput::RawScores => {
                for (gw, r) in grads.w3.data.iter_mut().zip(&t.raw) {
                    *gw += g * r;
                }
            }
            LinearInput::Embeddings => {
                for ((gw, xv), (w, dxv)) in grads
                    .w3
                    .data
                    .iter_mut()
                    .zip(&t.x)
                    .zip(params.w3.data.iter().zip(dx.iter_mut()))
                {
                    *gw += g * xv;
                    *dxv += g * w;
                }
            }
        }
    }

    // s2
    if ab.gated_path {
        let gate = &t.agnostic.gate;
        for j in 0..m {
            let blk = j * d..(j + 1) * d;
            for i in blk {
                grads.w2.data[i] += g * gate[j] * t.x[i];
                dx[i] += g * gate[j] * params.w2.data[i];
            }
        }
        if ab.gate {
            let flat = m * d;
            for j in 0..m {
                let gj = gate[j];
                let dz = g * t.agnostic.block_out[j] * gj * (1.0 - gj);
                grads.b_gate.data[j] += dz;
                let grow = &mut grads.w_gate.data[j * flat..(j + 1) * flat];
                let wrow = &params.w_gate.data[j * flat..(j + 1) * flat];
                for i in 0..flat {
                    grow[i] += dz * t.x[i];
                    dx[i] += dz * wrow[i];
                }
            }
        }
    }

    // s1
    if ab.relation_aware_path {
        let aw = &t.aware;
        if ab.cross_attention {
            for (gw, r) in grads.w1.data.iter_mut().zip(&aw.readout) {
                *gw += g * r;
            }
            // readout = Σ_a attn[a]·v_cross[a]
            let dread: Vec<f64> = params.w1.data.iter().map(|w| g * w).collect();
            let mut dattn = vec![0.0; m];
            let mut dv_cross = vec![0.0; m * dk];
            for a in 0..m {
                let vrow = &aw.v_cross[a * dk..(a + 1) * dk];
                dattn[a] = vrow.iter().zip(&dread).map(|(v, r)| v * r).sum();
                for j in 0..dk {
                    dv_cross[a * dk + j] = aw.attn_cross[a] * dread[j];
                }
            }
            let inner: f64 = aw.attn_cross.iter().zip(&dattn).map(|(p, q)| p * q).sum();
            let dlogit: Vec<f64> = aw
                .attn_cross
                .iter()
                .zip(&dattn)
                .map(|(p, q)| p * (q - inner))
                .collect();
            let mut dq = vec![0.0; dk];
            let mut dk_cross = vec![0.0; m * dk];
            for a in 0..m {
                for j in 0..dk {
                    dk_cross[a * dk + j] = dlogit[a] * aw.q_cross[j] * scale;
                    dq[j] += dlogit[a] * aw.k_cross[a * dk + j] * scale;
                }
            }
            // q_cross = p · W_qc
            let qin = t.personal.len();
            for i in 0..qin {
                let row = &mut grads.w_q_cross.data[i * dk..(i + 1) * dk];
                let wrow = &params.w_q_cross.data[i * dk..(i + 1) * dk];
                for j in 0..dk {
                    row[j] += t.personal[i] * dq[j];
                    dp[i] += wrow[j] * dq[j];
                }
            }
            // k_cross = x_r · W_kc, v_cross = x_r · W_vc
            for (dout, w, gw) in [
                (&dk_cross, &params.w_k_cross, &mut grads.w_k_cross),
                (&dv_cross, &params.w_v_cross, &mut grads.w_v_cross),
            ] {
                for a in 0..m {
                    for i in 0..xd {
                        let xv = aw.mixed[a * xd + i];
                        let mut acc = 0.0;
                        for j in 0..dk {
                            let dv = dout[a * dk + j];
                            gw.data[i * dk + j] += xv * dv;
                            acc += w.data[i * dk + j] * dv;
                        }
                        dmixed[a * xd + i] += acc;
                    }
                }
            }
        } else {
            let qin = t.personal.len();
            for (gw, h) in grads.w1.data.iter_mut().zip(&aw.readout) {
                *gw += g * h;
            }
            for i in 0..qin {
                dp[i] += g * params.w1.data[i];
            }
            for (k, dm) in dmixed.iter_mut().enumerate() {
                *dm += g * params.w1.data[qin + k];
            }
        }

        if ab.self_attention {
            // mixed = A · V
            let attn = &aw.attn_self;
            let mut dattn = vec![0.0; m * m];
            let mut dv = vec![0.0; m * dk];
            for a in 0..m {
                for b in 0..m {
                    let vrow = &aw.v[b * dk..(b + 1) * dk];
                    let drow = &dmixed[a * dk..(a + 1) * dk];
                    dattn[a * m + b] = vrow.iter().zip(drow).map(|(x, y)| x * y).sum();
                    let w = attn[a * m + b];
                    for j in 0..dk {
                        dv[b * dk + j] += w * drow[j];
                    }
                }
            }
            let mut dlogit = vec![0.0; m * m];
            for a in 0..m {
                let row = &attn[a * m..(a + 1) * m];
                let drow = &dattn[a * m..(a + 1) * m];
                let inner: f64 = row.iter().zip(drow).map(|(p, q)| p * q).sum();
                for b in 0..m {
                    dlogit[a * m + b] = row[b] * (drow[b] - inner);
                }
            }
            let mut dq = vec![0.0; m * dk];
            let mut dkk = vec![0.0; m * dk];
            for a in 0..m {
                for b in 0..m {
                    let dl = dlogit[a * m + b] * scale;
                    if dl == 0.0 {
                        continue;
                    }
                    for j in 0..dk {
                        dq[a * dk + j] += dl * aw.k[b * dk + j];
                        dkk[b * dk + j] += dl * aw.q[a * dk + j];
                    }
                }
            }
            for (dout, w, gw) in [
                (&dq, &params.w_q_self, &mut grads.w_q_self),
                (&dkk, &params.w_k_self, &mut grads.w_k_self),
                (&dv, &params.w_v_self, &mut grads.w_v_self),
            ] {
                for a in 0..m {
                    for i in 0..d {
                        let xv = t.x[a * d + i];
                        let mut acc = 0.0;
                        for j in 0..dk {
                            let dval = dout[a * dk + j];
                            gw.data[i * dk + j] += xv * dval;
                            acc += w.data[i * dk + j] * dval;
                        }
                        dx[a * d + i] += acc;
                    }
                }
            }
        } else {
            for (a, b) in dx.iter_mut().zip(dmixed.iter()) {
                *a += b;
            }
        }

        if cfg.uses_features() {
            let fd = cfg.feature_dim;
            for (f, &id) in t.features.iter().enumerate() {
                let row = grads.feature_tables[f].row_mut(id as usize);
                for (r, v) in row.iter_mut().zip(&dp[f * fd..(f + 1) * fd]) {
                    *r += v;
                }
            }
        }
    }

    for (j, &k) in t.buckets.iter().enumerate() {
        let row = grads.embeddings[j].row_mut(k);
        for (r, v) in row.iter_mut().zip(&dx[j * d..(j + 1) * d]) {
            *r += v;
        }
    }
}
