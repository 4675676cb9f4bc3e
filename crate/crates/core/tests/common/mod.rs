//! Brute-force oracles and randomized checks shared by the integration
//! suites. Each `check_*` returns a one-line summary or the first failure.
#![allow(dead_code)]

use harmonrank::data::{FeatureSchema, Sample};
use harmonrank::losses::{
    aucm_objective, exact_auc, label_agg_loss, mbce_loss, pairwise_logistic_loss,
    pairwise_square_loss, rank_auc_loss, AucmState, BatchLabels, LossOutput, LossWeights,
    MbceHeads,
};
use harmonrank::model::{
    backward, forward, init_params, Ablation, LinearInput, ModelConfig, ModelParams,
};
use harmonrank::softsort::isotonic_regression;
use harmonrank::{soft_rank, soft_rank_backward, SoftRankConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// AUC by counting every positive/negative pair, ties credited 0.5.
pub fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for (i, &yi) in labels.iter().enumerate() {
        if yi != 1 {
            continue;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yj != 0 {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                num += 1.0;
            } else if scores[i] == scores[j] {
                num += 0.5;
            }
        }
    }
    num / pairs
}

/// Scores drawn from a small grid so ties are common.
pub fn tied_scores(n: usize, r: &mut ChaCha8Rng) -> Vec<f64> {
    let levels = r.random_range(1..=n.max(2));
    (0..n)
        .map(|_| r.random_range(0..levels) as f64 / levels as f64)
        .collect()
}

/// Labels with at least one positive and one negative.
pub fn mixed_labels(n: usize, r: &mut ChaCha8Rng) -> Vec<u8> {
    let mut y: Vec<u8> = (0..n).map(|_| r.random_bool(0.4) as u8).collect();
    y[0] = 1;
    y[1] = 0;
    y.shuffle(r);
    y
}

pub fn check_auc_identity(trials: usize) -> Check {
    let mut r = rng(101);
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let n = r.random_range(2..=64);
        let s = tied_scores(n, &mut r);
        let y = mixed_labels(n, &mut r);
        let got = exact_auc(&s, &y).map_err(|e| e.to_string())?;
        let want = pairwise_auc(&s, &y);
        let err = (got - want).abs();
        worst = worst.max(err);
        if err > 1e-12 {
            return Err(format!("trial {t}: rank-sum {got} vs pairwise {want}"));
        }
    }
    Ok(format!("{trials} batches, max error {worst:.1e}"))
}

/// Least-squares non-increasing fit by trying every contiguous partition.
pub fn isotonic_oracle(w: &[f64]) -> Vec<f64> {
    let n = w.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        let mut fit = vec![0.0; n];
        let mut start = 0;
        let mut prev = f64::INFINITY;
        let mut feasible = true;
        for end in 1..=n {
            if end == n || mask & (1 << (end - 1)) != 0 {
                let mean = w[start..end].iter().sum::<f64>() / (end - start) as f64;
                if mean > prev + 1e-12 {
                    feasible = false;
                    break;
                }
                prev = mean;
                fit[start..end].fill(mean);
                start = end;
            }
        }
        if !feasible {
            continue;
        }
        let sse: f64 = fit.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(b, _)| sse < *b) {
            best = Some((sse, fit));
        }
    }
    best.expect("a single block is always feasible").1
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..n {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

/// `r` is the projection of `z` onto the permutahedron iff it is feasible
/// and `⟨z − r, v − r⟩ ≤ 0` for every vertex `v`. Returns the largest
/// violation of either condition.
pub fn permutahedron_violation(z: &[f64], r: &[f64], vertices: &[Vec<usize>]) -> f64 {
    let n = z.len();
    let mut worst = majorization_violation(r);
    for perm in vertices {
        let inner: f64 = (0..n)
            .map(|i| (z[i] - r[i]) * ((perm[i] + 1) as f64 - r[i]))
            .sum();
        worst = worst.max(inner);
    }
    worst
}

/// How far `r` is from the permutahedron of `(1, …, n)`: the sum must be
/// `n(n+1)/2` and every top-k partial sum at most `n + … + (n−k+1)`.
pub fn majorization_violation(r: &[f64]) -> f64 {
    let n = r.len();
    let mut sorted = r.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut worst = (sorted.iter().sum::<f64>() - (n * (n + 1)) as f64 / 2.0).abs();
    let (mut acc, mut cap) = (0.0, 0.0);
    for (k, v) in sorted.iter().enumerate() {
        acc += v;
        cap += (n - k) as f64;
        worst = worst.max(acc - cap);
    }
    worst
}

pub fn check_projection_oracles(trials: usize) -> Check {
    let mut r = rng(202);
    let vertices: Vec<Vec<Vec<usize>>> = (0..=8).map(permutations).collect();
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let n = r.random_range(1..=8);
        let w: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
        let got = isotonic_regression(&w).map_err(|e| e.to_string())?;
        for (a, b) in got.iter().zip(isotonic_oracle(&w)) {
            worst = worst.max((a - b).abs());
        }
        if worst > 1e-9 {
            return Err(format!(
                "trial {t}: isotonic fit of {w:?} is off by {worst:.2e}"
            ));
        }

        let eps = [0.05, 0.5, 1.0, 5.0][r.random_range(0..4)];
        let s: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
        let ranks = soft_rank(&s, &SoftRankConfig::new(eps).unwrap()).map_err(|e| e.to_string())?;
        let z: Vec<f64> = s.iter().map(|v| v / eps).collect();

        // Projection by the sorted isotonic reduction, solved exhaustively.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| z[b].total_cmp(&z[a]));
        let y: Vec<f64> = order
            .iter()
            .enumerate()
            .map(|(k, &i)| z[i] - (n - k) as f64)
            .collect();
        let v = isotonic_oracle(&y);
        let mut want = vec![0.0; n];
        for (k, &i) in order.iter().enumerate() {
            want[i] = z[i] - v[k];
        }
        for (a, b) in ranks.soft_ranks.iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
        let viol = permutahedron_violation(&z, &ranks.soft_ranks, &vertices[n]);
        if worst > 1e-9 || viol > 1e-9 {
            return Err(format!(
                "trial {t}: soft rank of {s:?} at eps {eps}: error {worst:.2e}, optimality violation {viol:.2e}"
            ));
        }
    }
    Ok(format!(
        "{trials} instances with n <= 8, max error {worst:.1e}"
    ))
}

pub fn check_permutahedron_invariants(trials: usize) -> Check {
    let mut r = rng(303);
    for t in 0..trials {
        let n = r.random_range(1..=64);
        let eps = 10f64.powf(r.random_range(-3.0..1.0));
        let s: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
        let ranks = soft_rank(&s, &SoftRankConfig::new(eps).unwrap()).map_err(|e| e.to_string())?;
        let rr = &ranks.soft_ranks;
        let tol = 1e-9 * (n * n) as f64;
        let viol = majorization_violation(rr);
        if viol > tol {
            return Err(format!(
                "trial {t}: n={n} eps={eps} majorization violated by {viol:.2e}"
            ));
        }
        for i in 0..n {
            for j in 0..n {
                if s[i] > s[j] && rr[i] < rr[j] - 1e-9 {
                    return Err(format!("trial {t}: order not preserved at ({i}, {j})"));
                }
            }
        }
    }
    Ok(format!("{trials} instances with n <= 64"))
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Central differences of `f` at `x` along every coordinate.
fn numeric_grad(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut p = x.to_vec();
            p[i] += h;
            let fp = f(&p);
            p[i] -= 2.0 * h;
            let fm = f(&p);
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

fn compare(name: &str, analytic: &[f64], numeric: &[f64], tol: f64) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for (k, (a, n)) in analytic.iter().zip(numeric).enumerate() {
        let e = if a.abs().max(n.abs()) < 1e-9 {
            0.0
        } else {
            rel_err(*a, *n)
        };
        if e > tol {
            return Err(format!("{name}[{k}]: analytic {a} vs numeric {n}"));
        }
        worst = worst.max(e);
    }
    Ok(worst)
}

/// Distinct scores whose soft-rank block structure is stable under a
/// perturbation of `h`, so central differences do not straddle a kink.
fn kink_free_scores(n: usize, eps: f64, h: f64, r: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let s: Vec<f64> = (0..n)
            .map(|_| r.random_range(-1.0..1.0) * n as f64 * eps / 3.0)
            .collect();
        let cfg = SoftRankConfig::new(eps).unwrap();
        let base = soft_rank(&s, &cfg).unwrap();
        let stable = (0..n).all(|i| {
            [h, -h].iter().all(|d| {
                let mut p = s.clone();
                p[i] += d;
                let q = soft_rank(&p, &cfg).unwrap();
                q.blocks() == base.blocks() && q.perm() == base.perm()
            })
        });
        if stable {
            return s;
        }
    }
}

fn labels_matrix(n: usize, m: usize, r: &mut ChaCha8Rng) -> BatchLabels {
    BatchLabels::from_columns((0..m).map(|_| mixed_labels(n, r)).collect()).unwrap()
}

pub fn check_loss_gradients(trials: usize) -> Check {
    let mut r = rng(404);
    let h = 1e-6;
    let tol = 1e-4;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = r.random_range(4..=12);
        let m = r.random_range(1..=3);
        let batch = labels_matrix(n, m, &mut r);
        let weights = LossWeights::new((0..m).map(|_| r.random_range(0.2..2.0)).collect()).unwrap();

        // soft rank backward
        let eps = r.random_range(0.1..2.0);
        let cfg = SoftRankConfig::new(eps).unwrap();
        let s = kink_free_scores(n, eps, h, &mut r);
        let u: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let res = soft_rank(&s, &cfg).unwrap();
        let g = soft_rank_backward(&res, &u, &cfg).unwrap();
        let num = numeric_grad(&s, h, |x| {
            soft_rank(x, &cfg)
                .unwrap()
                .soft_ranks
                .iter()
                .zip(&u)
                .map(|(a, b)| a * b)
                .sum()
        });
        worst = worst.max(compare("soft_rank", &g, &num, tol)?);

        let out = rank_auc_loss(&s, &batch, &weights, &cfg).unwrap();
        let num = numeric_grad(&s, h, |x| {
            rank_auc_loss(x, &batch, &weights, &cfg).unwrap().loss
        });
        worst = worst.max(compare("rank_auc", &out.grad, &num, tol)?);

        let s: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
        type Plain = fn(&[f64], &BatchLabels, &LossWeights) -> harmonrank::Result<LossOutput>;
        let plain: [(&str, Plain); 3] = [
            ("label_agg", label_agg_loss),
            ("pairwise_logistic", pairwise_logistic_loss),
            ("pairwise_square", pairwise_square_loss),
        ];
        for (name, f) in plain {
            let out = f(&s, &batch, &weights).unwrap();
            let num = numeric_grad(&s, h, |x| f(x, &batch, &weights).unwrap().loss);
            worst = worst.max(compare(name, &out.grad, &num, tol)?);
        }

        let heads = MbceHeads {
            scale: (0..m).map(|_| r.random_range(0.5..2.0)).collect(),
            bias: (0..m).map(|_| r.random_range(-1.0..1.0)).collect(),
        };
        let out = mbce_loss(&s, &batch, &weights, &heads).unwrap();
        let num = numeric_grad(&s, h, |x| {
            mbce_loss(x, &batch, &weights, &heads).unwrap().loss
        });
        worst = worst.max(compare("mbce scores", &out.grad_scores, &num, tol)?);
        let hv: Vec<f64> = heads.scale.iter().chain(&heads.bias).copied().collect();
        let num = numeric_grad(&hv, h, |x| {
            let hh = MbceHeads {
                scale: x[..m].to_vec(),
                bias: x[m..].to_vec(),
            };
            mbce_loss(&s, &batch, &weights, &hh).unwrap().loss
        });
        let ana: Vec<f64> = out
            .grad_heads
            .scale
            .iter()
            .chain(&out.grad_heads.bias)
            .copied()
            .collect();
        worst = worst.max(compare("mbce heads", &ana, &num, tol)?);

        let mut state = AucmState::new((0..m).map(|_| r.random_range(0.1..0.9)).collect()).unwrap();
        for k in 0..m {
            state.a[k] = r.random_range(-1.0..1.0);
            state.b[k] = r.random_range(-1.0..1.0);
            state.alpha[k] = r.random_range(0.0..1.0);
        }
        let out = aucm_objective(&s, &batch, &weights, &state).unwrap();
        let num = numeric_grad(&s, h, |x| {
            aucm_objective(x, &batch, &weights, &state).unwrap().loss
        });
        worst = worst.max(compare("aucm scores", &out.grad_scores, &num, tol)?);
        let sv: Vec<f64> = state
            .a
            .iter()
            .chain(&state.b)
            .chain(&state.alpha)
            .copied()
            .collect();
        let num = numeric_grad(&sv, h, |x| {
            let mut st = state.clone();
            st.a = x[..m].to_vec();
            st.b = x[m..2 * m].to_vec();
            st.alpha = x[2 * m..].to_vec();
            aucm_objective(&s, &batch, &weights, &st).unwrap().loss
        });
        let ana: Vec<f64> = out
            .grad_a
            .iter()
            .chain(&out.grad_b)
            .chain(&out.grad_alpha)
            .copied()
            .collect();
        worst = worst.max(compare("aucm state", &ana, &num, tol)?);
    }
    Ok(format!(
        "{trials} instances per loss, max relative error {worst:.1e}"
    ))
}

pub fn micro_model_config(ablation: Ablation, linear: LinearInput) -> ModelConfig {
    ModelConfig {
        num_objectives: 3,
        buckets: 4,
        embed_dim: 2,
        key_dim: 2,
        feature_dim: 2,
        personalized_features: vec![
            FeatureSchema {
                name: "age".into(),
                cardinality: 3,
            },
            FeatureSchema {
                name: "gender".into(),
                cardinality: 2,
            },
        ],
        ablation,
        linear_path_input: linear,
    }
}

pub fn random_samples(cfg: &ModelConfig, n: usize, r: &mut ChaCha8Rng) -> Vec<Sample> {
    (0..n)
        .map(|_| Sample {
            scores: (0..cfg.num_objectives).map(|_| r.random::<f64>()).collect(),
            labels: vec![0; cfg.num_objectives],
            features: cfg
                .personalized_features
                .iter()
                .map(|f| r.random_range(0..f.cardinality))
                .collect(),
        })
        .collect()
}

/// Init, then every scalar redrawn from `U(−1, 1)` so all paths carry signal.
pub fn random_params(cfg: &ModelConfig, r: &mut ChaCha8Rng) -> ModelParams {
    let mut p = init_params(cfg, 3).unwrap();
    for (_, t) in p.named_tensors_mut() {
        for v in t.data.iter_mut() {
            *v = r.random_range(-1.0..1.0);
        }
    }
    p
}

/// Finite-difference check of every model parameter for `Σ_i c_i·s_i`.
pub fn model_gradient_check(
    ablation: Ablation,
    linear: LinearInput,
    seed: u64,
) -> Result<f64, String> {
    let cfg = micro_model_config(ablation, linear);
    let mut r = rng(seed);
    let samples = random_samples(&cfg, 4, &mut r);
    let params = random_params(&cfg, &mut r);
    let c: Vec<f64> = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
    let value = |p: &ModelParams| -> f64 {
        let (s, _) = forward(&samples, p, &cfg).unwrap();
        s.iter().zip(&c).map(|(a, b)| a * b).sum()
    };
    let (_, trace) = forward(&samples, &params, &cfg).unwrap();
    let grads = backward(&trace, &c, &params, &cfg).map_err(|e| e.to_string())?;
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    let named = grads.named_tensors();
    for (ti, (name, g)) in named.iter().enumerate() {
        for k in 0..g.len() {
            let mut plus = params.clone();
            plus.named_tensors_mut()[ti].1.data[k] += h;
            let mut minus = params.clone();
            minus.named_tensors_mut()[ti].1.data[k] -= h;
            let fd = (value(&plus) - value(&minus)) / (2.0 * h);
            let an = g.data[k];
            let e = (fd - an).abs() / fd.abs().max(an.abs()).max(1.0);
            if e > 1e-3 {
                return Err(format!(
                    "{name}[{k}]: analytic {an} vs numeric {fd} ({ablation:?})"
                ));
            }
            worst = worst.max(e);
        }
    }
    Ok(worst)
}

pub fn model_ablation_variants() -> Vec<(Ablation, LinearInput)> {
    let full = Ablation::default();
    vec![
        (full, LinearInput::RawScores),
        (full, LinearInput::Embeddings),
        (
            Ablation {
                self_attention: false,
                ..full
            },
            LinearInput::RawScores,
        ),
        (
            Ablation {
                cross_attention: false,
                ..full
            },
            LinearInput::RawScores,
        ),
        (
            Ablation {
                personalized: false,
                ..full
            },
            LinearInput::RawScores,
        ),
        (
            Ablation {
                gate: false,
                ..full
            },
            LinearInput::RawScores,
        ),
        (
            Ablation {
                self_attention: false,
                cross_attention: false,
                gate: false,
                ..full
            },
            LinearInput::RawScores,
        ),
    ]
}

pub fn check_model_gradients() -> Check {
    let mut worst: f64 = 0.0;
    for (i, (ab, lin)) in model_ablation_variants().into_iter().enumerate() {
        worst = worst.max(model_gradient_check(ab, lin, 500 + i as u64)?);
    }
    Ok(format!(
        "full model and 6 variants, max relative error {worst:.1e}"
    ))
}

/// Rank-AUC loss at vanishing ε against the exact weighted AUC sum.
pub fn check_surrogate_limit(trials: usize) -> Check {
    let mut r = rng(606);
    let cfg = SoftRankConfig::new(1e-6).unwrap();
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let n = r.random_range(2..=64);
        let m = r.random_range(1..=4);
        let mut s: Vec<f64> = (0..n).map(|i| i as f64 / n as f64 + 0.1).collect();
        s.shuffle(&mut r);
        let batch = labels_matrix(n, m, &mut r);
        let w: Vec<f64> = (0..m).map(|_| r.random_range(0.1..3.0)).collect();
        let weights = LossWeights::new(w.clone()).unwrap();
        let loss = rank_auc_loss(&s, &batch, &weights, &cfg)
            .map_err(|e| e.to_string())?
            .loss;
        let exact: f64 = (0..m)
            .map(|k| w[k] * exact_auc(&s, batch.column(k)).unwrap())
            .sum();
        let err = (loss + exact).abs();
        worst = worst.max(err);
        if err > 1e-6 {
            return Err(format!(
                "trial {t}: loss {loss} vs -(weighted AUC sum) {}",
                -exact
            ));
        }
    }
    Ok(format!(
        "{trials} batches at eps = 1e-6, max error {worst:.1e}"
    ))
}
