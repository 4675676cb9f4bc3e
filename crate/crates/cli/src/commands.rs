use std::path::{Path, PathBuf};

use harmonrank::data::{generate, load_csv, save_csv, split, Dataset, Schema};
use harmonrank::experiments::{
    attention_analysis, bench_losses, evaluate, pareto_sweep, skew_experiment, train,
};
use harmonrank::model::{load_checkpoint, save_checkpoint, Checkpoint};
use harmonrank::rng::sub_seed;
use harmonrank::AucReport;
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{ensure_dir, fmt_f64, write_csv, write_json, write_jsonl, write_meta};
use crate::{Command, SplitArg};

pub fn dispatch(cfg: &RunConfig, command: &Command) -> Result<()> {
    ensure_dir(&cfg.out)?;
    let name = match command {
        Command::GenData => {
            gen_data(cfg)?;
            "gen-data"
        }
        Command::Train { data } => {
            cmd_train(cfg, data.as_deref())?;
            "train"
        }
        Command::Eval {
            checkpoint,
            data,
            split,
        } => {
            cmd_eval(cfg, checkpoint, data.as_deref(), *split)?;
            "eval"
        }
        Command::Sweep { data } => {
            cmd_sweep(cfg, data.as_deref())?;
            "sweep"
        }
        Command::Analyze {
            checkpoint,
            data,
            split,
        } => {
            cmd_analyze(cfg, checkpoint, data.as_deref(), *split)?;
            "analyze"
        }
        Command::Skew => {
            cmd_skew(cfg)?;
            "skew"
        }
        Command::Bench => {
            cmd_bench(cfg)?;
            "bench"
        }
    };
    write_meta(&cfg.out, name)?;
    Ok(())
}

fn input_err(path: &Path) -> impl FnOnce(harmonrank::Error) -> CliError + '_ {
    move |source| CliError::Input {
        path: path.to_path_buf(),
        source,
    }
}

fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Schema stored next to a CSV by `gen-data`, if any.
fn sidecar_schema(csv: &Path) -> Result<Option<Schema>> {
    let path = sidecar_path(csv);
    let Ok(text) = std::fs::read_to_string(&path) else {
        return Ok(None);
    };
    let v: Value = serde_json::from_str(&text).map_err(|e| input_err(&path)(e.into()))?;
    match v.get("schema") {
        Some(s) => serde_json::from_value(s.clone())
            .map(Some)
            .map_err(|e| input_err(&path)(e.into())),
        None => Ok(None),
    }
}

/// Reads the CSV named by the flag or the config, or generates data.
fn load_data(cfg: &RunConfig, flag: Option<&Path>, schema: Option<&Schema>) -> Result<Dataset> {
    match flag.or(cfg.data.path.as_deref()) {
        Some(p) => {
            let schema = match schema {
                Some(s) => Some(s.clone()),
                None => sidecar_schema(p)?,
            };
            load_csv(p, schema.as_ref()).map_err(input_err(p))
        }
        None => Ok(generate(&cfg.generator_spec())?),
    }
}

fn split_data(cfg: &RunConfig, data: &Dataset) -> Result<(Dataset, Dataset)> {
    Ok(split(
        data,
        cfg.data.test_fraction,
        sub_seed(cfg.seed, "split"),
    )?)
}

fn select(cfg: &RunConfig, data: Dataset, which: SplitArg) -> Result<Dataset> {
    Ok(match which {
        SplitArg::All => data,
        SplitArg::Train => split_data(cfg, &data)?.0,
        SplitArg::Test => split_data(cfg, &data)?.1,
    })
}

fn by_name<T: Into<Value> + Clone>(schema: &Schema, values: &[T]) -> Map<String, Value> {
    schema
        .objectives
        .iter()
        .zip(values)
        .map(|(k, v)| (k.clone(), v.clone().into()))
        .collect()
}

fn metrics(cfg: &RunConfig, schema: &Schema, report: &AucReport, loss: Option<f64>) -> Value {
    json!({
        "per_objective": by_name(schema, &report.per_objective),
        "sum": report.sum,
        "loss": loss,
        "seed": cfg.seed,
        "config_hash": cfg.hash(),
    })
}

fn gen_data(cfg: &RunConfig) -> Result<()> {
    let spec = cfg.generator_spec();
    let data = generate(&spec)?;
    let csv = cfg.out.join("data.csv");
    save_csv(&data, &csv)?;
    let sidecar = json!({
        "generator": spec,
        "num_samples": data.len(),
        "objectives": data.schema.objectives,
        "positive_counts": by_name(&data.schema, &data.positive_counts()),
        "positive_rates": by_name(&data.schema, &data.positive_rates()),
        "rho": data.label_spearman(),
        "schema": data.schema,
    });
    write_json(&sidecar_path(&csv), &sidecar)?;
    println!("wrote {} samples to {}", data.len(), csv.display());
    Ok(())
}

fn cmd_train(cfg: &RunConfig, data: Option<&Path>) -> Result<()> {
    let data = load_data(cfg, data, None)?;
    let (tr, te) = split_data(cfg, &data)?;
    let model_cfg = cfg.model_config(&data.schema);
    let outcome = train(&tr, Some(&te), &model_cfg, &cfg.train)?;
    let report = outcome
        .history
        .last()
        .and_then(|r| r.test.clone())
        .expect("the last epoch is always evaluated");
    save_checkpoint(
        &Checkpoint {
            config: model_cfg,
            schema: Some(data.schema.clone()),
            params: outcome.params.clone(),
        },
        &cfg.out.join("model.ckpt"),
    )?;
    write_json(
        &cfg.out.join("metrics.json"),
        &metrics(cfg, &data.schema, &report, Some(outcome.final_loss())),
    )?;
    write_jsonl(&cfg.out.join("history.jsonl"), &outcome.history)?;
    if outcome.clamped > 0 {
        eprintln!("note: {} out-of-range scores were clamped", outcome.clamped);
    }
    println!(
        "held-out AUC sum {:.6} after {} updates",
        report.sum, outcome.updates
    );
    Ok(())
}

fn load_model(
    cfg: &RunConfig,
    ckpt_path: &Path,
    data: Option<&Path>,
    which: SplitArg,
) -> Result<(Checkpoint, Dataset)> {
    let ckpt = load_checkpoint(ckpt_path).map_err(input_err(ckpt_path))?;
    let data = load_data(cfg, data, ckpt.schema.as_ref())?;
    if ckpt.config.num_objectives != data.num_objectives()
        || ckpt.config.personalized_features != data.schema.features
    {
        return Err(CliError::Mismatch(format!(
            "checkpoint {} was trained on objectives {:?} and features {:?}, data has {:?} and {:?}",
            ckpt_path.display(),
            ckpt.schema.as_ref().map(|s| &s.objectives),
            ckpt.config.personalized_features,
            data.schema.objectives,
            data.schema.features,
        )));
    }
    let data = select(cfg, data, which)?;
    Ok((ckpt, data))
}

fn cmd_eval(cfg: &RunConfig, ckpt: &Path, data: Option<&Path>, which: SplitArg) -> Result<()> {
    let (ckpt, data) = load_model(cfg, ckpt, data, which)?;
    let report = evaluate(&ckpt.params, &ckpt.config, &data)?;
    write_json(
        &cfg.out.join("metrics.json"),
        &metrics(cfg, &data.schema, &report, None),
    )?;
    println!("AUC sum {:.6} on {} samples", report.sum, data.len());
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig, data: Option<&Path>) -> Result<()> {
    let data = load_data(cfg, data, None)?;
    let (tr, te) = split_data(cfg, &data)?;
    let model_cfg = cfg.model_config(&data.schema);
    let grid = cfg.sweep.weight_grid(data.num_objectives());
    let points = pareto_sweep(&tr, &te, &model_cfg, &cfg.train, &grid)?;
    let names = &data.schema.objectives;
    let header: Vec<String> = names
        .iter()
        .map(|n| format!("w_{n}"))
        .chain(names.iter().map(|n| format!("auc_{n}")))
        .chain(["on_front".to_string()])
        .collect();
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            p.weights
                .iter()
                .chain(&p.auc)
                .map(|v| fmt_f64(*v))
                .chain([u8::from(p.on_front).to_string()])
                .collect()
        })
        .collect();
    write_csv(&cfg.out.join("pareto.csv"), &header, &rows)?;
    println!(
        "{} of {} weight vectors on the front",
        points.iter().filter(|p| p.on_front).count(),
        points.len()
    );
    Ok(())
}

fn cmd_analyze(cfg: &RunConfig, ckpt: &Path, data: Option<&Path>, which: SplitArg) -> Result<()> {
    let (ckpt, data) = load_model(cfg, ckpt, data, which)?;
    let res = attention_analysis(&ckpt.params, &ckpt.config, &data, &cfg.analysis)?;
    let out = json!({
        "objectives": data.schema.objectives,
        "rho": res.rho,
        "attention": res.attention,
        "pearson_r": res.pearson_r,
        "p_value": res.p_value,
        "num_pairs": res.num_pairs,
        "pairs": cfg.analysis.pairs,
        "permutations": cfg.analysis.permutations,
    });
    write_json(&cfg.out.join("analysis.json"), &out)?;
    println!("pearson r {:.4}, p {:.4}", res.pearson_r, res.p_value);
    Ok(())
}

fn cmd_skew(cfg: &RunConfig) -> Result<()> {
    let spec = cfg.generator_spec();
    let model_cfg = cfg.model_config(&spec.schema());
    let rows = skew_experiment(&spec, &model_cfg, &cfg.train, &cfg.skew)?;
    let header = ["loss", "ratio", "auc_sum", "rel_drop_pct"].map(String::from);
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.loss.to_string(),
                fmt_f64(r.ratio),
                fmt_f64(r.auc_sum),
                fmt_f64(r.rel_drop_pct),
            ]
        })
        .collect();
    write_csv(&cfg.out.join("skew.csv"), &header, &rows)
}

fn cmd_bench(cfg: &RunConfig) -> Result<()> {
    let rows = bench_losses(&cfg.bench)?;
    let header = ["loss", "n", "samples_per_sec", "growth_ratio"].map(String::from);
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.loss.to_string(),
                r.n.to_string(),
                fmt_f64(r.samples_per_sec),
                r.growth_ratio.map(fmt_f64).unwrap_or_default(),
            ]
        })
        .collect();
    write_csv(&cfg.out.join("bench.csv"), &header, &rows)
}
