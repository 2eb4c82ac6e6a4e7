//! The six commands. Each reads and writes under `out_dir` and tags every
//! file with the config digest.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::bench::{bench_runtime, BenchReport};
use super::data::{generate_split, load_split, write_split, Split};
use super::evaluate::{evaluate, Evaluation, Models};
use super::exchange::{exchange_report, ExchangeRow};
use super::verify::{verify_rate, VerifyReport};
use super::{ensure_dir, write_tagged_json, ExperimentConfig};
use crate::baselines::{
    centralized_train, init_centralized, CentralizedConfig, CentralizedGnnModel,
};
use crate::channel::Instance;
use crate::error::{Error, Result};
use crate::gnn::{init_model, load_checkpoint, save_checkpoint, GnnModel};
use crate::training::{train, TrainLog};

fn write_csv(
    path: &Path,
    digest: &str,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut h: Vec<&str> = header.to_vec();
    h.push("config_digest");
    w.write_record(&h)?;
    for mut r in rows {
        r.push(digest.to_string());
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_config(cfg: &ExperimentConfig, digest: &str) -> Result<()> {
    ensure_dir(&cfg.out_dir)?;
    write_tagged_json(&cfg.out_dir.join("config.json"), digest, cfg)
}

#[derive(Clone, Debug, Serialize)]
pub struct GenSummary {
    pub train_dir: PathBuf,
    pub test_dir: PathBuf,
    pub train_files: usize,
    pub test_files: usize,
}

pub fn data_dir(cfg: &ExperimentConfig, split: Split) -> PathBuf {
    cfg.out_dir.join("data").join(split.name())
}

pub fn cmd_gen_data(cfg: &ExperimentConfig) -> Result<GenSummary> {
    cfg.validate()?;
    let digest = cfg.digest();
    write_config(cfg, &digest)?;
    let mut counts = [0; 2];
    for (i, split) in [Split::Train, Split::Test].into_iter().enumerate() {
        let items = generate_split(cfg, split);
        let dir = data_dir(cfg, split);
        if dir.exists() {
            std::fs::remove_dir_all(&dir)?;
        }
        write_split(&dir, &digest, &items)?;
        counts[i] = items.len();
    }
    let summary = GenSummary {
        train_dir: data_dir(cfg, Split::Train),
        test_dir: data_dir(cfg, Split::Test),
        train_files: counts[0],
        test_files: counts[1],
    };
    write_tagged_json(&cfg.out_dir.join("gen_data.json"), &digest, &summary)?;
    Ok(summary)
}

fn load_instances(
    cfg: &ExperimentConfig,
    split: Split,
) -> Result<(Vec<super::LabeledInstance>, Vec<String>)> {
    let dir = data_dir(cfg, split);
    if !dir.exists() {
        return Err(Error::Config(format!(
            "{} does not exist; run gen-data with the same --out first",
            dir.display()
        )));
    }
    load_split(&dir)
}

fn write_train_log(path: &Path, digest: &str, log: &TrainLog) -> Result<()> {
    write_csv(
        path,
        digest,
        &["round", "loss", "monitor_loss", "wallclock_ms"],
        log.rounds.iter().map(|r| {
            vec![
                r.round.to_string(),
                r.loss.to_string(),
                r.monitor_loss.to_string(),
                r.wallclock_ms.to_string(),
            ]
        }),
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct TrainReport {
    pub instances: usize,
    pub data_digests: Vec<String>,
    pub distributed_rounds: usize,
    pub distributed_best_monitor_sum_rate: f64,
    pub centralized_rounds: Option<usize>,
    pub centralized_best_monitor_sum_rate: Option<f64>,
}

pub fn checkpoint_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir.join("model.json")
}

pub fn centralized_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir.join("centralized.json")
}

fn best_rate(log: &TrainLog) -> f64 {
    -log.rounds
        .iter()
        .map(|r| r.monitor_loss)
        .fold(f64::INFINITY, f64::min)
}

pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let digest = cfg.digest();
    let (items, data_digests) = load_instances(cfg, Split::Train)?;
    write_config(cfg, &digest)?;
    let data: Vec<Instance> = items.into_iter().map(|i| i.instance).collect();
    let tc = cfg.train_config();
    let out = &cfg.out_dir;

    let model = init_model(cfg.model_config(), cfg.seed)?;
    let outcome = train(model, &data, &tc)?;
    save_checkpoint(&outcome.model, &digest, &checkpoint_path(cfg))?;
    write_train_log(&out.join("train_log.csv"), &digest, &outcome.log)?;
    write_tagged_json(
        &out.join("train_summary.json"),
        &digest,
        &outcome.log.summary(),
    )?;
    write_tagged_json(&out.join("train_ledger.json"), &digest, &outcome.ledger)?;
    let mut report = TrainReport {
        instances: data.len(),
        data_digests,
        distributed_rounds: outcome.log.rounds.len(),
        distributed_best_monitor_sum_rate: best_rate(&outcome.log),
        centralized_rounds: None,
        centralized_best_monitor_sum_rate: None,
    };

    if cfg.centralized {
        let model = init_centralized(CentralizedConfig::new(cfg.system.pilot_len), cfg.seed)?;
        let c = centralized_train(model, &data, &tc)?;
        c.model.save(&digest, &centralized_path(cfg))?;
        write_train_log(&out.join("centralized_train_log.csv"), &digest, &c.log)?;
        write_tagged_json(
            &out.join("centralized_summary.json"),
            &digest,
            &c.log.summary(),
        )?;
        write_tagged_json(&out.join("centralized_ledger.json"), &digest, &c.ledger)?;
        report.centralized_rounds = Some(c.log.rounds.len());
        report.centralized_best_monitor_sum_rate = Some(best_rate(&c.log));
    }
    write_tagged_json(&out.join("train_report.json"), &digest, &report)?;
    Ok(report)
}

/// Distributed model from `checkpoint` (default `out_dir/model.json`);
/// the centralized model is used when its file exists.
pub fn load_models(cfg: &ExperimentConfig, checkpoint: Option<&Path>) -> Result<Models> {
    let path = checkpoint.map_or_else(|| checkpoint_path(cfg), Path::to_path_buf);
    if !path.exists() {
        return Err(Error::Checkpoint(format!(
            "{} not found; run train first",
            path.display()
        )));
    }
    let (distributed, _) = load_checkpoint(&path)?;
    let cpath = centralized_path(cfg);
    let centralized = if cpath.exists() {
        Some(CentralizedGnnModel::load(&cpath)?.0)
    } else {
        None
    };
    Ok(Models {
        distributed: Some(distributed),
        centralized,
    })
}

pub fn cmd_evaluate(cfg: &ExperimentConfig, checkpoint: Option<&Path>) -> Result<Evaluation> {
    cfg.validate()?;
    let digest = cfg.digest();
    let models = load_models(cfg, checkpoint)?;
    let (items, _) = load_instances(cfg, Split::Test)?;
    let eval = evaluate(&items, &models, &cfg.pgd)?;
    write_config(cfg, &digest)?;
    write_csv(
        &cfg.out_dir.join("evaluation.csv"),
        &digest,
        &[
            "M",
            "N",
            "K",
            "method",
            "sum_rate",
            "pct_of_pgd",
            "inference_ms",
        ],
        eval.summary.iter().map(|r| {
            vec![
                r.M.to_string(),
                r.N.to_string(),
                r.K.to_string(),
                r.method.name().to_string(),
                r.sum_rate.to_string(),
                r.pct_of_pgd.to_string(),
                r.inference_ms.to_string(),
            ]
        }),
    )?;
    write_csv(
        &cfg.out_dir.join("rates.csv"),
        &digest,
        &["instance_id", "method", "per_ue_rates", "sum_rate"],
        eval.rates.iter().map(|r| {
            let per_ue: Vec<String> = r.per_ue_rates.iter().map(f64::to_string).collect();
            vec![
                r.instance_id.clone(),
                r.method.name().to_string(),
                per_ue.join(";"),
                r.sum_rate.to_string(),
            ]
        }),
    )?;
    Ok(eval)
}

pub fn cmd_verify_rate(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let digest = cfg.digest();
    let report = verify_rate(&cfg.system, &cfg.verify, cfg.seed)?;
    write_config(cfg, &digest)?;
    write_tagged_json(&cfg.out_dir.join("verify_rate.json"), &digest, &report)?;
    Ok(report)
}

pub fn cmd_exchange_report(cfg: &ExperimentConfig) -> Result<Vec<ExchangeRow>> {
    cfg.validate()?;
    let digest = cfg.digest();
    let rows = exchange_report(&cfg.system, &cfg.exchange, cfg.seed)?;
    write_config(cfg, &digest)?;
    write_csv(
        &cfg.out_dir.join("exchange_report.csv"),
        &digest,
        &[
            "scheme",
            "phase",
            "K",
            "N",
            "rounds",
            "batch",
            "params",
            "measured_uplink",
            "formula_uplink",
            "measured_downlink",
            "formula_downlink",
            "literal_uplink",
            "matches",
        ],
        rows.iter().map(|r| {
            vec![
                r.scheme.clone(),
                r.phase.clone(),
                r.k.to_string(),
                r.n.to_string(),
                r.rounds.to_string(),
                r.batch.to_string(),
                r.params.to_string(),
                r.measured_uplink.to_string(),
                r.formula_uplink.to_string(),
                r.measured_downlink.to_string(),
                r.formula_downlink.to_string(),
                r.literal_uplink.to_string(),
                r.matches.to_string(),
            ]
        }),
    )?;
    Ok(rows)
}

/// Uses the trained models when `checkpoint` (or the default checkpoint)
/// exists; timings do not depend on the weights, so fresh ones are used
/// otherwise.
pub fn cmd_bench_runtime(cfg: &ExperimentConfig, checkpoint: Option<&Path>) -> Result<BenchReport> {
    cfg.validate()?;
    let digest = cfg.digest();
    let distributed: GnnModel = match load_models(cfg, checkpoint) {
        Ok(Models {
            distributed: Some(m),
            ..
        }) => m,
        _ if checkpoint.is_some() => {
            return Err(Error::Checkpoint(format!(
                "cannot load {}",
                checkpoint.unwrap().display()
            )));
        }
        _ => init_model(cfg.model_config(), cfg.seed)?,
    };
    let centralized = match CentralizedGnnModel::load(&centralized_path(cfg)) {
        Ok((m, _)) => m,
        Err(_) => init_centralized(CentralizedConfig::new(cfg.system.pilot_len), cfg.seed)?,
    };
    let report = bench_runtime(
        &cfg.system,
        &cfg.bench,
        &cfg.pgd,
        &distributed,
        &centralized,
        cfg.seed,
    )?;
    write_config(cfg, &digest)?;
    write_csv(
        &cfg.out_dir.join("bench_runtime.csv"),
        &digest,
        &["K", "N", "M", "method", "ms_per_call"],
        report.rows.iter().map(|r| {
            vec![
                r.k.to_string(),
                r.n.to_string(),
                r.m.to_string(),
                r.method.clone(),
                r.ms_per_call.to_string(),
            ]
        }),
    )?;
    Ok(report)
}
