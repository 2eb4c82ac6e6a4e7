//! `cfgnn`: data generation, training, evaluation and reports.
//!
//! Settings come from built-in defaults, then `--config`, then `--seed` and
//! `--out`, each overriding the previous.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use cellfree_gnn::experiment::{
    cmd_bench_runtime, cmd_evaluate, cmd_exchange_report, cmd_gen_data, cmd_train, cmd_verify_rate,
    ExperimentConfig,
};

#[derive(Parser)]
#[command(
    name = "cfgnn",
    version,
    about = "Distributed GNN power allocation for cell-free massive MIMO"
)]
struct Cli {
    /// JSON experiment config; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write seeded train and test instances under OUT/data.
    GenData,
    /// Train the distributed (and, if enabled, centralized) model.
    Train,
    /// Compare all methods on the test instances.
    Evaluate {
        /// Distributed checkpoint; defaults to OUT/model.json.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Check the closed-form rate terms against simulated channels.
    VerifyRate,
    /// Measured versus formula exchange counts for both schemes.
    ExchangeReport,
    /// Time every allocator over the configured network sizes.
    BenchRuntime {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)
            .with_context(|| format!("loading {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = resolve(&cli)?;
    println!("config digest {}", cfg.digest());
    match cli.command {
        Command::GenData => {
            let s = cmd_gen_data(&cfg)?;
            println!(
                "{} train instances in {}",
                s.train_files,
                s.train_dir.display()
            );
            println!(
                "{} test instances in {}",
                s.test_files,
                s.test_dir.display()
            );
        }
        Command::Train => {
            let r = cmd_train(&cfg)?;
            println!(
                "distributed: {} rounds, best monitor sum rate {:.4}",
                r.distributed_rounds, r.distributed_best_monitor_sum_rate
            );
            if let (Some(rounds), Some(rate)) =
                (r.centralized_rounds, r.centralized_best_monitor_sum_rate)
            {
                println!("centralized: {rounds} rounds, best monitor sum rate {rate:.4}");
            }
        }
        Command::Evaluate { checkpoint } => {
            let eval = cmd_evaluate(&cfg, checkpoint.as_deref())?;
            println!(
                "{:>3} {:>3} {:>3}  {:<16} {:>9} {:>8} {:>10}",
                "M", "N", "K", "method", "sum_rate", "% pgd", "ms"
            );
            for r in &eval.summary {
                println!(
                    "{:>3} {:>3} {:>3}  {:<16} {:>9.4} {:>8.2} {:>10.4}",
                    r.M,
                    r.N,
                    r.K,
                    r.method.name(),
                    r.sum_rate,
                    r.pct_of_pgd,
                    r.inference_ms
                );
            }
        }
        Command::VerifyRate => {
            let report = cmd_verify_rate(&cfg)?;
            for (i, case) in report.cases.iter().enumerate() {
                let worst = case
                    .checks
                    .iter()
                    .max_by(|a, b| a.rel_error.total_cmp(&b.rel_error));
                if let Some(w) = worst {
                    println!(
                        "case {i}: K={} N={} M={} tau={} worst {} on UE {}: {:.3e} (±{:.1e})",
                        case.aps,
                        case.ues,
                        case.antennas,
                        case.pilot_len,
                        w.term,
                        w.ue,
                        w.rel_error,
                        w.confidence_radius
                    );
                }
            }
            println!(
                "max relative error {:.3e}, tolerance {:.1e}: {}",
                report.max_rel_error,
                report.tolerance,
                if report.passed { "PASS" } else { "FAIL" }
            );
            return Ok(report.passed);
        }
        Command::ExchangeReport => {
            let rows = cmd_exchange_report(&cfg)?;
            println!(
                "{:<12} {:<10} {:>3} {:>3} {:>12} {:>12} {:>12} {:>12}",
                "scheme", "phase", "K", "N", "uplink", "formula", "downlink", "formula"
            );
            for r in &rows {
                println!(
                    "{:<12} {:<10} {:>3} {:>3} {:>12} {:>12} {:>12} {:>12}",
                    r.scheme,
                    r.phase,
                    r.k,
                    r.n,
                    r.measured_uplink,
                    r.formula_uplink,
                    r.measured_downlink,
                    r.formula_downlink
                );
            }
            return Ok(rows.iter().all(|r| r.matches));
        }
        Command::BenchRuntime { checkpoint } => {
            let report = cmd_bench_runtime(&cfg, checkpoint.as_deref())?;
            for r in &report.rows {
                println!(
                    "K={:>3} N={} M={}  {:<20} {:>12.6} ms",
                    r.k, r.n, r.m, r.method, r.ms_per_call
                );
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
