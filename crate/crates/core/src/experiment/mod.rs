//! Reproducible experiments: data generation, training, evaluation,
//! closed-form verification, exchange accounting and runtime benchmarks.
//!
//! Every command takes an [`ExperimentConfig`]; every file it writes carries
//! the config's [`digest`](ExperimentConfig::digest).

mod bench;
mod data;
mod evaluate;
mod exchange;
mod run;
mod verify;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::PgdConfig;
use crate::channel::SystemConfig;
use crate::error::{Error, Result};
use crate::gnn::{Aggregation, ModelConfig};
use crate::training::{Convergence, TrainConfig};

pub use bench::{bench_runtime, BenchConfig, BenchReport, BenchRow, BENCH_METHODS};
pub use data::{generate_split, load_split, write_split, Cell, Grid, LabeledInstance, Split};
pub use evaluate::{evaluate, summarize, EvalRow, Evaluation, Method, Models, RateRow};
pub use exchange::{exchange_report, ExchangeConfig, ExchangeRow};
pub use run::{
    centralized_path, checkpoint_path, cmd_bench_runtime, cmd_evaluate, cmd_exchange_report,
    cmd_gen_data, cmd_train, cmd_verify_rate, data_dir, load_models, GenSummary, TrainReport,
};
pub use verify::{
    compare_terms, random_verify_case, verify_rate, CaseReport, TermCheck, VerifyCase,
    VerifyConfig, VerifyReport,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; data, initialization and batching derive from it.
    pub seed: u64,
    /// Excluded from the digest.
    pub out_dir: PathBuf,
    /// Radio parameters shared by every cell; sizes come from the grids.
    pub system: SystemConfig,
    pub train_grid: Vec<Grid>,
    pub test_grid: Vec<Grid>,
    pub train_per_cell: usize,
    pub test_per_cell: usize,
    /// `train.seed` is overwritten by `seed`.
    pub train: TrainConfig,
    pub aggregation: Aggregation,
    /// Also train and evaluate the full-CSI model.
    pub centralized: bool,
    pub pgd: PgdConfig,
    pub verify: VerifyConfig,
    pub exchange: ExchangeConfig,
    pub bench: BenchConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            system: SystemConfig::default(),
            train_grid: vec![Grid {
                aps: vec![20, 30, 40],
                ues: vec![6, 10, 20],
                antennas: vec![4],
            }],
            test_grid: vec![Grid {
                aps: vec![20, 30, 40, 50],
                ues: vec![5, 6, 10, 15, 20],
                antennas: vec![4],
            }],
            train_per_cell: 200,
            test_per_cell: 20,
            train: TrainConfig::default(),
            aggregation: Aggregation::Mean,
            centralized: true,
            pgd: PgdConfig::default(),
            verify: VerifyConfig::default(),
            exchange: ExchangeConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Laptop-sized setup: eight training cells of 250 instances, tested on
    /// the same cells plus the unseen `K = 10, N = 5`.
    pub fn desk() -> Self {
        let mut train = TrainConfig {
            rounds: 1500,
            monitor_size: 32,
            convergence: Some(Convergence {
                min_rounds: 1000,
                ..Convergence::default()
            }),
            ..TrainConfig::default()
        };
        train.optimizer.learning_rate = 1e-3;
        let seen = Grid {
            aps: vec![8, 12],
            ues: vec![4, 6],
            antennas: vec![2, 4],
        };
        Self {
            system: SystemConfig {
                pilot_len: 6,
                ..SystemConfig::default()
            },
            train_grid: vec![seen.clone()],
            test_grid: vec![
                seen,
                Grid {
                    aps: vec![10],
                    ues: vec![5],
                    antennas: vec![2, 4],
                },
            ],
            train_per_cell: 250,
            test_per_cell: 20,
            train,
            ..Self::default()
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.train.validate()?;
        for (name, grids) in [
            ("train_grid", &self.train_grid),
            ("test_grid", &self.test_grid),
        ] {
            if grids.is_empty() || grids.iter().any(Grid::is_empty) {
                return Err(Error::Config(format!(
                    "{name} must have at least one non-empty grid"
                )));
            }
            if grids
                .iter()
                .flat_map(Grid::cells)
                .any(|c| c.aps == 0 || c.ues == 0 || c.antennas == 0)
            {
                return Err(Error::Config(format!("{name} sizes must be positive")));
            }
        }
        if self.train_per_cell == 0 || self.test_per_cell == 0 {
            return Err(Error::Config("instances per cell must be positive".into()));
        }
        self.verify.validate()?;
        self.bench.validate()
    }

    /// Hex SHA-256 of the config with `out_dir` cleared.
    pub fn digest(&self) -> String {
        let canonical = Self {
            out_dir: PathBuf::new(),
            ..self.clone()
        };
        let json = serde_json::to_string(&canonical).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            aggregation: self.aggregation,
            ..ModelConfig::new(self.system.pilot_len)
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }
}

/// JSON object `{config_digest, ...value}` written with a trailing newline.
pub(crate) fn write_tagged_json<T: Serialize>(path: &Path, digest: &str, value: &T) -> Result<()> {
    let mut body = serde_json::to_value(value)?;
    match &mut body {
        serde_json::Value::Object(map) => {
            map.insert("config_digest".into(), digest.into());
        }
        other => {
            body = serde_json::json!({ "config_digest": digest, "value": other.take() });
        }
    }
    let mut text = serde_json::to_string_pretty(&body)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub(crate) fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)?;
    Ok(())
}
