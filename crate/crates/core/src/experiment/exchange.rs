//! Measured AP/CPU traffic next to the closed-form counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{centralized_train, init_centralized, CentralizedConfig};
use crate::channel::{Instance, SystemConfig};
use crate::error::Result;
use crate::gnn::{init_model, ModelConfig};
use crate::training::{
    centralized_formula, distributed_inference, distributed_training_formula, train, TrainConfig,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExchangeConfig {
    pub aps: Vec<usize>,
    pub ues: Vec<usize>,
    pub rounds: usize,
    pub batch_size: usize,
}

impl Default for ExchangeConfig {
    fn default() -> Self {
        Self {
            aps: vec![4, 8, 20],
            ues: vec![2, 5],
            rounds: 3,
            batch_size: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExchangeRow {
    pub scheme: String,
    pub phase: String,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub rounds: usize,
    pub batch: usize,
    pub params: usize,
    pub measured_uplink: u64,
    pub formula_uplink: u64,
    pub measured_downlink: u64,
    pub formula_downlink: u64,
    /// Distributed training only: uplink if DS, PC and UI were sent in full.
    pub literal_uplink: u64,
    pub matches: bool,
}

fn row(
    scheme: &str,
    phase: &str,
    (k, n, rounds, batch, params): (usize, usize, usize, usize, usize),
    measured: (u64, u64),
    formula: (u64, u64),
    literal_uplink: u64,
) -> ExchangeRow {
    ExchangeRow {
        scheme: scheme.into(),
        phase: phase.into(),
        k,
        n,
        rounds,
        batch,
        params,
        measured_uplink: measured.0,
        formula_uplink: formula.0,
        measured_downlink: measured.1,
        formula_downlink: formula.1,
        literal_uplink,
        matches: measured == formula,
    }
}

/// Runs short training sessions of both schemes and one operating-phase
/// inference per `(K, N)` and counts every scalar on the bus.
pub fn exchange_report(
    base: &SystemConfig,
    ec: &ExchangeConfig,
    seed: u64,
) -> Result<Vec<ExchangeRow>> {
    let tc = TrainConfig {
        batch_size: ec.batch_size,
        rounds: ec.rounds,
        convergence: None,
        monitor_size: 1,
        seed,
        ..TrainConfig::default()
    };
    let mut out = Vec::new();
    for &k in &ec.aps {
        for &n in &ec.ues {
            let system = base.with_size(k, n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<Instance> = (0..ec.batch_size)
                .map(|_| Instance::sample(&system, &mut rng))
                .collect();
            let (r, b) = (ec.rounds as u64, ec.batch_size as u64);

            let model = init_model(ModelConfig::new(system.pilot_len), seed)?;
            let params = model.num_params();
            let outcome = train(model, &data, &tc)?;
            let (up, down) = distributed_training_formula(k as u64, n as u64, params as u64);
            let ledger = &outcome.ledger;
            out.push(row(
                "distributed",
                "training",
                (k, n, ec.rounds, ec.batch_size, params),
                (ledger.uplink, ledger.downlink),
                (r * b * up, r * down),
                ledger.literal_uplink,
            ));

            let (_, ledger) = distributed_inference(&outcome.model, &data[0].scenario())?;
            out.push(row(
                "distributed",
                "operating",
                (k, n, 1, 1, params),
                (ledger.uplink, ledger.downlink),
                (0, 0),
                0,
            ));

            let central = init_centralized(CentralizedConfig::new(system.pilot_len), seed)?;
            let params = central.num_params();
            let outcome = centralized_train(central, &data, &tc)?;
            let (up, down) = centralized_formula(k as u64, n as u64);
            out.push(row(
                "centralized",
                "training",
                (k, n, ec.rounds, ec.batch_size, params),
                (outcome.ledger.uplink, outcome.ledger.downlink),
                (r * b * up, r * b * down),
                0,
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_rows_match_on_small_grid() {
        let ec = ExchangeConfig {
            aps: vec![2, 3],
            ues: vec![1, 2],
            rounds: 2,
            batch_size: 2,
        };
        let base = SystemConfig {
            pilot_len: 2,
            antennas: 1,
            ..SystemConfig::default()
        };
        let rows = exchange_report(&base, &ec, 0).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 3);
        assert!(rows.iter().all(|r| r.matches), "{rows:#?}");
        let op = rows.iter().find(|r| r.phase == "operating").unwrap();
        assert_eq!((op.measured_uplink, op.measured_downlink), (0, 0));
    }
}
