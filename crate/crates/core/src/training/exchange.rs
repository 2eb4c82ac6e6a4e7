//! Simulated AP/CPU message bus and exact exchange accounting.

use serde::{Deserialize, Serialize};

use crate::gnn::GnnModel;
use crate::rate::UplinkPayload;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Training,
    Operating,
}

/// Scalars that crossed the AP/CPU boundary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExchangeLedger {
    pub phase: Phase,
    /// AP → CPU.
    pub uplink: u64,
    /// CPU → AP.
    pub downlink: u64,
    pub rounds: u64,
    /// Uplink had the full DS, PC and UI blocks been sent (`N + 2N²` per AP).
    pub literal_uplink: u64,
}

impl ExchangeLedger {
    pub fn new(phase: Phase) -> Self {
        Self {
            phase,
            uplink: 0,
            downlink: 0,
            rounds: 0,
            literal_uplink: 0,
        }
    }

    pub fn to_json(&self) -> crate::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Formula for one distributed training exchange: `K(N² + N)` up, `K|Ψ|` down.
pub fn distributed_training_formula(k: u64, n: u64, params: u64) -> (u64, u64) {
    (k * (n * n + n), k * params)
}

/// Formula for one centralized exchange: `KN` up, `KN` down.
pub fn centralized_formula(k: u64, n: u64) -> (u64, u64) {
    (k * n, k * n)
}

/// Counts what is sent; every payload goes through here.
#[derive(Clone, Debug)]
pub struct MessageBus {
    ledger: ExchangeLedger,
}

impl MessageBus {
    pub fn new(phase: Phase) -> Self {
        Self {
            ledger: ExchangeLedger::new(phase),
        }
    }

    pub fn uplink_payload(&mut self, payload: &UplinkPayload) {
        let n = payload.num_ues() as u64;
        self.ledger.uplink += payload.len() as u64;
        self.ledger.literal_uplink += n + 2 * n * n;
    }

    /// Raw scalars sent AP → CPU (large-scale coefficients in the
    /// centralized scheme).
    pub fn uplink_scalars(&mut self, count: usize) {
        self.ledger.uplink += count as u64;
        self.ledger.literal_uplink += count as u64;
    }

    pub fn downlink_scalars(&mut self, count: usize) {
        self.ledger.downlink += count as u64;
    }

    /// Sends the model to every actor; each receives a bitwise copy.
    pub fn broadcast(&mut self, model: &GnnModel, actors: &mut [GnnModel]) {
        let size = model.num_params();
        for actor in actors.iter_mut() {
            actor.clone_from(model);
            self.downlink_scalars(size);
        }
    }

    pub fn end_round(&mut self) {
        self.ledger.rounds += 1;
    }

    pub fn ledger(&self) -> &ExchangeLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> ExchangeLedger {
        self.ledger
    }
}
