//! The training loop: APs predict and uplink summaries, the CPU evaluates
//! the sum rate, differentiates through the designated APs, updates the
//! shared model and broadcasts it back.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::exchange::{ExchangeLedger, MessageBus, Phase};
use super::loss::sum_rate_tape;
use super::optimizer::{optimizer_step, AdamConfig, AdamState};
use crate::channel::{Instance, Scenario};
use crate::error::{Error, Result};
use crate::gnn::{
    power_activation_tape, predict_all, predict_row, FeatureNorm, GnnModel, GraphBatch,
};
use crate::numerics::{Tape, Tensor, Var};
use crate::rate::{ergodic_rate, shared_info, PowerAllocation, SharedInfo, UplinkPayload};

/// Which APs' forward passes carry gradients in a round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "ap")]
pub enum DesignationPolicy {
    Fixed(usize),
    RoundRobin,
    All,
}

pub fn designate_aps(policy: DesignationPolicy, round: usize, num_aps: usize) -> Vec<usize> {
    match policy {
        DesignationPolicy::Fixed(k) => vec![k.min(num_aps - 1)],
        DesignationPolicy::RoundRobin => vec![round % num_aps],
        DesignationPolicy::All => (0..num_aps).collect(),
    }
}

/// Stop once the `window`-round moving average of the monitor loss improves
/// by less than `tolerance` (relative) over the previous window, but never
/// before `min_rounds`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Convergence {
    pub window: usize,
    pub tolerance: f64,
    pub min_rounds: usize,
}

impl Default for Convergence {
    fn default() -> Self {
        Self {
            window: 20,
            tolerance: 1e-4,
            min_rounds: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub rounds: usize,
    pub optimizer: AdamConfig,
    pub policy: DesignationPolicy,
    pub convergence: Option<Convergence>,
    /// Instances in the fixed monitoring subset.
    pub monitor_size: usize,
    /// Rounds between monitor snapshots kept in the log.
    pub snapshot_every: usize,
    /// Fit the `log10 ς` standardization to the dataset before training.
    pub fit_normalization: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            rounds: 2000,
            optimizer: AdamConfig::default(),
            policy: DesignationPolicy::RoundRobin,
            convergence: Some(Convergence::default()),
            monitor_size: 64,
            snapshot_every: 100,
            fit_normalization: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let o = &self.optimizer;
        if self.batch_size == 0
            || self.rounds == 0
            || self.monitor_size == 0
            || self.snapshot_every == 0
        {
            return Err(Error::Config(
                "batch size, rounds, monitor size and snapshot interval must be positive".into(),
            ));
        }
        let positive = |x: f64| x > 0.0;
        if !positive(o.learning_rate)
            || !(0.0..1.0).contains(&o.beta1)
            || !(0.0..1.0).contains(&o.beta2)
            || !positive(o.epsilon)
        {
            return Err(Error::Config(
                "optimizer hyper-parameters out of range".into(),
            ));
        }
        if let Some(c) = self.convergence {
            if c.window == 0 || c.tolerance.is_nan() || c.tolerance < 0.0 {
                return Err(Error::Config("convergence window must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// `-` mean sum rate over the round's batch.
    pub loss: f64,
    pub monitor_loss: f64,
    pub wallclock_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub round: usize,
    pub monitor_sum_rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    RoundBudget,
    Converged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub rounds: Vec<RoundRecord>,
    pub snapshots: Vec<Snapshot>,
    pub stop_reason: StopReason,
    pub total_ms: f64,
}

/// Compact account of a run for JSON reports.
#[derive(Clone, Debug, Serialize)]
pub struct TrainSummary<'a> {
    pub rounds: usize,
    pub final_loss: f64,
    pub best_monitor_loss: f64,
    pub stop_reason: StopReason,
    pub total_ms: f64,
    pub snapshots: &'a [Snapshot],
}

impl TrainLog {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rounds {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> TrainSummary<'_> {
        TrainSummary {
            rounds: self.rounds.len(),
            final_loss: self.rounds.last().map_or(f64::NAN, |r| r.loss),
            best_monitor_loss: self
                .rounds
                .iter()
                .map(|r| r.monitor_loss)
                .fold(f64::INFINITY, f64::min),
            stop_reason: self.stop_reason,
            total_ms: self.total_ms,
            snapshots: &self.snapshots,
        }
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary())?)
    }

    pub fn write_summary(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.summary_json()?.as_bytes())?;
        Ok(())
    }
}

pub struct TrainOutcome {
    pub model: GnnModel,
    pub log: TrainLog,
    pub ledger: ExchangeLedger,
}

struct InstancePass {
    sum_rate: f64,
    grads: Vec<Tensor>,
    payloads: Vec<UplinkPayload>,
}

/// One instance of a round. Non-designated APs run their own copy of the
/// model and contribute constants; designated APs run the CPU's model on
/// the tape.
fn instance_pass<'m>(
    cpu: &GnnModel,
    actor: impl Fn(usize) -> &'m GnnModel,
    scenario: &Scenario,
    designated: &[usize],
) -> Result<InstancePass> {
    let Scenario {
        config,
        topology,
        stats,
    } = scenario;
    let k_aps = topology.num_aps();
    let n_ues = topology.num_ues();
    let mut payloads = Vec::with_capacity(k_aps);
    let mut fixed: Vec<SharedInfo> = Vec::with_capacity(k_aps);
    for k in (0..k_aps).filter(|k| !designated.contains(k)) {
        let row = predict_row(
            actor(k),
            topology.sigma.row(k),
            stats.v.row(k),
            &topology.pilot_index,
            config,
        )?;
        let info = shared_info(k, &row, stats);
        payloads.push(info.payload());
        fixed.push(info);
    }

    let mut tape = Tape::new();
    let bound = cpu.bind(&mut tape, true);
    let graphs: Vec<_> = designated
        .iter()
        .map(|&k| cpu.graph(topology.sigma.row(k), &topology.pilot_index, config))
        .collect();
    let batch = GraphBatch::new(&graphs.iter().collect::<Vec<_>>());
    let scores = bound.forward(&mut tape, &batch)?;
    let v_col: Vec<f64> = designated
        .iter()
        .flat_map(|&k| stats.v.row(k).iter().copied())
        .collect();
    let v = tape.constant(Tensor::column_vector(v_col));
    let power = power_activation_tape(
        &mut tape,
        scores,
        v,
        &batch.node_graph,
        batch.num_graphs(),
        config.antennas,
    )?;
    let mut active: Vec<(usize, Var)> = Vec::with_capacity(designated.len());
    for (j, &k) in designated.iter().enumerate() {
        let idx: Vec<usize> = (j * n_ues..(j + 1) * n_ues).collect();
        let col = tape.gather_rows(power, &idx)?;
        payloads.push(shared_info(k, tape.value(col).data(), stats).payload());
        active.push((k, col));
    }
    let total = sum_rate_tape(&mut tape, stats, &active, &fixed)?;
    let grads = tape.backward(total)?;
    let vars = bound.vars();
    Ok(InstancePass {
        sum_rate: tape.value(total).item().unwrap_or(f64::NAN),
        grads: vars.iter().map(|&v| grads.wrt(v)).collect(),
        payloads,
    })
}

/// Round loss (`-` mean sum rate over `scenarios`) and its gradient with
/// respect to the model parameters, every AP running `model` and gradients
/// flowing through the APs chosen by `policy` for `round`.
pub fn round_loss_and_gradient(
    model: &GnnModel,
    scenarios: &[&Scenario],
    policy: DesignationPolicy,
    round: usize,
) -> Result<(f64, Vec<Tensor>)> {
    let passes: Vec<InstancePass> = scenarios
        .par_iter()
        .map(|s| {
            instance_pass(
                model,
                |_| model,
                s,
                &designate_aps(policy, round, s.num_aps()),
            )
        })
        .collect::<Result<_>>()?;
    Ok(reduce_passes(model, &passes))
}

fn reduce_passes(model: &GnnModel, passes: &[InstancePass]) -> (f64, Vec<Tensor>) {
    let scale = -1.0 / passes.len() as f64;
    let mut grads: Vec<Tensor> = model
        .tensors()
        .iter()
        .map(|t| Tensor::zeros(t.rows(), t.cols()))
        .collect();
    let mut total = 0.0;
    for p in passes {
        total += p.sum_rate;
        for (g, pg) in grads.iter_mut().zip(&p.grads) {
            g.add_assign(pg);
        }
    }
    for g in &mut grads {
        *g = g.map(|x| x * scale);
    }
    (total * scale, grads)
}

/// `-` mean sum rate with every AP using `model`.
pub fn full_loss(model: &GnnModel, scenarios: &[&Scenario]) -> Result<f64> {
    Ok(-mean_sum_rate(model, scenarios)?)
}

pub fn mean_sum_rate(model: &GnnModel, scenarios: &[&Scenario]) -> Result<f64> {
    let rates: Vec<f64> = scenarios
        .par_iter()
        .map(|s| {
            let p = predict_all(model, &s.topology, &s.stats, &s.config)?;
            Ok(ergodic_rate(&p, &s.stats)?.sum_rate)
        })
        .collect::<Result<_>>()?;
    Ok(rates.iter().sum::<f64>() / rates.len() as f64)
}

/// Distributed operation: each AP computes its row from local statistics;
/// nothing crosses the AP/CPU boundary.
pub fn distributed_inference(
    model: &GnnModel,
    scenario: &Scenario,
) -> Result<(PowerAllocation, ExchangeLedger)> {
    let bus = MessageBus::new(Phase::Operating);
    let Scenario {
        config,
        topology,
        stats,
    } = scenario;
    let mut p = Tensor::zeros(topology.num_aps(), topology.num_ues());
    for k in 0..topology.num_aps() {
        let row = predict_row(
            model,
            topology.sigma.row(k),
            stats.v.row(k),
            &topology.pilot_index,
            config,
        )?;
        p.row_mut(k).copy_from_slice(&row);
    }
    Ok((PowerAllocation::new(p), bus.into_ledger()))
}

fn diverged(round: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFinite(_) | Error::Domain { .. } | Error::DivisionByZero(_) => Error::Diverged {
            round,
            detail: e.to_string(),
        },
        other => other,
    }
}

pub fn train(
    mut model: GnnModel,
    dataset: &[Instance],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Config("empty training set".into()));
    }
    if let Some(bad) = dataset
        .iter()
        .find(|i| i.config.pilot_len != model.config.pilot_len)
    {
        return Err(Error::Config(format!(
            "instance pilot length {} differs from the model's {}",
            bad.config.pilot_len, model.config.pilot_len
        )));
    }
    let scenarios: Vec<Scenario> = dataset.par_iter().map(Instance::scenario).collect();
    if config.fit_normalization {
        model.norm = FeatureNorm::fit(scenarios.iter().map(|s| &s.topology.sigma));
    }
    let mut sampler = BatchSampler::new(scenarios.len(), config.seed);
    let monitor: Vec<&Scenario> = sampler
        .monitor(config.monitor_size)
        .into_iter()
        .map(|i| &scenarios[i])
        .collect();

    // Every AP starts from the same initial model.
    let num_aps = scenarios.iter().map(Scenario::num_aps).max().unwrap_or(0);
    let mut actors = vec![model.clone(); num_aps];
    let mut bus = MessageBus::new(Phase::Training);
    let mut adam = AdamState::new(model.tensors().iter().map(|t| t.shape()));
    let mut rounds = Vec::new();
    let mut snapshots = Vec::new();
    let mut stop_reason = StopReason::RoundBudget;
    let start = Instant::now();

    for round in 0..config.rounds {
        let batch: Vec<&Scenario> = sampler
            .next(config.batch_size)
            .into_iter()
            .map(|i| &scenarios[i])
            .collect();
        let cpu = &model;
        let passes: Vec<InstancePass> = batch
            .par_iter()
            .map(|s| {
                instance_pass(
                    cpu,
                    |k| &actors[k],
                    s,
                    &designate_aps(config.policy, round, s.num_aps()),
                )
            })
            .collect::<Result<_>>()
            .map_err(diverged(round))?;
        for p in &passes {
            for payload in &p.payloads {
                bus.uplink_payload(payload);
            }
        }
        let (loss, grads) = reduce_passes(&model, &passes);
        if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged {
                round,
                detail: format!("loss {loss}"),
            });
        }
        optimizer_step(
            &mut model.tensors_mut(),
            &grads,
            &mut adam,
            &config.optimizer,
        )?;
        if !model.is_finite() {
            return Err(Error::Diverged {
                round,
                detail: "non-finite parameters after update".into(),
            });
        }
        bus.broadcast(&model, &mut actors);
        bus.end_round();

        let monitor_loss = full_loss(&model, &monitor).map_err(diverged(round))?;
        rounds.push(RoundRecord {
            round,
            loss,
            monitor_loss,
            wallclock_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if (round + 1) % config.snapshot_every == 0 {
            snapshots.push(Snapshot {
                round,
                monitor_sum_rate: -monitor_loss,
            });
        }
        if let Some(c) = config.convergence {
            if converged(&rounds, c) {
                stop_reason = StopReason::Converged;
                break;
            }
        }
    }

    Ok(TrainOutcome {
        model,
        log: TrainLog {
            rounds,
            snapshots,
            stop_reason,
            total_ms: start.elapsed().as_secs_f64() * 1e3,
        },
        ledger: bus.into_ledger(),
    })
}

/// Epoch-wise shuffled mini-batches.
pub(crate) struct BatchSampler {
    rng: ChaCha8Rng,
    order: Vec<usize>,
    cursor: usize,
}

impl BatchSampler {
    pub(crate) fn new(len: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..len).collect();
        order.shuffle(&mut rng);
        Self {
            rng,
            order,
            cursor: 0,
        }
    }

    /// A fixed subset, drawn once before any batch.
    pub(crate) fn monitor(&mut self, size: usize) -> Vec<usize> {
        let picked = self.order.iter().take(size).copied().collect();
        self.order.shuffle(&mut self.rng);
        picked
    }

    pub(crate) fn next(&mut self, size: usize) -> Vec<usize> {
        let size = size.min(self.order.len());
        let mut batch = Vec::with_capacity(size);
        while batch.len() < size {
            if self.cursor == self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.cursor = 0;
            }
            batch.push(self.order[self.cursor]);
            self.cursor += 1;
        }
        batch
    }
}

pub(crate) fn converged(rounds: &[RoundRecord], c: Convergence) -> bool {
    let w = c.window;
    if rounds.len() < (2 * w).max(c.min_rounds) {
        return false;
    }
    let mean = |s: &[RoundRecord]| s.iter().map(|r| r.monitor_loss).sum::<f64>() / s.len() as f64;
    let now = mean(&rounds[rounds.len() - w..]);
    let before = mean(&rounds[rounds.len() - 2 * w..rounds.len() - w]);
    (before - now) / before.abs().max(f64::MIN_POSITIVE) < c.tolerance
}
