//! The message-passing network shared by all APs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::{build_graph_from_row, ApGraph, FeatureNorm, GraphBatch};
use super::mlp::{BoundDense, BoundMlp, Dense, Mlp};
use crate::channel::{ChannelStats, SystemConfig, Topology};
use crate::error::{Error, Result};
use crate::numerics::{Reduction, Tape, Tensor, Var};
use crate::rate::PowerAllocation;

/// Guard in the power-normalizing denominator.
pub const POWER_EPSILON: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Mean,
    Sum,
    Max,
}

impl Aggregation {
    fn reduction(self) -> Reduction {
        match self {
            Aggregation::Mean => Reduction::Mean,
            Aggregation::Sum => Reduction::Sum,
            Aggregation::Max => Reduction::Max,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub pilot_len: usize,
    /// Node-state width carried between layers.
    pub hidden: usize,
    /// Widths of φ2 after its input (`hidden + 2`).
    pub message_widths: Vec<usize>,
    /// Widths of φ1 after its input (`hidden + message`); the second to last
    /// must equal `hidden` and the last must be 1.
    pub update_widths: Vec<usize>,
    pub layers: usize,
    pub aggregation: Aggregation,
}

impl ModelConfig {
    pub fn new(pilot_len: usize) -> Self {
        Self {
            pilot_len,
            hidden: 12,
            message_widths: vec![16, 32, 64],
            update_widths: vec![32, 12, 1],
            layers: 3,
            aggregation: Aggregation::Mean,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("model: {m}")));
        if self.pilot_len == 0 || self.hidden == 0 || self.layers == 0 {
            return bad("pilot length, hidden width and layer count must be positive");
        }
        if self.message_widths.is_empty() || self.message_widths.contains(&0) {
            return bad("message widths must be non-empty and positive");
        }
        let u = &self.update_widths;
        if u.len() < 2 || u[u.len() - 1] != 1 || u[u.len() - 2] != self.hidden || u.contains(&0) {
            return bad("update widths must end with [hidden, 1]");
        }
        Ok(())
    }

    fn message_input(&self) -> Vec<usize> {
        std::iter::once(self.hidden + 2)
            .chain(self.message_widths.iter().copied())
            .collect()
    }

    fn update_input(&self) -> Vec<usize> {
        let msg = *self.message_widths.last().unwrap();
        std::iter::once(self.hidden + msg)
            .chain(self.update_widths.iter().copied())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnnModel {
    pub config: ModelConfig,
    pub norm: FeatureNorm,
    /// Lifts raw node features to the hidden width.
    pub encoder: Dense,
    /// φ2, the message builder.
    pub message: Mlp,
    /// φ1, the node update; its penultimate activation is the next state.
    pub update: Mlp,
}

/// Deterministic initialization from `seed`.
pub fn init_model(config: ModelConfig, seed: u64) -> Result<GnnModel> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let encoder = Dense::init(config.pilot_len + 2, config.hidden, &mut rng);
    let message = Mlp::init(&config.message_input(), &mut rng);
    let mut update = Mlp::init(&config.update_input(), &mut rng);
    // A small positive head bias keeps the output ReLU alive at the start.
    update.layers.last_mut().unwrap().bias = Tensor::filled(1, 1, 0.1);
    Ok(GnnModel {
        config,
        norm: FeatureNorm::default(),
        encoder,
        message,
        update,
    })
}

impl GnnModel {
    /// Parameter tensors in a fixed order.
    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut out = vec![&self.encoder.weight, &self.encoder.bias];
        for l in self.message.layers.iter().chain(&self.update.layers) {
            out.push(&l.weight);
            out.push(&l.bias);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = vec![&mut self.encoder.weight, &mut self.encoder.bias];
        for l in self
            .message
            .layers
            .iter_mut()
            .chain(self.update.layers.iter_mut())
        {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        out
    }

    /// `|Ψ|`, the scalar count of a broadcast.
    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.tensors()
            .iter()
            .flat_map(|t| t.data().iter().copied())
            .collect()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Checkpoint(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                flat.len()
            )));
        }
        let mut at = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.data_mut().copy_from_slice(&flat[at..at + n]);
            at += n;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    /// Records the parameters on `tape`; `tracked` selects whether their
    /// gradients are reported.
    pub fn bind(&self, tape: &mut Tape, tracked: bool) -> BoundModel {
        BoundModel {
            config: self.config.clone(),
            encoder: self.encoder.bind(tape, tracked),
            message: self.message.bind(tape, tracked),
            update: self.update.bind(tape, tracked),
        }
    }

    pub fn graph(
        &self,
        sigma_row: &[f64],
        pilot_index: &[usize],
        config: &SystemConfig,
    ) -> ApGraph {
        build_graph_from_row(sigma_row, pilot_index, config, &self.norm)
    }
}

/// A model whose parameters live on a tape.
#[derive(Clone, Debug)]
pub struct BoundModel {
    pub config: ModelConfig,
    pub encoder: BoundDense,
    pub message: BoundMlp,
    pub update: BoundMlp,
}

impl BoundModel {
    /// Parameter handles in [`GnnModel::tensors`] order.
    pub fn vars(&self) -> Vec<Var> {
        let mut out = vec![self.encoder.weight, self.encoder.bias];
        for l in self.message.layers.iter().chain(&self.update.layers) {
            out.push(l.weight);
            out.push(l.bias);
        }
        out
    }

    /// Nonnegative score per node, `num_nodes × 1`.
    pub fn forward(&self, tape: &mut Tape, batch: &GraphBatch) -> Result<Var> {
        let n = batch.num_nodes();
        let z = tape.constant(batch.z.clone());
        let edges = tape.constant(batch.edge_features.clone());
        let msg_width = *self.config.message_widths.last().unwrap();
        let depth = self.update.layers.len();
        let mut h = self.encoder.forward_relu(tape, z)?;
        for layer in 0..self.config.layers {
            let agg = if batch.src.is_empty() {
                tape.constant(Tensor::zeros(n, msg_width))
            } else {
                let from = tape.gather_rows(h, &batch.src)?;
                let input = tape.concat_cols(&[from, edges])?;
                let msgs = self.message.forward(tape, input)?;
                tape.segment_reduce(msgs, self.config.aggregation.reduction(), &batch.dst, n)?
            };
            let joined = tape.concat_cols(&[h, agg])?;
            let last = layer + 1 == self.config.layers;
            if last {
                return self.update.forward(tape, joined);
            }
            h = self.update.forward_prefix(tape, joined, depth - 1)?;
        }
        unreachable!("at least one layer")
    }

    /// `P_n = x_n / (M Σ_{n'∈graph} x_n' v_n' + ε)` for every graph in the
    /// batch; `v` is the column of estimate variances in node order.
    pub fn power(
        &self,
        tape: &mut Tape,
        batch: &GraphBatch,
        scores: Var,
        v: Var,
        antennas: usize,
    ) -> Result<Var> {
        power_activation_tape(
            tape,
            scores,
            v,
            &batch.node_graph,
            batch.num_graphs(),
            antennas,
        )
    }
}

/// On-tape form of [`power_activation`] for nodes grouped into graphs.
pub fn power_activation_tape(
    tape: &mut Tape,
    x: Var,
    v: Var,
    node_graph: &[usize],
    graphs: usize,
    antennas: usize,
) -> Result<Var> {
    let xv = tape.mul(x, v)?;
    let per_graph = tape.segment_reduce(xv, Reduction::Sum, node_graph, graphs)?;
    let spread = tape.gather_rows(per_graph, node_graph)?;
    let scaled = tape.scale(spread, antennas as f64)?;
    let denom = tape.add_scalar(scaled, POWER_EPSILON)?;
    tape.div(x, denom)
}

/// Scales nonnegative scores onto AP `k`'s budget `Σ_n P_n v_n ≤ 1/M`.
pub fn power_activation(x: &[f64], v: &[f64], antennas: usize) -> Vec<f64> {
    let s: f64 = x.iter().zip(v).map(|(a, b)| a * b).sum();
    let denom = antennas as f64 * s + POWER_EPSILON;
    x.iter().map(|a| a / denom).collect()
}

/// Scores for a single graph.
pub fn mpgnn_forward(model: &GnnModel, graph: &ApGraph) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let bound = model.bind(&mut tape, false);
    let out = bound.forward(&mut tape, &GraphBatch::new(&[graph]))?;
    Ok(tape.value(out).data().to_vec())
}

/// Power row of AP `k` from its own statistics.
pub fn predict_power(
    model: &GnnModel,
    k: usize,
    topology: &Topology,
    stats: &ChannelStats,
    config: &SystemConfig,
) -> Result<Vec<f64>> {
    predict_row(
        model,
        topology.sigma.row(k),
        stats.v.row(k),
        &topology.pilot_index,
        config,
    )
}

/// Same as [`predict_power`] but taking the AP's local data directly.
pub fn predict_row(
    model: &GnnModel,
    sigma_row: &[f64],
    v_row: &[f64],
    pilot_index: &[usize],
    config: &SystemConfig,
) -> Result<Vec<f64>> {
    let graph = model.graph(sigma_row, pilot_index, config);
    let x = mpgnn_forward(model, &graph)?;
    Ok(power_activation(&x, v_row, config.antennas))
}

/// Every AP's row, evaluated as one batched pass.
pub fn predict_all(
    model: &GnnModel,
    topology: &Topology,
    stats: &ChannelStats,
    config: &SystemConfig,
) -> Result<PowerAllocation> {
    let (k_aps, n_ues) = topology.sigma.shape();
    let graphs: Vec<ApGraph> = (0..k_aps)
        .map(|k| model.graph(topology.sigma.row(k), &topology.pilot_index, config))
        .collect();
    let refs: Vec<&ApGraph> = graphs.iter().collect();
    let batch = GraphBatch::new(&refs);
    let mut tape = Tape::new();
    let bound = model.bind(&mut tape, false);
    let scores = bound.forward(&mut tape, &batch)?;
    let x = tape.value(scores).data().to_vec();
    let mut p = Tensor::zeros(k_aps, n_ues);
    for k in 0..k_aps {
        let row = power_activation(
            &x[k * n_ues..(k + 1) * n_ues],
            stats.v.row(k),
            config.antennas,
        );
        p.row_mut(k).copy_from_slice(&row);
    }
    Ok(PowerAllocation::new(p))
}
