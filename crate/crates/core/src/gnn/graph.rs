//! Per-AP graphs: one node per UE, complete directed edges between UEs.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelStats, SystemConfig, Topology};
use crate::numerics::Tensor;

/// Standardization of `log10 ς`, fitted on training data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureNorm {
    pub mean: f64,
    pub std: f64,
}

impl Default for FeatureNorm {
    fn default() -> Self {
        Self {
            mean: 0.0,
            std: 1.0,
        }
    }
}

impl FeatureNorm {
    /// Mean and standard deviation of `log10 ς` over every entry given.
    pub fn fit<'a>(sigmas: impl IntoIterator<Item = &'a Tensor>) -> Self {
        let logs: Vec<f64> = sigmas
            .into_iter()
            .flat_map(|s| s.data().iter().map(|x| x.log10()))
            .collect();
        if logs.is_empty() {
            return Self::default();
        }
        let n = logs.len() as f64;
        let mean = logs.iter().sum::<f64>() / n;
        let var = logs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let std = if var > 0.0 { var.sqrt() } else { 1.0 };
        Self { mean, std }
    }

    pub fn apply(&self, sigma: f64) -> f64 {
        (sigma.log10() - self.mean) / self.std
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApGraph {
    /// `N × (τ_p + 2)`; row `n` is `[ς̃_kn, θ_nᵀ, log10 ρ_d]`.
    pub z: Tensor,
    /// `N·N × 2`; row `n·N + n'` is `[ς̃_kn, ς̃_kn']`, zero when `n = n'`.
    pub edges: Tensor,
}

impl ApGraph {
    pub fn num_nodes(&self) -> usize {
        self.z.rows()
    }

    pub fn edge(&self, n: usize, other: usize) -> [f64; 2] {
        let r = self.edges.row(n * self.num_nodes() + other);
        [r[0], r[1]]
    }
}

/// Graph seen by AP `k`; reads only row `k` of `ς` and the pilot assignment.
pub fn build_graph(
    k: usize,
    topology: &Topology,
    _stats: &ChannelStats,
    config: &SystemConfig,
    norm: &FeatureNorm,
) -> ApGraph {
    build_graph_from_row(topology.sigma.row(k), &topology.pilot_index, config, norm)
}

pub fn build_graph_from_row(
    sigma_row: &[f64],
    pilot_index: &[usize],
    config: &SystemConfig,
    norm: &FeatureNorm,
) -> ApGraph {
    let n_ues = sigma_row.len();
    let tau = config.pilot_len;
    let s: Vec<f64> = sigma_row.iter().map(|&x| norm.apply(x)).collect();
    let snr = config.downlink_snr.log10();
    let z = Tensor::from_fn(n_ues, tau + 2, |n, c| match c {
        0 => s[n],
        c if c == tau + 1 => snr,
        c => f64::from(u8::from(pilot_index[n] == c - 1)),
    });
    let edges = Tensor::from_fn(n_ues * n_ues, 2, |r, c| {
        let (n, other) = (r / n_ues, r % n_ues);
        match (n == other, c) {
            (true, _) => 0.0,
            (false, 0) => s[n],
            (false, _) => s[other],
        }
    });
    ApGraph { z, edges }
}

/// Several graphs merged into one disconnected graph so a single forward
/// pass serves them all.
#[derive(Clone, Debug)]
pub struct GraphBatch {
    pub z: Tensor,
    /// Message `e` goes from node `src[e]` to node `dst[e]`.
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    /// Row `e` is `E_{src,dst}`.
    pub edge_features: Tensor,
    /// Graph each node belongs to.
    pub node_graph: Vec<usize>,
    /// First node of each graph, plus the total node count.
    pub offsets: Vec<usize>,
}

impl GraphBatch {
    pub fn new(graphs: &[&ApGraph]) -> Self {
        let width = graphs.first().map_or(0, |g| g.z.cols());
        let total: usize = graphs.iter().map(|g| g.num_nodes()).sum();
        let mut z = Vec::with_capacity(total * width);
        let (mut src, mut dst, mut feats, mut node_graph) = (vec![], vec![], vec![], vec![]);
        let mut offsets = vec![0];
        for (gi, g) in graphs.iter().enumerate() {
            let base = *offsets.last().unwrap();
            let n = g.num_nodes();
            z.extend_from_slice(g.z.data());
            node_graph.extend(std::iter::repeat_n(gi, n));
            for to in 0..n {
                for from in (0..n).filter(|&f| f != to) {
                    src.push(base + from);
                    dst.push(base + to);
                    feats.extend_from_slice(&g.edge(from, to));
                }
            }
            offsets.push(base + n);
        }
        let edges = src.len();
        Self {
            z: Tensor::from_vec(total, width, z).expect("graphs share the feature width"),
            src,
            dst,
            edge_features: Tensor::from_vec(edges, 2, feats).expect("two edge features"),
            node_graph,
            offsets,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.z.rows()
    }

    pub fn num_graphs(&self) -> usize {
        self.offsets.len() - 1
    }
}
