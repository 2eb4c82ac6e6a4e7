//! Per-AP message-passing GNN for power allocation.

mod checkpoint;
mod graph;
mod mlp;
mod model;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, ModelCheckpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};
pub use graph::{build_graph, build_graph_from_row, ApGraph, FeatureNorm, GraphBatch};
pub use mlp::{BoundDense, BoundMlp, Dense, Mlp};
pub use model::{
    init_model, mpgnn_forward, power_activation, power_activation_tape, predict_all, predict_power,
    predict_row, Aggregation, BoundModel, GnnModel, ModelConfig, POWER_EPSILON,
};

#[cfg(test)]
mod tests;
