//! Distributed training with a simulated CPU and AP actors.

mod exchange;
mod loss;
mod optimizer;
mod train;

pub use exchange::{
    centralized_formula, distributed_training_formula, ExchangeLedger, MessageBus, Phase,
};
pub use loss::sum_rate_tape;
pub use optimizer::{optimizer_step, AdamConfig, AdamState};
pub(crate) use train::{converged, BatchSampler};
pub use train::{
    designate_aps, distributed_inference, full_loss, mean_sum_rate, round_loss_and_gradient, train,
    Convergence, DesignationPolicy, RoundRecord, Snapshot, StopReason, TrainConfig, TrainLog,
    TrainOutcome, TrainSummary,
};

#[cfg(test)]
mod tests;
