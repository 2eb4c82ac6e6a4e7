//! Reference allocators.

mod centralized;
mod pgd;
mod simple;

pub use centralized::{
    centralized_mean_sum_rate, centralized_predict, centralized_train, init_centralized,
    CentralizedConfig, CentralizedGnnModel, CentralizedOutcome,
};
pub use pgd::{
    project, projected_gradient_allocation, projected_gradient_observed, sum_rate_amplitude,
    PgdConfig, PgdResult,
};
pub use simple::{equal_allocation, proportional_allocation};
