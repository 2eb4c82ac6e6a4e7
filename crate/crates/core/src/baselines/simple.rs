//! Closed-form allocators that fill every AP's budget.

use crate::channel::ChannelStats;
use crate::numerics::Tensor;
use crate::rate::PowerAllocation;

/// Each UE gets `1/(MN)` of AP `k`'s budget: `P_kn = 1/(M N v_kn)`.
pub fn equal_allocation(stats: &ChannelStats) -> PowerAllocation {
    let (k, n) = stats.v.shape();
    let share = 1.0 / (stats.antennas as f64 * n as f64);
    PowerAllocation::new(Tensor::from_fn(k, n, |a, u| share / stats.v.get(a, u)))
}

/// Budget split in proportion to large-scale gain:
/// `P_kn v_kn = (1/M) ς_kn / Σ_n' ς_kn'`.
pub fn proportional_allocation(stats: &ChannelStats) -> PowerAllocation {
    let (k, n) = stats.v.shape();
    let m = stats.antennas as f64;
    let totals: Vec<f64> = (0..k).map(|a| stats.sigma.row(a).iter().sum()).collect();
    PowerAllocation::new(Tensor::from_fn(k, n, |a, u| {
        stats.sigma.get(a, u) / (totals[a] * m * stats.v.get(a, u))
    }))
}
