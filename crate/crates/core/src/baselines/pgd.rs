//! Projected gradient ascent on the sum rate in amplitude variables.

use serde::{Deserialize, Serialize};

use super::simple::proportional_allocation;
use crate::channel::ChannelStats;
use crate::error::{Error, Result};
use crate::numerics::{Axis, Reduction, Tape, Tensor, Var};
use crate::rate::PowerAllocation;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PgdConfig {
    pub iterations: usize,
    /// First trial step of every backtracking search.
    pub initial_step: f64,
    /// Halvings tried before the search gives up.
    pub max_halvings: usize,
}

impl Default for PgdConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            initial_step: 1.0,
            max_halvings: 40,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PgdResult {
    pub allocation: PowerAllocation,
    pub sum_rate: f64,
    /// Objective after each accepted step, starting with the initial point.
    pub trace: Vec<f64>,
}

/// Sum rate as a function of `q = √P` (`K × N`), recorded on the tape.
pub fn sum_rate_amplitude(tape: &mut Tape, q: Var, stats: &ChannelStats) -> Result<Var> {
    let n_ues = stats.num_ues();
    let m = stats.antennas as f64;
    let rho = stats.downlink_snr;
    let v = tape.constant(stats.v.clone());
    let sigma = tape.constant(stats.sigma.clone());
    let inv_sigma = tape.constant(stats.sigma.map(|s| 1.0 / s));
    let mask = tape.constant(Tensor::from_fn(n_ues, n_ues, |a, b| {
        if a == b {
            0.0
        } else {
            stats.gram.get(a, b)
        }
    }));

    let qv = tape.mul(q, v)?;
    // Σ_k q_kn v_kn, 1 × N.
    let coherent = tape.reduce(qv, Reduction::Sum, Axis::Rows)?;
    let c2 = tape.square(coherent)?;
    let numerator = tape.scale(c2, rho * m * m)?;

    // B[n', n] = Σ_k q_kn' v_kn' ς_kn / ς_kn'.
    let a = tape.mul(qv, inv_sigma)?;
    let at = tape.transpose(a)?;
    let b = tape.matmul(at, sigma)?;
    let b2 = tape.square(b)?;
    let b2 = tape.mul(b2, mask)?;
    let contamination = tape.reduce(b2, Reduction::Sum, Axis::Rows)?;
    let contamination = tape.scale(contamination, rho * m * m)?;

    // Σ_n' Σ_k q²_kn' v_kn' ς_kn.
    let q2 = tape.square(q)?;
    let spent = tape.mul(q2, v)?;
    let per_ap = tape.reduce(spent, Reduction::Sum, Axis::Cols)?;
    let per_ap_t = tape.transpose(per_ap)?;
    let interference = tape.matmul(per_ap_t, sigma)?;
    let interference = tape.scale(interference, rho * m)?;

    let den = tape.add(contamination, interference)?;
    let den = tape.add_scalar(den, 1.0)?;
    let sinr = tape.div(numerator, den)?;
    let one_plus = tape.add_scalar(sinr, 1.0)?;
    let rates = tape.log2(one_plus)?;
    tape.sum_all(rates)
}

fn objective(q: &Tensor, stats: &ChannelStats) -> Result<f64> {
    let mut tape = Tape::new();
    let qv = tape.constant(q.clone());
    let s = sum_rate_amplitude(&mut tape, qv, stats)?;
    Ok(tape.value(s).item().unwrap_or(f64::NAN))
}

fn objective_and_gradient(q: &Tensor, stats: &ChannelStats) -> Result<(f64, Tensor)> {
    let mut tape = Tape::new();
    let qv = tape.param(q.clone());
    let s = sum_rate_amplitude(&mut tape, qv, stats)?;
    let grads = tape.backward(s)?;
    Ok((tape.value(s).item().unwrap_or(f64::NAN), grads.wrt(qv)))
}

/// Nearest point of `{q ≥ 0, Σ_n q²_kn v_kn ≤ 1/M}` in the metric weighted
/// by `v`: clamp negatives, then shrink each AP's row radially if needed.
pub fn project(q: &Tensor, stats: &ChannelStats) -> Tensor {
    let limit = 1.0 / stats.antennas as f64;
    let mut out = q.map(|x| x.max(0.0));
    for k in 0..out.rows() {
        let used: f64 = out
            .row(k)
            .iter()
            .zip(stats.v.row(k))
            .map(|(a, v)| a * a * v)
            .sum();
        // The slack keeps the map idempotent despite rounding in the rescale.
        if used > limit * (1.0 + 1e-12) {
            let s = (limit / used).sqrt();
            out.row_mut(k).iter_mut().for_each(|a| *a *= s);
        }
    }
    out
}

/// Ascent from `start` (proportional allocation when `None`). Steps are
/// preconditioned by `1/v`, i.e. plain gradient steps in `u = q √v`, where
/// the budget set is a Euclidean ball per AP. Only improving steps are
/// accepted, so the result never falls below the start.
pub fn projected_gradient_allocation(
    stats: &ChannelStats,
    config: &PgdConfig,
    start: Option<&PowerAllocation>,
) -> Result<PgdResult> {
    projected_gradient_observed(stats, config, start, |_| {})
}

/// As [`projected_gradient_allocation`], calling `observe` with the start
/// and every accepted iterate.
pub fn projected_gradient_observed(
    stats: &ChannelStats,
    config: &PgdConfig,
    start: Option<&PowerAllocation>,
    mut observe: impl FnMut(&PowerAllocation),
) -> Result<PgdResult> {
    let start = start
        .cloned()
        .unwrap_or_else(|| proportional_allocation(stats));
    let mut q = project(&start.matrix().map(f64::sqrt), stats);
    observe(&PowerAllocation::new(q.map(|x| x * x)));
    let (mut best, _) = objective_and_gradient(&q, stats)?;
    if !best.is_finite() {
        return Err(Error::NonFinite("projected gradient objective"));
    }
    let mut trace = vec![best];
    for _ in 0..config.iterations {
        let (f, g) = objective_and_gradient(&q, stats)?;
        let direction = g.zip_broadcast(&stats.v, "pgd direction", |g, v| g / v)?;
        let mut step = config.initial_step;
        let mut accepted = false;
        for _ in 0..=config.max_halvings {
            let trial = project(
                &q.zip_broadcast(&direction, "pgd step", |a, d| a + step * d)?,
                stats,
            );
            let value = objective(&trial, stats)?;
            if !value.is_finite() {
                return Err(Error::NonFinite("projected gradient objective"));
            }
            if value > f {
                q = trial;
                observe(&PowerAllocation::new(q.map(|x| x * x)));
                best = value;
                trace.push(value);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(PgdResult {
        allocation: PowerAllocation::new(q.map(|x| x * x)),
        sum_rate: best,
        trace,
    })
}
