//! Closed-form downlink ergodic rate under conjugate beamforming.
//!
//! Two routes compute the same per-UE rate:
//!
//! * [`ergodic_rate`] evaluates the closed form directly from the power
//!   matrix and channel statistics;
//! * [`rate_from_shared`] rebuilds it from the per-AP summaries (desired
//!   signal, pilot contamination, user interference) that APs uplink to
//!   the CPU during distributed training.
//!
//! [`monte_carlo_sinr_terms`] samples channels, pilot noise and MMSE
//! estimates to check every expectation the closed form is built from.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    mmse_estimate, sample_channels, ChannelStats, PilotNoise, SystemConfig, Topology,
};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Slack allowed on the per-AP budget `Σ_n P_kn v_kn ≤ 1/M`.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

/// Power-control coefficients `P_kn`, `K × N`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerAllocation(Tensor);

impl PowerAllocation {
    pub fn new(p: Tensor) -> Self {
        Self(p)
    }

    pub fn zeros(num_aps: usize, num_ues: usize) -> Self {
        Self(Tensor::zeros(num_aps, num_ues))
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Ok(Self(Tensor::from_rows(&rows)?))
    }

    pub fn matrix(&self) -> &Tensor {
        &self.0
    }

    pub fn into_matrix(self) -> Tensor {
        self.0
    }

    pub fn get(&self, ap: usize, ue: usize) -> f64 {
        self.0.get(ap, ue)
    }

    /// `Σ_n P_kn v_kn` for every AP.
    pub fn budget_usage(&self, stats: &ChannelStats) -> Vec<f64> {
        (0..self.0.rows())
            .map(|k| {
                self.0
                    .row(k)
                    .iter()
                    .zip(stats.v.row(k))
                    .map(|(p, v)| p * v)
                    .sum()
            })
            .collect()
    }

    /// Nonnegativity and the per-AP power budget.
    pub fn validate(&self, stats: &ChannelStats) -> Result<()> {
        if self.0.shape() != stats.v.shape() {
            return Err(Error::Shape {
                op: "power allocation",
                lhs: self.0.shape(),
                rhs: stats.v.shape(),
            });
        }
        for k in 0..self.0.rows() {
            for (n, &p) in self.0.row(k).iter().enumerate() {
                if !(p.is_finite() && p >= 0.0) {
                    return Err(Error::Constraint {
                        ap: k,
                        ue: Some(n),
                        detail: format!("coefficient {p} is not a nonnegative number"),
                    });
                }
            }
        }
        let limit = 1.0 / stats.antennas as f64;
        for (k, used) in self.budget_usage(stats).into_iter().enumerate() {
            if used > limit + BUDGET_TOLERANCE {
                return Err(Error::Constraint {
                    ap: k,
                    ue: None,
                    detail: format!("budget {used} exceeds 1/M = {limit}"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// bits/s/Hz per UE.
    pub per_ue: Vec<f64>,
    pub sum_rate: f64,
}

impl RateReport {
    pub fn from_sinr(sinr: impl IntoIterator<Item = f64>) -> Self {
        let per_ue: Vec<f64> = sinr.into_iter().map(|s| (1.0 + s).log2()).collect();
        let sum_rate = per_ue.iter().sum();
        Self { per_ue, sum_rate }
    }
}

/// Per-UE rate from the closed form; rejects infeasible allocations.
pub fn ergodic_rate(p: &PowerAllocation, stats: &ChannelStats) -> Result<RateReport> {
    p.validate(stats)?;
    Ok(RateReport::from_sinr(closed_form_sinr(p.matrix(), stats)))
}

/// Closed-form SINR without feasibility checks; used by optimizers that
/// need the objective at trial points.
pub fn closed_form_sinr(p: &Tensor, stats: &ChannelStats) -> Vec<f64> {
    let (k_aps, n_ues) = stats.v.shape();
    let m = stats.antennas as f64;
    let rho = stats.downlink_snr;
    let (v, sigma, gram) = (&stats.v, &stats.sigma, &stats.gram);
    (0..n_ues)
        .map(|n| {
            let coherent: f64 = (0..k_aps).map(|k| p.get(k, n).sqrt() * v.get(k, n)).sum();
            let numerator = rho * m * m * coherent * coherent;
            let mut contamination = 0.0;
            for other in (0..n_ues).filter(|&o| o != n) {
                if gram.get(other, n) == 0.0 {
                    continue;
                }
                let s: f64 = (0..k_aps)
                    .map(|k| {
                        p.get(k, other).sqrt() * v.get(k, other) * sigma.get(k, n)
                            / sigma.get(k, other)
                    })
                    .sum();
                contamination += s * s * gram.get(other, n);
            }
            let mut interference = 0.0;
            for other in 0..n_ues {
                for k in 0..k_aps {
                    interference += p.get(k, other) * v.get(k, other) * sigma.get(k, n);
                }
            }
            numerator / (rho * m * m * contamination + rho * m * interference + 1.0)
        })
        .collect()
}

/// Closed-form values of the expectations behind the rate of each UE.
///
/// With `a_nn' = √ρ_d Σ_k √P_kn' h_knᵀ ĥ*_kn'` the effective gain of UE
/// `n'`'s symbol at UE `n`, the SINR is
/// `|E a_nn|² / (Var a_nn + Σ_{n'≠n} E|a_nn'|² + 1)` and
/// `E|a_nn'|² = |E a_nn'|² + Var a_nn'`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinrTerms {
    /// `E a_nn`.
    pub desired_mean: f64,
    /// `Var a_nn`, the beamforming-gain uncertainty.
    pub gain_variance: f64,
    /// `Σ_{n'≠n} |E a_nn'|²`, coherent pilot-contamination power.
    pub contamination_power: f64,
    /// `Σ_{n'≠n} Var a_nn'`, non-coherent multi-user interference power.
    pub interference_power: f64,
}

impl SinrTerms {
    /// `Σ_{n'≠n} E|a_nn'|²`, everything other UEs' symbols leak in.
    pub fn cross_power(&self) -> f64 {
        self.contamination_power + self.interference_power
    }

    pub fn sinr(&self) -> f64 {
        self.desired_mean * self.desired_mean / (self.gain_variance + self.cross_power() + 1.0)
    }
}

pub fn closed_form_terms(p: &Tensor, stats: &ChannelStats) -> Vec<SinrTerms> {
    let (k_aps, n_ues) = stats.v.shape();
    let m = stats.antennas as f64;
    let rho = stats.downlink_snr;
    let (v, sigma, gram) = (&stats.v, &stats.sigma, &stats.gram);
    let noncoherent = |n: usize, other: usize| -> f64 {
        rho * m
            * (0..k_aps)
                .map(|k| p.get(k, other) * v.get(k, other) * sigma.get(k, n))
                .sum::<f64>()
    };
    (0..n_ues)
        .map(|n| {
            let desired_mean = rho.sqrt()
                * m
                * (0..k_aps)
                    .map(|k| p.get(k, n).sqrt() * v.get(k, n))
                    .sum::<f64>();
            let mut contamination_power = 0.0;
            let mut interference_power = 0.0;
            for other in (0..n_ues).filter(|&o| o != n) {
                let mean = rho.sqrt()
                    * m
                    * gram.get(other, n)
                    * (0..k_aps)
                        .map(|k| {
                            p.get(k, other).sqrt() * v.get(k, other) * sigma.get(k, n)
                                / sigma.get(k, other)
                        })
                        .sum::<f64>();
                contamination_power += mean * mean;
                interference_power += noncoherent(n, other);
            }
            SinrTerms {
                desired_mean,
                gain_variance: noncoherent(n, n),
                contamination_power,
                interference_power,
            }
        })
        .collect()
}

/// Processed channel information one AP uplinks during training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharedInfo {
    /// `[DS]_n = √(ρ_d P_kn) v_kn`.
    pub ds: Vec<f64>,
    /// `[PC]_{n'n} = |√(ρ_d P_kn') v_kn' (ς_kn/ς_kn') θ_n'ᴴθ_n|`.
    pub pc: Tensor,
    /// `[UI]_{nn'} = ρ_d P_kn' v_kn' ς_kn`.
    pub ui: Tensor,
}

impl SharedInfo {
    pub fn num_ues(&self) -> usize {
        self.ds.len()
    }

    /// Scalars in DS, PC and UI as defined.
    pub fn literal_len(&self) -> usize {
        let n = self.num_ues();
        n + 2 * n * n
    }

    /// The part of the summaries the CPU actually consumes: DS, the
    /// off-diagonal of PC (the diagonal never enters the rate), and the row
    /// sums of UI (only `Σ_n' [UI]_{nn'}` enters the rate).
    pub fn payload(&self) -> UplinkPayload {
        let n = self.num_ues();
        let mut pc_off_diagonal = Vec::with_capacity(n * n.saturating_sub(1));
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    pc_off_diagonal.push(self.pc.get(a, b));
                }
            }
        }
        let ui_row_sums = (0..n).map(|a| self.ui.row(a).iter().sum()).collect();
        UplinkPayload {
            ds: self.ds.clone(),
            pc_off_diagonal,
            ui_row_sums,
        }
    }
}

/// Compact uplink message: `N + N(N-1) + N = N² + N` scalars.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UplinkPayload {
    pub ds: Vec<f64>,
    /// Row-major `(n', n)` pairs with `n' ≠ n`.
    pub pc_off_diagonal: Vec<f64>,
    pub ui_row_sums: Vec<f64>,
}

impl UplinkPayload {
    pub fn num_ues(&self) -> usize {
        self.ds.len()
    }

    pub fn len(&self) -> usize {
        self.ds.len() + self.pc_off_diagonal.len() + self.ui_row_sums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn shared_info(ap: usize, p_row: &[f64], stats: &ChannelStats) -> SharedInfo {
    let n_ues = stats.num_ues();
    let rho = stats.downlink_snr;
    let v = stats.v.row(ap);
    let sigma = stats.sigma.row(ap);
    let ds: Vec<f64> = (0..n_ues).map(|n| (rho * p_row[n]).sqrt() * v[n]).collect();
    let pc = Tensor::from_fn(n_ues, n_ues, |other, n| {
        (ds[other] * sigma[n] / sigma[other] * stats.gram.get(other, n)).abs()
    });
    let ui = Tensor::from_fn(n_ues, n_ues, |n, other| {
        rho * p_row[other] * v[other] * sigma[n]
    });
    SharedInfo { ds, pc, ui }
}

/// Rate of every UE from the summaries of all `K` APs.
pub fn rate_from_shared(infos: &[SharedInfo], antennas: usize) -> Result<RateReport> {
    let n_ues = check_sizes(
        infos
            .iter()
            .map(|i| (i.ds.len(), i.pc.shape(), i.ui.shape())),
    )?;
    let m = antennas as f64;
    let mut ds = vec![0.0; n_ues];
    let mut pc = Tensor::zeros(n_ues, n_ues);
    let mut ui = Tensor::zeros(n_ues, n_ues);
    for info in infos {
        for (acc, x) in ds.iter_mut().zip(&info.ds) {
            *acc += x;
        }
        pc.add_assign(&info.pc);
        ui.add_assign(&info.ui);
    }
    Ok(RateReport::from_sinr((0..n_ues).map(|n| {
        let contamination: f64 = (0..n_ues)
            .filter(|&o| o != n)
            .map(|o| pc.get(o, n).powi(2))
            .sum();
        let interference: f64 = ui.row(n).iter().sum();
        m * m * ds[n] * ds[n] / (m * m * contamination + m * interference + 1.0)
    })))
}

/// Same rate computed from compact payloads.
pub fn rate_from_payloads(payloads: &[UplinkPayload], antennas: usize) -> Result<RateReport> {
    let n_ues = check_sizes(payloads.iter().map(|p| {
        let n = p.ds.len();
        let pc_rows = if n == 0 {
            0
        } else {
            p.pc_off_diagonal.len() / n.max(1) + 1
        };
        (n, (pc_rows, n), (p.ui_row_sums.len(), n))
    }))?;
    if payloads
        .iter()
        .any(|p| p.pc_off_diagonal.len() != n_ues * (n_ues - 1))
    {
        return Err(Error::SharedInfo(
            "contamination block has the wrong length".into(),
        ));
    }
    let m = antennas as f64;
    let mut ds = vec![0.0; n_ues];
    let mut pc = vec![0.0; n_ues * (n_ues - 1)];
    let mut ui = vec![0.0; n_ues];
    for p in payloads {
        ds.iter_mut().zip(&p.ds).for_each(|(a, x)| *a += x);
        pc.iter_mut()
            .zip(&p.pc_off_diagonal)
            .for_each(|(a, x)| *a += x);
        ui.iter_mut().zip(&p.ui_row_sums).for_each(|(a, x)| *a += x);
    }
    // Row-major (n', n) order with the diagonal skipped.
    let at = |other: usize, n: usize| -> f64 {
        let col = if n > other { n - 1 } else { n };
        pc[other * (n_ues - 1) + col]
    };
    Ok(RateReport::from_sinr((0..n_ues).map(|n| {
        let contamination: f64 = (0..n_ues)
            .filter(|&o| o != n)
            .map(|o| at(o, n).powi(2))
            .sum();
        m * m * ds[n] * ds[n] / (m * m * contamination + m * ui[n] + 1.0)
    })))
}

fn check_sizes(
    mut sizes: impl Iterator<Item = (usize, (usize, usize), (usize, usize))>,
) -> Result<usize> {
    let Some((n, pc, ui)) = sizes.next() else {
        return Err(Error::SharedInfo("no AP reported".into()));
    };
    if n == 0 || pc != (n, n) || ui.0 != n {
        return Err(Error::SharedInfo(format!(
            "inconsistent block sizes for N = {n}"
        )));
    }
    for (i, (n2, pc2, ui2)) in sizes.enumerate() {
        if n2 != n || pc2 != pc || ui2 != ui {
            return Err(Error::SharedInfo(format!(
                "AP {} reports N = {n2}, AP 0 reports N = {n}",
                i + 1
            )));
        }
    }
    Ok(n)
}

/// Sampled counterpart of [`SinrTerms`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampledTerms {
    pub terms: SinrTerms,
    /// `Σ_{n'≠n}` of the sample mean of `|a_nn'|²`.
    pub cross_power: f64,
    pub sinr: f64,
    /// Batch-means standard errors of the fields above.
    pub std_errors: StdErrors,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct StdErrors {
    pub desired_mean: f64,
    pub gain_variance: f64,
    pub contamination_power: f64,
    pub interference_power: f64,
    pub cross_power: f64,
    pub sinr: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub samples: usize,
    pub blocks: usize,
    pub per_ue: Vec<SampledTerms>,
}

const MC_BLOCKS: usize = 20;

/// Moment sums of `a_nn'` over a block of realizations.
#[derive(Clone)]
struct Moments {
    count: usize,
    sum: Vec<Complex64>,
    sum_sq: Vec<f64>,
}

impl Moments {
    fn new(n: usize) -> Self {
        Self {
            count: 0,
            sum: vec![Complex64::new(0.0, 0.0); n * n],
            sum_sq: vec![0.0; n * n],
        }
    }

    fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
    }

    fn terms(&self, n_ues: usize) -> Vec<[f64; 6]> {
        let t = self.count as f64;
        let mean = |a: usize, b: usize| self.sum[a * n_ues + b] / t;
        let var = |a: usize, b: usize| {
            let mu = mean(a, b);
            (self.sum_sq[a * n_ues + b] - t * mu.norm_sqr()) / (t - 1.0)
        };
        (0..n_ues)
            .map(|n| {
                let mut contamination_power = 0.0;
                let mut interference_power = 0.0;
                for o in (0..n_ues).filter(|&o| o != n) {
                    let v = var(n, o);
                    // |ā|² − s²/T is unbiased for |E a|².
                    contamination_power += mean(n, o).norm_sqr() - v / t;
                    interference_power += v;
                }
                let cross: f64 = (0..n_ues)
                    .filter(|&o| o != n)
                    .map(|o| self.sum_sq[n * n_ues + o] / t)
                    .sum();
                let sinr = mean(n, n).norm_sqr() / (var(n, n) + cross + 1.0);
                [
                    mean(n, n).re,
                    var(n, n),
                    contamination_power,
                    interference_power,
                    cross,
                    sinr,
                ]
            })
            .collect()
    }
}

/// Samples `n_samples` realizations of channels, pilot noise and MMSE
/// estimates and estimates the expectations in [`SinrTerms`].
///
/// Samples are split into fixed blocks with their own generators seeded
/// from `rng`; blocks run in parallel and are merged in order.
pub fn monte_carlo_sinr_terms<R: Rng + ?Sized>(
    p: &PowerAllocation,
    topology: &Topology,
    config: &SystemConfig,
    n_samples: usize,
    rng: &mut R,
) -> Result<MonteCarloReport> {
    if n_samples < 2 {
        return Err(Error::Config("Monte-Carlo needs at least 2 samples".into()));
    }
    let n_ues = topology.num_ues();
    let blocks = MC_BLOCKS.min(n_samples / 2).max(1);
    let seeds: Vec<u64> = (0..blocks).map(|_| rng.random()).collect();
    let amp: Tensor = p.matrix().map(|x| (config.downlink_snr * x).sqrt());

    let block_moments: Vec<Moments> = seeds
        .par_iter()
        .enumerate()
        .map(|(b, &seed)| {
            let count = n_samples / blocks + usize::from(b < n_samples % blocks);
            let mut brng = ChaCha8Rng::seed_from_u64(seed);
            let mut mom = Moments::new(n_ues);
            for _ in 0..count {
                let h = sample_channels(topology, config, &mut brng);
                let noise = PilotNoise::sample(config, &mut brng);
                let est = mmse_estimate(&h, topology, config, &noise);
                accumulate(&mut mom, &h, &est, &amp);
            }
            mom
        })
        .collect();

    let mut total = Moments::new(n_ues);
    for m in &block_moments {
        total.merge(m);
    }
    let pooled = total.terms(n_ues);
    let per_block: Vec<Vec<[f64; 6]>> = block_moments.iter().map(|m| m.terms(n_ues)).collect();

    let per_ue = pooled
        .into_iter()
        .enumerate()
        .map(|(n, f)| {
            let mut se = [0.0; 6];
            if blocks > 1 {
                let b = blocks as f64;
                for (j, out) in se.iter_mut().enumerate() {
                    let mean = per_block.iter().map(|v| v[n][j]).sum::<f64>() / b;
                    let var = per_block
                        .iter()
                        .map(|v| (v[n][j] - mean).powi(2))
                        .sum::<f64>()
                        / (b - 1.0);
                    *out = (var / b).sqrt();
                }
            }
            SampledTerms {
                terms: SinrTerms {
                    desired_mean: f[0],
                    gain_variance: f[1],
                    contamination_power: f[2],
                    interference_power: f[3],
                },
                cross_power: f[4],
                sinr: f[5],
                std_errors: StdErrors {
                    desired_mean: se[0],
                    gain_variance: se[1],
                    contamination_power: se[2],
                    interference_power: se[3],
                    cross_power: se[4],
                    sinr: se[5],
                },
            }
        })
        .collect();

    Ok(MonteCarloReport {
        samples: n_samples,
        blocks,
        per_ue,
    })
}

fn accumulate(
    mom: &mut Moments,
    h: &crate::channel::ChannelRealization,
    est: &crate::channel::ChannelRealization,
    amp: &Tensor,
) {
    let (k_aps, n_ues) = amp.shape();
    mom.count += 1;
    for n in 0..n_ues {
        for o in 0..n_ues {
            let mut a = Complex64::new(0.0, 0.0);
            for k in 0..k_aps {
                let w = amp.get(k, o);
                if w == 0.0 {
                    continue;
                }
                let inner: Complex64 = h
                    .channel(k, n)
                    .iter()
                    .zip(est.channel(k, o))
                    .map(|(x, y)| x * y.conj())
                    .sum();
                a += inner * w;
            }
            mom.sum[n * n_ues + o] += a;
            mom.sum_sq[n * n_ues + o] += a.norm_sqr();
        }
    }
}
