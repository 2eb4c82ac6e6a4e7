//! Closed-form SINR terms against simulated channels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{compute_v, sample_topology, SystemConfig, Topology};
use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::rate::{
    closed_form_terms, monte_carlo_sinr_terms, MonteCarloReport, PowerAllocation, SinrTerms,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    /// Random instances, plus one zero-power instance.
    pub instances: usize,
    pub samples: usize,
    /// Largest allowed relative error of any term.
    pub tolerance: f64,
    pub max_aps: usize,
    pub max_ues: usize,
    pub max_antennas: usize,
    /// Side of the deployment square for the tiny networks, meters.
    pub area_side: f64,
    /// Normal quantile for the reported confidence radii.
    pub z: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            instances: 10,
            samples: 100_000,
            tolerance: 0.01,
            max_aps: 3,
            max_ues: 3,
            max_antennas: 2,
            area_side: 200.0,
            z: 1.96,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 || self.max_aps == 0 || self.max_ues == 0 || self.max_antennas == 0 {
            return Err(Error::Config(
                "verify: sizes must be positive and samples ≥ 2".into(),
            ));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::Config("verify: tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// A tiny network with a random feasible allocation.
#[derive(Clone, Debug)]
pub struct VerifyCase {
    pub config: SystemConfig,
    pub topology: Topology,
    pub allocation: PowerAllocation,
}

/// Sizes, pilot length (so contamination occurs) and per-AP budget fill are
/// all random.
pub fn random_verify_case<R: Rng + ?Sized>(
    base: &SystemConfig,
    vc: &VerifyConfig,
    rng: &mut R,
) -> VerifyCase {
    let k = rng.random_range(1..=vc.max_aps);
    let n = rng.random_range(1..=vc.max_ues);
    let m = rng.random_range(1..=vc.max_antennas);
    let tau = rng.random_range(1..=n);
    let config = SystemConfig {
        num_aps: k,
        num_ues: n,
        antennas: m,
        pilot_len: tau,
        area_side: vc.area_side,
        ..base.clone()
    };
    let topology = sample_topology(&config, rng);
    let stats = compute_v(&topology, &config);
    let weights = Tensor::from_fn(k, n, |_, _| rng.random::<f64>());
    let fill: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..=1.0)).collect();
    let p = Tensor::from_fn(k, n, |a, u| {
        let total: f64 = weights.row(a).iter().sum();
        fill[a] * weights.get(a, u) / (total * m as f64 * stats.v.get(a, u))
    });
    VerifyCase {
        config,
        topology,
        allocation: PowerAllocation::new(p),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermCheck {
    pub ue: usize,
    pub term: String,
    pub closed_form: f64,
    pub sampled: f64,
    /// The divisor used for the relative error: `|closed_form|`, or the
    /// UE's interference-plus-noise power when the term vanishes.
    pub scale: f64,
    pub rel_error: f64,
    /// `z ·` standard error `/ scale`.
    pub confidence_radius: f64,
}

/// Relative errors of the four closed-form terms and of the total cross
/// power, per UE.
pub fn compare_terms(closed: &[SinrTerms], sampled: &MonteCarloReport, z: f64) -> Vec<TermCheck> {
    let mut out = Vec::new();
    for (ue, (c, s)) in closed.iter().zip(&sampled.per_ue).enumerate() {
        let noise_floor = 1.0 + c.gain_variance + c.cross_power();
        let se = &s.std_errors;
        let rows = [
            (
                "desired_mean",
                c.desired_mean,
                s.terms.desired_mean,
                se.desired_mean,
            ),
            (
                "gain_variance",
                c.gain_variance,
                s.terms.gain_variance,
                se.gain_variance,
            ),
            (
                "contamination_power",
                c.contamination_power,
                s.terms.contamination_power,
                se.contamination_power,
            ),
            (
                "interference_power",
                c.interference_power,
                s.terms.interference_power,
                se.interference_power,
            ),
            (
                "cross_power",
                c.cross_power(),
                s.cross_power,
                se.cross_power,
            ),
        ];
        for (term, cf, mc, err) in rows {
            let scale = if cf.abs() > 0.0 {
                cf.abs()
            } else {
                noise_floor
            };
            out.push(TermCheck {
                ue,
                term: term.to_string(),
                closed_form: cf,
                sampled: mc,
                scale,
                rel_error: (mc - cf).abs() / scale,
                confidence_radius: z * err / scale,
            });
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaseReport {
    pub aps: usize,
    pub ues: usize,
    pub antennas: usize,
    pub pilot_len: usize,
    pub zero_power: bool,
    pub samples: usize,
    pub blocks: usize,
    pub checks: Vec<TermCheck>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub tolerance: f64,
    pub cases: Vec<CaseReport>,
    pub max_rel_error: f64,
    pub passed: bool,
}

/// Draws the cases from `seed`, simulates each and compares term by term.
/// The zero-power case must match exactly.
pub fn verify_rate(base: &SystemConfig, vc: &VerifyConfig, seed: u64) -> Result<VerifyReport> {
    vc.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases: Vec<(VerifyCase, bool)> = (0..vc.instances)
        .map(|_| (random_verify_case(base, vc, &mut rng), false))
        .collect();
    let mut zero = random_verify_case(base, vc, &mut rng);
    let (k, n) = zero.topology.sigma.shape();
    zero.allocation = PowerAllocation::zeros(k, n);
    cases.push((zero, true));

    let mut reports = Vec::new();
    let mut passed = true;
    let mut max_rel_error: f64 = 0.0;
    for (case, zero_power) in cases {
        let stats = compute_v(&case.topology, &case.config);
        let closed = closed_form_terms(case.allocation.matrix(), &stats);
        let mc = monte_carlo_sinr_terms(
            &case.allocation,
            &case.topology,
            &case.config,
            vc.samples,
            &mut rng,
        )?;
        let checks = compare_terms(&closed, &mc, vc.z);
        for c in &checks {
            max_rel_error = max_rel_error.max(c.rel_error);
            let ok = if zero_power {
                c.rel_error == 0.0
            } else {
                c.rel_error < vc.tolerance
            };
            passed &= ok;
        }
        reports.push(CaseReport {
            aps: case.config.num_aps,
            ues: case.config.num_ues,
            antennas: case.config.antennas,
            pilot_len: case.config.pilot_len,
            zero_power,
            samples: mc.samples,
            blocks: mc.blocks,
            checks,
        });
    }
    Ok(VerifyReport {
        tolerance: vc.tolerance,
        cases: reports,
        max_rel_error,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_case_is_feasible_and_bounded() {
        let vc = VerifyConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let c = random_verify_case(&SystemConfig::default(), &vc, &mut rng);
            assert!(c.config.num_aps <= 3 && c.config.num_ues <= 3 && c.config.antennas <= 2);
            assert!(c.config.pilot_len <= c.config.num_ues);
            let stats = compute_v(&c.topology, &c.config);
            c.allocation.validate(&stats).unwrap();
        }
    }

    #[test]
    fn small_run_reports_radii_and_exact_zero_case() {
        let vc = VerifyConfig {
            instances: 2,
            samples: 2_000,
            tolerance: 0.5,
            ..VerifyConfig::default()
        };
        let report = verify_rate(&SystemConfig::default(), &vc, 1).unwrap();
        assert_eq!(report.cases.len(), 3);
        let zero = report.cases.last().unwrap();
        assert!(zero.zero_power);
        assert!(zero
            .checks
            .iter()
            .all(|c| c.rel_error == 0.0 && c.sampled == 0.0));
        assert!(report.cases[0]
            .checks
            .iter()
            .any(|c| c.confidence_radius > 0.0));
        assert_eq!(report.cases[0].samples, 2_000);
    }
}
