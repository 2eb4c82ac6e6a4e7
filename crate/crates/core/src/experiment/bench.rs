//! Wall-clock cost of every allocator over a range of network sizes.

use std::cell::Cell as Counter;
use std::hint::black_box;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    centralized_predict, equal_allocation, projected_gradient_allocation, proportional_allocation,
    CentralizedGnnModel, PgdConfig,
};
use crate::channel::{Scenario, SystemConfig};
use crate::error::{Error, Result};
use crate::gnn::{predict_all, predict_row, GnnModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub aps: Vec<usize>,
    pub ues: usize,
    pub antennas: usize,
    /// Instances per network size.
    pub instances: usize,
    /// Timed trials per instance; the fastest is kept.
    pub trials: usize,
    /// Each trial repeats the call until at least this long has passed.
    pub min_trial_ms: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            aps: vec![8, 16, 32],
            ues: 5,
            antennas: 2,
            instances: 5,
            trials: 7,
            min_trial_ms: 2.0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.aps.is_empty() || self.aps.contains(&0) || self.ues == 0 || self.antennas == 0 {
            return Err(Error::Config("bench: sizes must be positive".into()));
        }
        if self.instances == 0 || self.trials == 0 {
            return Err(Error::Config(
                "bench: instances and trials must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub method: String,
    /// Mean over instances of the fastest trial's time per call.
    pub ms_per_call: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn get(&self, k: usize, method: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.k == k && r.method == method)
            .map(|r| r.ms_per_call)
    }
}

/// Milliseconds per call of `f`: the minimum over `trials` of the mean
/// call time within a trial.
fn time_per_call(bc: &BenchConfig, mut f: impl FnMut()) -> f64 {
    f();
    let start = Instant::now();
    f();
    let once = start.elapsed().as_secs_f64() * 1e3;
    let calls = ((bc.min_trial_ms / once.max(1e-6)).ceil() as usize).clamp(1, 1_000_000);
    (0..bc.trials)
        .map(|_| {
            let start = Instant::now();
            for _ in 0..calls {
                f();
            }
            start.elapsed().as_secs_f64() * 1e3 / calls as f64
        })
        .fold(f64::INFINITY, f64::min)
}

pub const BENCH_METHODS: [&str; 6] = [
    "equal",
    "proportional",
    "distributed_per_ap",
    "distributed_network",
    "centralized",
    "pgd",
];

/// Times each allocator on `instances` networks per `K`. Runs on the
/// calling thread only.
pub fn bench_runtime(
    base: &SystemConfig,
    bc: &BenchConfig,
    pgd: &PgdConfig,
    distributed: &GnnModel,
    centralized: &CentralizedGnnModel,
    seed: u64,
) -> Result<BenchReport> {
    bc.validate()?;
    let mut rows = Vec::new();
    for &k in &bc.aps {
        let system = SystemConfig {
            antennas: bc.antennas,
            ..base.with_size(k, bc.ues)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let scenarios: Vec<Scenario> = (0..bc.instances)
            .map(|_| Scenario::sample(&system, &mut rng))
            .collect();
        let mut totals = [0.0; BENCH_METHODS.len()];
        for s in &scenarios {
            let (topo, stats, cfg) = (&s.topology, &s.stats, &s.config);
            let next_ap = Counter::new(0usize);
            let mut first_error = None;
            let mut check = |r: Result<()>| {
                if let Err(e) = r {
                    first_error.get_or_insert(e);
                }
            };
            let t = [
                time_per_call(bc, || {
                    black_box(equal_allocation(black_box(stats)));
                }),
                time_per_call(bc, || {
                    black_box(proportional_allocation(black_box(stats)));
                }),
                time_per_call(bc, || {
                    let ap = next_ap.get();
                    next_ap.set((ap + 1) % k);
                    check(
                        predict_row(
                            distributed,
                            topo.sigma.row(ap),
                            stats.v.row(ap),
                            &topo.pilot_index,
                            cfg,
                        )
                        .map(|r| drop(black_box(r))),
                    );
                }),
                time_per_call(bc, || {
                    check(predict_all(distributed, topo, stats, cfg).map(|p| drop(black_box(p))));
                }),
                time_per_call(bc, || {
                    check(centralized_predict(centralized, s).map(|p| drop(black_box(p))));
                }),
                time_per_call(bc, || {
                    check(
                        projected_gradient_allocation(stats, pgd, None).map(|p| drop(black_box(p))),
                    );
                }),
            ];
            if let Some(e) = first_error {
                return Err(e);
            }
            for (acc, x) in totals.iter_mut().zip(t) {
                *acc += x;
            }
        }
        for (method, total) in BENCH_METHODS.iter().zip(totals) {
            rows.push(BenchRow {
                k,
                n: bc.ues,
                m: bc.antennas,
                method: method.to_string(),
                ms_per_call: total / bc.instances as f64,
            });
        }
    }
    Ok(BenchReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{init_centralized, CentralizedConfig};
    use crate::gnn::{init_model, ModelConfig};

    #[test]
    fn every_method_timed_for_every_size() {
        let base = SystemConfig {
            pilot_len: 3,
            ..SystemConfig::default()
        };
        let bc = BenchConfig {
            aps: vec![2, 3],
            ues: 3,
            instances: 1,
            trials: 1,
            min_trial_ms: 0.0,
            ..BenchConfig::default()
        };
        let pgd = PgdConfig {
            iterations: 3,
            ..PgdConfig::default()
        };
        let d = init_model(ModelConfig::new(3), 0).unwrap();
        let c = init_centralized(CentralizedConfig::new(3), 0).unwrap();
        let report = bench_runtime(&base, &bc, &pgd, &d, &c, 0).unwrap();
        assert_eq!(report.rows.len(), 2 * BENCH_METHODS.len());
        assert!(report
            .rows
            .iter()
            .all(|r| r.ms_per_call > 0.0 && r.ms_per_call.is_finite()));
        assert!(report.get(3, "pgd").is_some());
    }
}
