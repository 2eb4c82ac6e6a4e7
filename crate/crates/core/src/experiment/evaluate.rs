//! Method comparison on a labeled test set.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::data::{Cell, LabeledInstance};
use crate::baselines::{
    centralized_predict, equal_allocation, projected_gradient_allocation, proportional_allocation,
    CentralizedGnnModel, PgdConfig,
};
use crate::channel::Scenario;
use crate::error::Result;
use crate::gnn::GnnModel;
use crate::rate::{ergodic_rate, PowerAllocation};
use crate::training::distributed_inference;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Equal,
    Proportional,
    Pgd,
    CentralizedGnn,
    DistributedGnn,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Equal => "equal",
            Method::Proportional => "proportional",
            Method::Pgd => "pgd",
            Method::CentralizedGnn => "centralized_gnn",
            Method::DistributedGnn => "distributed_gnn",
        }
    }
}

/// Trained models to evaluate next to the baselines.
#[derive(Clone, Debug, Default)]
pub struct Models {
    pub distributed: Option<GnnModel>,
    pub centralized: Option<CentralizedGnnModel>,
}

/// One allocation of one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub instance_id: String,
    pub cell: Cell,
    pub method: Method,
    pub per_ue_rates: Vec<f64>,
    pub sum_rate: f64,
    pub inference_ms: f64,
}

/// Per-cell mean of one method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct EvalRow {
    pub M: usize,
    pub N: usize,
    pub K: usize,
    pub method: Method,
    pub sum_rate: f64,
    /// 100 × this method's mean sum rate over the projected-gradient mean.
    pub pct_of_pgd: f64,
    pub inference_ms: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Evaluation {
    pub rates: Vec<RateRow>,
    pub summary: Vec<EvalRow>,
}

impl Evaluation {
    /// Mean sum rate of `method` over the instances whose cell passes `keep`.
    pub fn mean_sum_rate(&self, method: Method, keep: impl Fn(&Cell) -> bool) -> Option<f64> {
        let picked: Vec<f64> = self
            .rates
            .iter()
            .filter(|r| r.method == method && keep(&r.cell))
            .map(|r| r.sum_rate)
            .collect();
        (!picked.is_empty()).then(|| picked.iter().sum::<f64>() / picked.len() as f64)
    }
}

fn timed(f: impl FnOnce() -> Result<PowerAllocation>) -> Result<(PowerAllocation, f64)> {
    let start = Instant::now();
    let p = f()?;
    Ok((p, start.elapsed().as_secs_f64() * 1e3))
}

/// Runs every available method on every instance, sequentially so the
/// timings are not skewed by contention. Each allocation is revalidated
/// against the per-AP budget before it is scored.
pub fn evaluate(items: &[LabeledInstance], models: &Models, pgd: &PgdConfig) -> Result<Evaluation> {
    let mut rates = Vec::new();
    for item in items {
        let scenario = item.instance.scenario();
        let stats = &scenario.stats;
        let cell = cell_of(&scenario);
        let mut runs = vec![
            (Method::Equal, timed(|| Ok(equal_allocation(stats)))?),
            (
                Method::Proportional,
                timed(|| Ok(proportional_allocation(stats)))?,
            ),
            (
                Method::Pgd,
                timed(|| Ok(projected_gradient_allocation(stats, pgd, None)?.allocation))?,
            ),
        ];
        if let Some(m) = &models.centralized {
            runs.push((
                Method::CentralizedGnn,
                timed(|| centralized_predict(m, &scenario))?,
            ));
        }
        if let Some(m) = &models.distributed {
            runs.push((
                Method::DistributedGnn,
                timed(|| Ok(distributed_inference(m, &scenario)?.0))?,
            ));
        }
        for (method, (p, ms)) in runs {
            let report = ergodic_rate(&p, stats)?;
            rates.push(RateRow {
                instance_id: item.id.clone(),
                cell,
                method,
                per_ue_rates: report.per_ue,
                sum_rate: report.sum_rate,
                inference_ms: ms,
            });
        }
    }
    let summary = summarize(&rates);
    Ok(Evaluation { rates, summary })
}

fn cell_of(s: &Scenario) -> Cell {
    Cell {
        aps: s.num_aps(),
        ues: s.num_ues(),
        antennas: s.config.antennas,
    }
}

/// Per-(cell, method) means, normalized to projected gradient.
pub fn summarize(rates: &[RateRow]) -> Vec<EvalRow> {
    let mut groups: BTreeMap<(Cell, Method), (f64, f64, usize)> = BTreeMap::new();
    for r in rates {
        let g = groups.entry((r.cell, r.method)).or_default();
        g.0 += r.sum_rate;
        g.1 += r.inference_ms;
        g.2 += 1;
    }
    let mean = |g: &(f64, f64, usize)| (g.0 / g.2 as f64, g.1 / g.2 as f64);
    groups
        .iter()
        .map(|(&(cell, method), g)| {
            let (rate, ms) = mean(g);
            let pgd = groups.get(&(cell, Method::Pgd)).map(|g| mean(g).0);
            EvalRow {
                M: cell.antennas,
                N: cell.ues,
                K: cell.aps,
                method,
                sum_rate: rate,
                pct_of_pgd: pgd.map_or(f64::NAN, |p| 100.0 * rate / p),
                inference_ms: ms,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{generate_split, ExperimentConfig, Grid, Split};
    use crate::gnn::{init_model, ModelConfig};

    fn items() -> Vec<LabeledInstance> {
        let cfg = ExperimentConfig {
            system: crate::channel::SystemConfig {
                pilot_len: 3,
                ..Default::default()
            },
            test_grid: vec![Grid {
                aps: vec![4],
                ues: vec![2, 3],
                antennas: vec![2],
            }],
            test_per_cell: 2,
            ..ExperimentConfig::default()
        };
        generate_split(&cfg, Split::Test)
    }

    #[test]
    fn every_method_scored_and_pgd_is_100() {
        let models = Models {
            distributed: Some(init_model(ModelConfig::new(3), 0).unwrap()),
            centralized: None,
        };
        let pgd = PgdConfig {
            iterations: 20,
            ..PgdConfig::default()
        };
        let eval = evaluate(&items(), &models, &pgd).unwrap();
        assert_eq!(eval.rates.len(), 4 * 4);
        assert_eq!(eval.summary.len(), 2 * 4);
        for row in eval.summary.iter().filter(|r| r.method == Method::Pgd) {
            assert!((row.pct_of_pgd - 100.0).abs() < 1e-12);
        }
        for row in &eval.rates {
            let sum: f64 = row.per_ue_rates.iter().sum();
            assert!((sum - row.sum_rate).abs() < 1e-12);
        }
        let pr = eval.mean_sum_rate(Method::Proportional, |_| true).unwrap();
        let pg = eval.mean_sum_rate(Method::Pgd, |_| true).unwrap();
        assert!(pg >= pr);
        assert!(eval
            .mean_sum_rate(Method::CentralizedGnn, |_| true)
            .is_none());
    }
}
