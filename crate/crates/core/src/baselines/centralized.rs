//! Centralized GNN: the CPU sees every `ς_kn` and runs one bipartite graph
//! of AP and UE nodes.

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{Instance, Scenario};
use crate::error::{Error, Result};
use crate::gnn::{power_activation_tape, Dense, FeatureNorm, Mlp};
use crate::numerics::{Reduction, Tape, Tensor, Var};
use crate::rate::{ergodic_rate, PowerAllocation};
use crate::training::{
    converged, optimizer_step, sum_rate_tape, AdamState, BatchSampler, ExchangeLedger, MessageBus,
    Phase, RoundRecord, Snapshot, StopReason, TrainConfig, TrainLog,
};

const FORMAT: &str = "cellfree-gnn-centralized";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentralizedConfig {
    pub pilot_len: usize,
    pub hidden: usize,
    pub message: usize,
    pub layers: usize,
}

impl CentralizedConfig {
    pub fn new(pilot_len: usize) -> Self {
        Self {
            pilot_len,
            hidden: 12,
            message: 32,
            layers: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentralizedGnnModel {
    pub config: CentralizedConfig,
    pub norm: FeatureNorm,
    /// `[θ_n, log10 ρ_d]` to the UE state.
    pub ue_encoder: Dense,
    /// `[log10 ρ_d]` to the AP state.
    pub ap_encoder: Dense,
    /// `[h_ue, e]` to a message for the AP.
    pub ue_to_ap: Mlp,
    /// `[h_ap, e]` to a message for the UE.
    pub ap_to_ue: Mlp,
    pub ap_update: Mlp,
    pub ue_update: Mlp,
    /// `[h_ap, h_ue, e]` to the edge score.
    pub head: Mlp,
}

pub fn init_centralized(config: CentralizedConfig, seed: u64) -> Result<CentralizedGnnModel> {
    if config.pilot_len == 0 || config.hidden == 0 || config.message == 0 || config.layers == 0 {
        return Err(Error::Config(
            "centralized model widths must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, m) = (config.hidden, config.message);
    let ue_encoder = Dense::init(config.pilot_len + 1, h, &mut rng);
    let ap_encoder = Dense::init(1, h, &mut rng);
    let ue_to_ap = Mlp::init(&[h + 1, m, m], &mut rng);
    let ap_to_ue = Mlp::init(&[h + 1, m, m], &mut rng);
    let ap_update = Mlp::init(&[h + m, m, h], &mut rng);
    let ue_update = Mlp::init(&[h + m, m, h], &mut rng);
    let mut head = Mlp::init(&[2 * h + 1, m, 1], &mut rng);
    head.layers.last_mut().unwrap().bias = Tensor::filled(1, 1, 0.1);
    Ok(CentralizedGnnModel {
        config,
        norm: FeatureNorm::default(),
        ue_encoder,
        ap_encoder,
        ue_to_ap,
        ap_to_ue,
        ap_update,
        ue_update,
        head,
    })
}

struct Bound {
    ue_encoder: crate::gnn::BoundDense,
    ap_encoder: crate::gnn::BoundDense,
    ue_to_ap: crate::gnn::BoundMlp,
    ap_to_ue: crate::gnn::BoundMlp,
    ap_update: crate::gnn::BoundMlp,
    ue_update: crate::gnn::BoundMlp,
    head: crate::gnn::BoundMlp,
}

impl Bound {
    fn vars(&self) -> Vec<Var> {
        let mut out = vec![
            self.ue_encoder.weight,
            self.ue_encoder.bias,
            self.ap_encoder.weight,
            self.ap_encoder.bias,
        ];
        for mlp in [
            &self.ue_to_ap,
            &self.ap_to_ue,
            &self.ap_update,
            &self.ue_update,
            &self.head,
        ] {
            for l in &mlp.layers {
                out.push(l.weight);
                out.push(l.bias);
            }
        }
        out
    }
}

impl CentralizedGnnModel {
    fn mlps(&self) -> [&Mlp; 5] {
        [
            &self.ue_to_ap,
            &self.ap_to_ue,
            &self.ap_update,
            &self.ue_update,
            &self.head,
        ]
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut out = vec![
            &self.ue_encoder.weight,
            &self.ue_encoder.bias,
            &self.ap_encoder.weight,
            &self.ap_encoder.bias,
        ];
        for mlp in self.mlps() {
            for l in &mlp.layers {
                out.push(&l.weight);
                out.push(&l.bias);
            }
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = vec![
            &mut self.ue_encoder.weight,
            &mut self.ue_encoder.bias,
            &mut self.ap_encoder.weight,
            &mut self.ap_encoder.bias,
        ];
        for mlp in [
            &mut self.ue_to_ap,
            &mut self.ap_to_ue,
            &mut self.ap_update,
            &mut self.ue_update,
            &mut self.head,
        ] {
            for l in &mut mlp.layers {
                out.push(&mut l.weight);
                out.push(&mut l.bias);
            }
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    fn bind(&self, tape: &mut Tape, tracked: bool) -> Bound {
        Bound {
            ue_encoder: self.ue_encoder.bind(tape, tracked),
            ap_encoder: self.ap_encoder.bind(tape, tracked),
            ue_to_ap: self.ue_to_ap.bind(tape, tracked),
            ap_to_ue: self.ap_to_ue.bind(tape, tracked),
            ap_update: self.ap_update.bind(tape, tracked),
            ue_update: self.ue_update.bind(tape, tracked),
            head: self.head.bind(tape, tracked),
        }
    }

    /// Power column (`K·N × 1`, AP-major) for one scenario.
    fn forward(&self, tape: &mut Tape, b: &Bound, scenario: &Scenario) -> Result<Var> {
        let Scenario {
            config,
            topology,
            stats,
        } = scenario;
        let (k_aps, n_ues) = topology.sigma.shape();
        if config.pilot_len != self.config.pilot_len {
            return Err(Error::Config(format!(
                "instance pilot length {} differs from the model's {}",
                config.pilot_len, self.config.pilot_len
            )));
        }
        let snr = config.downlink_snr.log10();
        let ap_of: Vec<usize> = (0..k_aps * n_ues).map(|j| j / n_ues).collect();
        let ue_of: Vec<usize> = (0..k_aps * n_ues).map(|j| j % n_ues).collect();
        let e = tape.constant(Tensor::column_vector(
            topology
                .sigma
                .data()
                .iter()
                .map(|&s| self.norm.apply(s))
                .collect(),
        ));
        let tau = self.config.pilot_len;
        let ue_in = tape.constant(Tensor::from_fn(n_ues, tau + 1, |n, c| {
            if c == tau {
                snr
            } else {
                f64::from(u8::from(topology.pilot_index[n] == c))
            }
        }));
        let ap_in = tape.constant(Tensor::filled(k_aps, 1, snr));
        let mut h_ue = b.ue_encoder.forward_relu(tape, ue_in)?;
        let mut h_ap = b.ap_encoder.forward_relu(tape, ap_in)?;
        for _ in 0..self.config.layers {
            let from_ue = tape.gather_rows(h_ue, &ue_of)?;
            let input = tape.concat_cols(&[from_ue, e])?;
            let msgs = b.ue_to_ap.forward(tape, input)?;
            let agg = tape.segment_reduce(msgs, Reduction::Mean, &ap_of, k_aps)?;
            let joined = tape.concat_cols(&[h_ap, agg])?;
            h_ap = b.ap_update.forward(tape, joined)?;

            let from_ap = tape.gather_rows(h_ap, &ap_of)?;
            let input = tape.concat_cols(&[from_ap, e])?;
            let msgs = b.ap_to_ue.forward(tape, input)?;
            let agg = tape.segment_reduce(msgs, Reduction::Mean, &ue_of, n_ues)?;
            let joined = tape.concat_cols(&[h_ue, agg])?;
            h_ue = b.ue_update.forward(tape, joined)?;
        }
        let a = tape.gather_rows(h_ap, &ap_of)?;
        let u = tape.gather_rows(h_ue, &ue_of)?;
        let input = tape.concat_cols(&[a, u, e])?;
        let scores = b.head.forward(tape, input)?;
        let v = tape.constant(Tensor::column_vector(stats.v.data().to_vec()));
        power_activation_tape(tape, scores, v, &ap_of, k_aps, config.antennas)
    }

    /// JSON container tagged with the digest of the producing config.
    pub fn to_json(&self, config_digest: &str) -> Result<String> {
        #[derive(Serialize)]
        struct File<'a> {
            format: &'a str,
            version: u32,
            config_digest: &'a str,
            model: &'a CentralizedGnnModel,
        }
        Ok(serde_json::to_string_pretty(&File {
            format: FORMAT,
            version: VERSION,
            config_digest,
            model: self,
        })?)
    }

    /// Inverse of [`to_json`](Self::to_json); returns the model and digest.
    pub fn from_json(s: &str) -> Result<(Self, String)> {
        #[derive(Deserialize)]
        struct File {
            format: String,
            version: u32,
            #[serde(default)]
            config_digest: String,
            model: CentralizedGnnModel,
        }
        let f: File = serde_json::from_str(s)
            .map_err(|e| Error::Checkpoint(format!("centralized model: {e}")))?;
        if f.format != FORMAT || f.version != VERSION {
            return Err(Error::Checkpoint(format!(
                "centralized model: found {} v{}, expected {FORMAT} v{VERSION}",
                f.format, f.version
            )));
        }
        Ok((f.model, f.config_digest))
    }

    pub fn save(&self, config_digest: &str, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json(config_digest)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Whole-network allocation computed at the CPU from every `ς_kn`.
pub fn centralized_predict(
    model: &CentralizedGnnModel,
    scenario: &Scenario,
) -> Result<PowerAllocation> {
    let mut tape = Tape::new();
    let b = model.bind(&mut tape, false);
    let p = model.forward(&mut tape, &b, scenario)?;
    let (k, n) = scenario.topology.sigma.shape();
    Ok(PowerAllocation::new(Tensor::from_vec(
        k,
        n,
        tape.value(p).data().to_vec(),
    )?))
}

fn loss_and_gradient(
    model: &CentralizedGnnModel,
    scenario: &Scenario,
) -> Result<(f64, Vec<Tensor>)> {
    let mut tape = Tape::new();
    let b = model.bind(&mut tape, true);
    let p = model.forward(&mut tape, &b, scenario)?;
    let n = scenario.num_ues();
    let mut active = Vec::with_capacity(scenario.num_aps());
    for k in 0..scenario.num_aps() {
        let idx: Vec<usize> = (k * n..(k + 1) * n).collect();
        active.push((k, tape.gather_rows(p, &idx)?));
    }
    let total = sum_rate_tape(&mut tape, &scenario.stats, &active, &[])?;
    let grads = tape.backward(total)?;
    Ok((
        tape.value(total).item().unwrap_or(f64::NAN),
        b.vars().iter().map(|&v| grads.wrt(v)).collect(),
    ))
}

pub fn centralized_mean_sum_rate(
    model: &CentralizedGnnModel,
    scenarios: &[&Scenario],
) -> Result<f64> {
    let rates: Vec<f64> = scenarios
        .par_iter()
        .map(|s| Ok(ergodic_rate(&centralized_predict(model, s)?, &s.stats)?.sum_rate))
        .collect::<Result<_>>()?;
    Ok(rates.iter().sum::<f64>() / rates.len() as f64)
}

pub struct CentralizedOutcome {
    pub model: CentralizedGnnModel,
    pub log: TrainLog,
    pub ledger: ExchangeLedger,
}

/// End-to-end training on full-CSI graphs. Every instance exchange moves
/// `K·N` coefficients up and `K·N` powers down.
pub fn centralized_train(
    mut model: CentralizedGnnModel,
    dataset: &[Instance],
    config: &TrainConfig,
) -> Result<CentralizedOutcome> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Config("empty training set".into()));
    }
    let scenarios: Vec<Scenario> = dataset.par_iter().map(Instance::scenario).collect();
    if config.fit_normalization {
        model.norm = FeatureNorm::fit(scenarios.iter().map(|s| &s.topology.sigma));
    }
    let mut sampler = BatchSampler::new(scenarios.len(), config.seed);
    let monitor: Vec<&Scenario> = sampler
        .monitor(config.monitor_size)
        .into_iter()
        .map(|i| &scenarios[i])
        .collect();
    let mut bus = MessageBus::new(Phase::Training);
    let mut adam = AdamState::new(model.tensors().iter().map(|t| t.shape()));
    let (mut rounds, mut snapshots) = (Vec::new(), Vec::new());
    let mut stop_reason = StopReason::RoundBudget;
    let start = Instant::now();

    for round in 0..config.rounds {
        let batch: Vec<&Scenario> = sampler
            .next(config.batch_size)
            .into_iter()
            .map(|i| &scenarios[i])
            .collect();
        let results: Vec<(f64, Vec<Tensor>)> = batch
            .par_iter()
            .map(|s| loss_and_gradient(&model, s))
            .collect::<Result<_>>()
            .map_err(|e| Error::Diverged {
                round,
                detail: e.to_string(),
            })?;
        for s in &batch {
            let kn = s.num_aps() * s.num_ues();
            bus.uplink_scalars(kn);
            bus.downlink_scalars(kn);
        }
        let scale = -1.0 / batch.len() as f64;
        let mut grads: Vec<Tensor> = model
            .tensors()
            .iter()
            .map(|t| Tensor::zeros(t.rows(), t.cols()))
            .collect();
        let mut total = 0.0;
        for (rate, g) in &results {
            total += rate;
            for (acc, gi) in grads.iter_mut().zip(g) {
                acc.add_assign(gi);
            }
        }
        let grads: Vec<Tensor> = grads.iter().map(|g| g.map(|x| x * scale)).collect();
        let loss = total * scale;
        if !loss.is_finite() {
            return Err(Error::Diverged {
                round,
                detail: format!("loss {loss}"),
            });
        }
        optimizer_step(
            &mut model.tensors_mut(),
            &grads,
            &mut adam,
            &config.optimizer,
        )?;
        if !model.is_finite() {
            return Err(Error::Diverged {
                round,
                detail: "non-finite parameters after update".into(),
            });
        }
        bus.end_round();
        let monitor_loss = -centralized_mean_sum_rate(&model, &monitor)?;
        rounds.push(RoundRecord {
            round,
            loss,
            monitor_loss,
            wallclock_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if (round + 1) % config.snapshot_every == 0 {
            snapshots.push(Snapshot {
                round,
                monitor_sum_rate: -monitor_loss,
            });
        }
        if let Some(c) = config.convergence {
            if converged(&rounds, c) {
                stop_reason = StopReason::Converged;
                break;
            }
        }
    }
    Ok(CentralizedOutcome {
        model,
        log: TrainLog {
            rounds,
            snapshots,
            stop_reason,
            total_ms: start.elapsed().as_secs_f64() * 1e3,
        },
        ledger: bus.into_ledger(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::SystemConfig;

    fn scenario(seed: u64, k: usize, n: usize) -> Scenario {
        let cfg = SystemConfig {
            num_aps: k,
            num_ues: n,
            antennas: 2,
            pilot_len: 3,
            ..SystemConfig::default()
        };
        Scenario::sample(&cfg, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    fn model() -> CentralizedGnnModel {
        let mut m = init_centralized(CentralizedConfig::new(3), 1).unwrap();
        m.norm = FeatureNorm {
            mean: -8.0,
            std: 2.0,
        };
        m
    }

    #[test]
    fn equivariant_in_aps_and_ues() {
        let s = scenario(1, 4, 3);
        let m = model();
        let p = centralized_predict(&m, &s).unwrap();
        let ap_perm = [2, 0, 3, 1];
        let ue_perm = [1, 2, 0];
        let mut t = s.clone();
        t.topology.sigma =
            Tensor::from_fn(4, 3, |k, n| s.topology.sigma.get(ap_perm[k], ue_perm[n]));
        t.topology.pilot_index = ue_perm.iter().map(|&u| s.topology.pilot_index[u]).collect();
        t.stats = crate::channel::compute_v(&t.topology, &t.config);
        let q = centralized_predict(&m, &t).unwrap();
        for (k, &pk) in ap_perm.iter().enumerate() {
            for (n, &pn) in ue_perm.iter().enumerate() {
                let (a, b) = (q.get(k, n), p.get(pk, pn));
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn output_is_feasible() {
        let m = model();
        for seed in 0..20 {
            let s = scenario(seed, 5, 4);
            centralized_predict(&m, &s)
                .unwrap()
                .validate(&s.stats)
                .unwrap();
        }
    }

    #[test]
    fn ledger_counts_kn_per_instance() {
        let cfg = SystemConfig {
            num_aps: 3,
            num_ues: 2,
            antennas: 1,
            pilot_len: 3,
            ..SystemConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data: Vec<Instance> = (0..6).map(|_| Instance::sample(&cfg, &mut rng)).collect();
        let tc = TrainConfig {
            batch_size: 4,
            rounds: 3,
            convergence: None,
            monitor_size: 4,
            ..TrainConfig::default()
        };
        let out = centralized_train(
            init_centralized(CentralizedConfig::new(3), 0).unwrap(),
            &data,
            &tc,
        )
        .unwrap();
        assert_eq!(out.ledger.uplink, 3 * 4 * 6);
        assert_eq!(out.ledger.downlink, 3 * 4 * 6);
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = SystemConfig {
            num_aps: 3,
            num_ues: 2,
            antennas: 1,
            pilot_len: 3,
            ..SystemConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<Instance> = (0..6).map(|_| Instance::sample(&cfg, &mut rng)).collect();
        let tc = TrainConfig {
            batch_size: 4,
            rounds: 10,
            convergence: None,
            monitor_size: 4,
            ..TrainConfig::default()
        };
        let run = || {
            centralized_train(
                init_centralized(CentralizedConfig::new(3), 0).unwrap(),
                &data,
                &tc,
            )
            .unwrap()
            .model
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn json_roundtrip() {
        let m = model();
        let (back, digest) = CentralizedGnnModel::from_json(&m.to_json("abc").unwrap()).unwrap();
        assert_eq!((back, digest.as_str()), (m.clone(), "abc"));
        let bad = m
            .to_json("abc")
            .unwrap()
            .replace("\"version\": 1", "\"version\": 2");
        assert!(CentralizedGnnModel::from_json(&bad).is_err());
    }
}
