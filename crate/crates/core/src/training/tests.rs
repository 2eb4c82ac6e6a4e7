use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::channel::{Instance, Scenario, SystemConfig};
use crate::gnn::{init_model, FeatureNorm, ModelConfig};

fn tiny_dataset(count: usize, seed: u64) -> Vec<Instance> {
    let cfg = SystemConfig {
        num_aps: 3,
        num_ues: 2,
        antennas: 1,
        pilot_len: 2,
        ..SystemConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| Instance::sample(&cfg, &mut rng))
        .collect()
}

fn quick_config(rounds: usize) -> TrainConfig {
    TrainConfig {
        batch_size: 8,
        rounds,
        convergence: None,
        monitor_size: 16,
        snapshot_every: 50,
        ..TrainConfig::default()
    }
}

#[test]
fn designation_policies() {
    assert_eq!(designate_aps(DesignationPolicy::Fixed(0), 7, 4), vec![0]);
    let rr: Vec<Vec<usize>> = (0..4)
        .map(|r| designate_aps(DesignationPolicy::RoundRobin, r, 4))
        .collect();
    assert_eq!(rr, vec![vec![0], vec![1], vec![2], vec![3]]);
    assert_eq!(designate_aps(DesignationPolicy::All, 0, 3), vec![0, 1, 2]);
}

fn full_batch(rounds: usize, policy: DesignationPolicy) -> TrainConfig {
    TrainConfig {
        batch_size: 16,
        policy,
        ..quick_config(rounds)
    }
}

#[test]
fn training_reduces_loss_on_tiny_set() {
    let data = tiny_dataset(16, 1);
    let model = init_model(ModelConfig::new(2), 3).unwrap();
    let out = train(
        model,
        &data,
        &full_batch(200, DesignationPolicy::RoundRobin),
    )
    .unwrap();
    let first = out.log.rounds[0].monitor_loss;
    let last = out.log.rounds.last().unwrap().monitor_loss;
    assert!(last < first, "{first} -> {last}");
}

#[test]
fn all_policy_matches_round_robin() {
    let data = tiny_dataset(16, 1);
    let rate = |policy| {
        let model = init_model(ModelConfig::new(2), 3).unwrap();
        let out = train(model, &data, &full_batch(600, policy)).unwrap();
        let refs: Vec<_> = data.iter().map(Instance::scenario).collect();
        mean_sum_rate(&out.model, &refs.iter().collect::<Vec<_>>()).unwrap()
    };
    let rr = rate(DesignationPolicy::RoundRobin);
    let all = rate(DesignationPolicy::All);
    eprintln!("round-robin {rr:.5} all {all:.5}");
    assert!((all - rr).abs() <= 0.03 * rr, "round-robin {rr} all {all}");
}

#[test]
fn ledger_matches_round_batch_formula() {
    let data = tiny_dataset(10, 2);
    let model = init_model(ModelConfig::new(2), 4).unwrap();
    let cfg = TrainConfig {
        batch_size: 4,
        ..quick_config(5)
    };
    let out = train(model, &data, &cfg).unwrap();
    let params = out.model.num_params() as u64;
    let (up, down) = distributed_training_formula(3, 2, params);
    assert_eq!(out.ledger.uplink, 5 * 4 * up);
    assert_eq!(out.ledger.downlink, 5 * down);
    assert_eq!(out.ledger.literal_uplink, 5 * 4 * 3 * (2 + 8));
    assert_eq!(out.ledger.rounds, 5);
    assert_eq!(out.ledger.phase, Phase::Training);
}

#[test]
fn training_is_deterministic() {
    let data = tiny_dataset(12, 3);
    let run = || {
        let model = init_model(ModelConfig::new(2), 5).unwrap();
        let out = train(model, &data, &quick_config(20)).unwrap();
        (
            out.model,
            out.log.rounds.iter().map(|r| r.loss).collect::<Vec<_>>(),
        )
    };
    assert_eq!(run(), run());
}

#[test]
fn operating_phase_sends_nothing() {
    let data = tiny_dataset(3, 4);
    let model = init_model(ModelConfig::new(2), 6).unwrap();
    for inst in &data {
        let s = inst.scenario();
        let (p, ledger) = distributed_inference(&model, &s).unwrap();
        p.validate(&s.stats).unwrap();
        assert_eq!((ledger.uplink, ledger.downlink), (0, 0));
        assert_eq!(ledger.phase, Phase::Operating);
    }
}

#[test]
fn tape_loss_equals_closed_form_loss() {
    let data = tiny_dataset(6, 5);
    let mut model = init_model(ModelConfig::new(2), 7).unwrap();
    let scenarios: Vec<Scenario> = data.iter().map(Instance::scenario).collect();
    model.norm = FeatureNorm::fit(scenarios.iter().map(|s| &s.topology.sigma));
    let refs: Vec<&Scenario> = scenarios.iter().collect();
    let direct = full_loss(&model, &refs).unwrap();
    for policy in [
        DesignationPolicy::Fixed(0),
        DesignationPolicy::RoundRobin,
        DesignationPolicy::All,
    ] {
        let (loss, _) = round_loss_and_gradient(&model, &refs, policy, 1).unwrap();
        assert!(
            (loss - direct).abs() < 1e-10,
            "{policy:?}: {loss} vs {direct}"
        );
    }
}

/// Central differences of the full loss with every parameter perturbed in
/// turn; the "all" policy makes the tape gradient the full gradient.
#[test]
fn gradient_matches_finite_differences() {
    let cfg = SystemConfig {
        num_aps: 2,
        num_ues: 2,
        antennas: 1,
        pilot_len: 2,
        ..SystemConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let scenario = Scenario::sample(&cfg, &mut rng);
    let mut model = init_model(ModelConfig::new(2), 9).unwrap();
    model.norm = FeatureNorm::fit([&scenario.topology.sigma]);
    let refs = [&scenario];
    let (_, grads) = round_loss_and_gradient(&model, &refs, DesignationPolicy::All, 0).unwrap();
    let analytic: Vec<f64> = grads
        .iter()
        .flat_map(|g| g.data().iter().copied())
        .collect();
    let base = model.flat_params();
    let h = 1e-6;
    let mut numeric = Vec::with_capacity(base.len());
    let mut probe = model.clone();
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] = base[i] + h;
        probe.set_flat_params(&p).unwrap();
        let up = full_loss(&probe, &refs).unwrap();
        p[i] = base[i] - h;
        probe.set_flat_params(&p).unwrap();
        let down = full_loss(&probe, &refs).unwrap();
        numeric.push((up - down) / (2.0 * h));
    }
    let diff: f64 = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = numeric.iter().map(|b| b * b).sum::<f64>().sqrt();
    assert!(norm > 0.0);
    assert!(diff / norm < 1e-3, "relative error {}", diff / norm);
}

/// The full gradient is the sum of the per-AP partial gradients.
#[test]
fn partial_gradients_sum_to_full() {
    let data = tiny_dataset(4, 9);
    let mut model = init_model(ModelConfig::new(2), 10).unwrap();
    let scenarios: Vec<Scenario> = data.iter().map(Instance::scenario).collect();
    model.norm = FeatureNorm::fit(scenarios.iter().map(|s| &s.topology.sigma));
    let refs: Vec<&Scenario> = scenarios.iter().collect();
    let (_, full) = round_loss_and_gradient(&model, &refs, DesignationPolicy::All, 0).unwrap();
    let mut total: Vec<crate::numerics::Tensor> = full.iter().map(|g| g.map(|_| 0.0)).collect();
    for k in 0..3 {
        let (_, g) =
            round_loss_and_gradient(&model, &refs, DesignationPolicy::Fixed(k), 0).unwrap();
        for (t, gk) in total.iter_mut().zip(&g) {
            *t = t.zip_broadcast(gk, "sum", |a, b| a + b).unwrap();
        }
    }
    for (a, b) in total.iter().zip(&full) {
        assert!(
            a.max_abs_diff(b) < 1e-12 * (1.0 + b.data().iter().fold(0.0f64, |m, x| m.max(x.abs())))
        );
    }
}

fn flat_log(losses: &[f64]) -> Vec<RoundRecord> {
    losses
        .iter()
        .enumerate()
        .map(|(round, &l)| RoundRecord {
            round,
            loss: l,
            monitor_loss: l,
            wallclock_ms: 0.0,
        })
        .collect()
}

#[test]
fn convergence_waits_for_two_windows_and_min_rounds() {
    let c = Convergence {
        window: 5,
        tolerance: 1e-4,
        min_rounds: 0,
    };
    assert!(!converged(&flat_log(&[-1.0; 9]), c));
    assert!(converged(&flat_log(&[-1.0; 10]), c));
    let falling: Vec<f64> = (0..10).map(|i| -1.0 - i as f64).collect();
    assert!(!converged(&flat_log(&falling), c));
    let late = Convergence {
        min_rounds: 30,
        ..c
    };
    assert!(!converged(&flat_log(&[-1.0; 29]), late));
    assert!(converged(&flat_log(&[-1.0; 30]), late));
}
