use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::channel::{compute_v, sample_topology, SystemConfig, Topology};
use crate::error::Error;
use crate::numerics::Tensor;

fn instance(seed: u64, k: usize, n: usize, tau: usize) -> (SystemConfig, Topology) {
    let cfg = SystemConfig {
        num_aps: k,
        num_ues: n,
        antennas: 2,
        pilot_len: tau,
        ..SystemConfig::default()
    };
    let topo = sample_topology(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
    (cfg, topo)
}

fn model(tau: usize, seed: u64) -> GnnModel {
    let mut m = init_model(ModelConfig::new(tau), seed).unwrap();
    m.norm = FeatureNorm {
        mean: -9.0,
        std: 2.0,
    };
    m
}

#[test]
fn power_activation_single_term() {
    let p = power_activation(&[2.3], &[0.5], 4);
    assert!((p[0] - 0.5).abs() < 1e-10);
    assert!((p[0] * 0.5 - 0.25).abs() < 1e-10);
}

#[test]
fn power_activation_zero_scores() {
    assert_eq!(
        power_activation(&[0.0, 0.0], &[0.3, 0.1], 2),
        vec![0.0, 0.0]
    );
}

#[test]
fn single_node_forward_is_defined() {
    let (cfg, topo) = instance(1, 2, 1, 1);
    let m = model(1, 0);
    let g = m.graph(topo.sigma.row(0), &topo.pilot_index, &cfg);
    let x = mpgnn_forward(&m, &g).unwrap();
    assert_eq!(x.len(), 1);
    assert!(x[0].is_finite() && x[0] >= 0.0);
}

#[test]
fn identical_ues_identical_outputs() {
    let cfg = SystemConfig {
        num_aps: 1,
        num_ues: 3,
        pilot_len: 1,
        ..SystemConfig::default()
    };
    let m = model(1, 3);
    let g = m.graph(&[1e-8, 1e-8, 1e-8], &[0, 0, 0], &cfg);
    let x = mpgnn_forward(&m, &g).unwrap();
    assert_eq!(x[0], x[1]);
    assert_eq!(x[1], x[2]);
}

#[test]
fn predict_all_matches_per_ap() {
    let (cfg, topo) = instance(2, 4, 5, 3);
    let stats = compute_v(&topo, &cfg);
    let m = model(3, 1);
    let all = predict_all(&m, &topo, &stats, &cfg).unwrap();
    for k in 0..4 {
        let row = predict_power(&m, k, &topo, &stats, &cfg).unwrap();
        for (n, r) in row.iter().enumerate() {
            assert!((r - all.get(k, n)).abs() <= 1e-14 * r.abs().max(1.0));
        }
    }
    all.validate(&stats).unwrap();
}

#[test]
fn equivariance_under_ue_permutation() {
    let (cfg, topo) = instance(3, 3, 6, 4);
    let stats = compute_v(&topo, &cfg);
    let m = model(4, 2);
    let perm = [3, 0, 5, 1, 4, 2];
    let mut permuted = topo.clone();
    permuted.sigma = Tensor::from_fn(3, 6, |k, n| topo.sigma.get(k, perm[n]));
    permuted.pilot_index = perm.iter().map(|&p| topo.pilot_index[p]).collect();
    let pstats = compute_v(&permuted, &cfg);
    for k in 0..3 {
        let a = predict_power(&m, k, &topo, &stats, &cfg).unwrap();
        let b = predict_power(&m, k, &permuted, &pstats, &cfg).unwrap();
        for n in 0..6 {
            assert!((b[n] - a[perm[n]]).abs() < 1e-12);
        }
    }
}

#[test]
fn locality_ignores_other_rows() {
    let (cfg, topo) = instance(4, 3, 4, 2);
    let stats = compute_v(&topo, &cfg);
    let m = model(2, 5);
    let before = predict_power(&m, 1, &topo, &stats, &cfg).unwrap();
    let mut changed = topo.clone();
    for n in 0..4 {
        changed.sigma.set(0, n, 1e-3);
        changed.sigma.set(2, n, 1e-12);
    }
    let cstats = compute_v(&changed, &cfg);
    assert_eq!(
        before,
        predict_power(&m, 1, &changed, &cstats, &cfg).unwrap()
    );
}

#[test]
fn runs_on_any_ue_count() {
    let m = model(4, 6);
    for n in 2..=25 {
        let (cfg, topo) = instance(n as u64, 2, n, 4);
        let stats = compute_v(&topo, &cfg);
        let all = predict_all(&m, &topo, &stats, &cfg).unwrap();
        all.validate(&stats).unwrap();
    }
}

#[test]
fn init_is_seeded_and_bounded() {
    let a = init_model(ModelConfig::new(6), 9).unwrap();
    let b = init_model(ModelConfig::new(6), 9).unwrap();
    let c = init_model(ModelConfig::new(6), 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.flat_params(), c.flat_params());
    assert!(a.flat_params().iter().all(|w| w.abs() <= 1.0));
    // encoder, φ2 and φ1 for τ_p = 6
    let expected = (8 * 12 + 12)
        + (14 * 16 + 16 + 16 * 32 + 32 + 32 * 64 + 64)
        + (76 * 32 + 32 + 32 * 12 + 12 + 12 + 1);
    assert_eq!(a.num_params(), expected);
}

#[test]
fn bad_widths_rejected() {
    let mut cfg = ModelConfig::new(2);
    cfg.update_widths = vec![32, 10, 1];
    assert!(init_model(cfg, 0).is_err());
}

#[test]
fn checkpoint_roundtrip_is_byte_identical() {
    let mut m = model(3, 7);
    m.norm = FeatureNorm {
        mean: -7.123456789,
        std: 1.1,
    };
    let first = ModelCheckpoint::from_model(&m, "abc").to_json().unwrap();
    let loaded = ModelCheckpoint::from_json(&first)
        .unwrap()
        .into_model()
        .unwrap();
    assert_eq!(loaded, m);
    let second = ModelCheckpoint::from_model(&loaded, "abc")
        .to_json()
        .unwrap();
    assert_eq!(first, second);
}

#[test]
fn checkpoint_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    let m = model(2, 8);
    save_checkpoint(&m, "d1", &path).unwrap();
    let (loaded, digest) = load_checkpoint(&path).unwrap();
    assert_eq!(loaded, m);
    assert_eq!(digest, "d1");
}

#[test]
fn corrupted_checkpoints_report_version() {
    let m = model(2, 8);
    let good = ModelCheckpoint::from_model(&m, "").to_json().unwrap();
    let future = good.replace("\"version\": 1", "\"version\": 7");
    let err = ModelCheckpoint::from_json(&future).err().unwrap();
    assert!(
        matches!(err, Error::Checkpoint(ref s) if s.contains("version") && s.contains('7')),
        "{err}"
    );
    let err = ModelCheckpoint::from_json("{\"format\": \"other\"}")
        .err()
        .unwrap();
    assert!(err.to_string().contains("format"));
    let truncated = &good[..good.len() / 2];
    assert!(ModelCheckpoint::from_json(truncated).is_err());
    let short = good.replacen("\"parameters\": [", "\"parameters\": [1.0,", 1);
    let err = ModelCheckpoint::from_json(&short)
        .unwrap()
        .into_model()
        .err()
        .unwrap();
    assert!(err.to_string().contains("parameters"));
}
