//! Invariants checked over random networks, allocations and models.

use cellfree_gnn::baselines::{equal_allocation, project, proportional_allocation};
use cellfree_gnn::channel::{compute_v, sample_topology, ChannelStats, SystemConfig, Topology};
use cellfree_gnn::gnn::{
    init_model, power_activation, predict_all, predict_power, GnnModel, ModelConfig,
};
use cellfree_gnn::numerics::Tensor;
use cellfree_gnn::rate::{
    ergodic_rate, rate_from_payloads, rate_from_shared, shared_info, PowerAllocation,
    BUDGET_TOLERANCE,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn network(
    seed: u64,
    k: usize,
    n: usize,
    m: usize,
    tau: usize,
) -> (SystemConfig, Topology, ChannelStats) {
    let cfg = SystemConfig {
        num_aps: k,
        num_ues: n,
        antennas: m,
        pilot_len: tau,
        area_side: 300.0,
        ..SystemConfig::default()
    };
    let topo = sample_topology(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
    let stats = compute_v(&topo, &cfg);
    (cfg, topo, stats)
}

/// Feasible allocation: random weights scaled so AP `k` spends `fill[k]`
/// of its budget.
fn allocation(stats: &ChannelStats, weights: &[f64], fill: &[f64]) -> PowerAllocation {
    let (k_aps, n_ues) = stats.v.shape();
    let m = stats.antennas as f64;
    let mut p = Tensor::zeros(k_aps, n_ues);
    for k in 0..k_aps {
        let w = &weights[k * n_ues..(k + 1) * n_ues];
        let used: f64 = w.iter().zip(stats.v.row(k)).map(|(a, v)| a * v).sum();
        if used > 0.0 {
            for (n, wn) in w.iter().enumerate() {
                p.set(k, n, wn * fill[k] / (m * used));
            }
        }
    }
    PowerAllocation::new(p)
}

fn model(tau: usize, seed: u64) -> GnnModel {
    init_model(ModelConfig::new(tau), seed).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn sizes() -> impl Strategy<Value = (u64, usize, usize, usize, usize)> {
    (any::<u64>(), 1usize..6, 1usize..7, 1usize..4, 1usize..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shared_routes_equal_closed_form(
        (seed, k, n, m, tau) in sizes(),
        weights in prop::collection::vec(0.0f64..1.0, 36),
        fill in prop::collection::vec(0.0f64..=1.0, 6),
    ) {
        let (_, _, stats) = network(seed, k, n, m, tau);
        let p = allocation(&stats, &weights[..k * n], &fill[..k]);
        let direct = ergodic_rate(&p, &stats).unwrap();
        let infos: Vec<_> = (0..k).map(|ap| shared_info(ap, p.matrix().row(ap), &stats)).collect();
        let via_shared = rate_from_shared(&infos, m).unwrap();
        let payloads: Vec<_> = infos.iter().map(|i| i.payload()).collect();
        let via_payload = rate_from_payloads(&payloads, m).unwrap();
        for ue in 0..n {
            prop_assert!(close(direct.per_ue[ue], via_shared.per_ue[ue], 1e-10));
            prop_assert!(close(direct.per_ue[ue], via_payload.per_ue[ue], 1e-10));
        }
        prop_assert!(payloads.iter().all(|p| p.len() == n * n + n));
    }

    #[test]
    fn rate_is_nonnegative_and_zero_without_power((seed, k, n, m, tau) in sizes()) {
        let (_, _, stats) = network(seed, k, n, m, tau);
        let zero = ergodic_rate(&PowerAllocation::zeros(k, n), &stats).unwrap();
        prop_assert_eq!(zero.sum_rate, 0.0);
        let eq = ergodic_rate(&equal_allocation(&stats), &stats).unwrap();
        prop_assert!(eq.per_ue.iter().all(|r| r.is_finite() && *r > 0.0));
    }

    #[test]
    fn power_activation_respects_budget(
        x in prop::collection::vec(0.0f64..1e3, 1..12),
        v_scale in -12.0f64..1.0,
        m in 1usize..8,
    ) {
        let v: Vec<f64> = (0..x.len()).map(|i| 10f64.powf(v_scale) * (1.0 + i as f64)).collect();
        let p = power_activation(&x, &v, m);
        let used: f64 = p.iter().zip(&v).map(|(a, b)| a * b).sum();
        prop_assert!(p.iter().all(|&a| a >= 0.0));
        prop_assert!(used <= 1.0 / m as f64 + BUDGET_TOLERANCE);
    }

    #[test]
    fn gnn_allocations_are_feasible((seed, k, n, m, tau) in sizes(), model_seed in 0u64..1000) {
        let (cfg, topo, stats) = network(seed, k, n, m, tau);
        let p = predict_all(&model(tau, model_seed), &topo, &stats, &cfg).unwrap();
        prop_assert!(p.validate(&stats).is_ok());
    }

    #[test]
    fn gnn_is_equivariant_to_ue_order(
        (seed, k, n, m, tau) in sizes(),
        model_seed in 0u64..1000,
        perm_seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let (cfg, topo, stats) = network(seed, k, n, m, tau);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
        let mut permuted = topo.clone();
        permuted.sigma = Tensor::from_fn(k, n, |a, b| topo.sigma.get(a, perm[b]));
        permuted.pilot_index = perm.iter().map(|&i| topo.pilot_index[i]).collect();
        let pstats = compute_v(&permuted, &cfg);
        let mdl = model(tau, model_seed);
        for ap in 0..k {
            let a = predict_power(&mdl, ap, &topo, &stats, &cfg).unwrap();
            let b = predict_power(&mdl, ap, &permuted, &pstats, &cfg).unwrap();
            for ue in 0..n {
                prop_assert!(close(b[ue], a[perm[ue]], 1e-12), "{} vs {}", b[ue], a[perm[ue]]);
            }
        }
    }

    #[test]
    fn gnn_row_depends_only_on_its_ap(
        (seed, k, n, m, tau) in sizes(),
        noise in prop::collection::vec(1e-9f64..1e-3, 36),
    ) {
        let (cfg, topo, stats) = network(seed, k, n, m, tau);
        let mdl = model(tau, 7);
        let target = k / 2;
        let mut changed = topo.clone();
        for ap in (0..k).filter(|&a| a != target) {
            for ue in 0..n {
                changed.sigma.set(ap, ue, noise[ap * n + ue]);
            }
        }
        let cstats = compute_v(&changed, &cfg);
        prop_assert_eq!(
            predict_power(&mdl, target, &topo, &stats, &cfg).unwrap(),
            predict_power(&mdl, target, &changed, &cstats, &cfg).unwrap()
        );
    }

    #[test]
    fn projection_is_feasible_and_idempotent(
        (seed, k, n, m, tau) in sizes(),
        raw in prop::collection::vec(-1e4f64..1e4, 36),
    ) {
        let (_, _, stats) = network(seed, k, n, m, tau);
        let q = Tensor::from_vec(k, n, raw[..k * n].to_vec()).unwrap();
        let once = project(&q, &stats);
        let p = PowerAllocation::new(once.map(|a| a * a));
        prop_assert!(p.validate(&stats).is_ok());
        prop_assert_eq!(project(&once, &stats), once);
    }

    #[test]
    fn estimate_statistics_invariants((seed, k, n, m, tau) in sizes()) {
        let (_, topo, stats) = network(seed, k, n, m, tau);
        let g = topo.gram();
        for a in 0..n {
            prop_assert_eq!(g.get(a, a), 1.0);
            for b in 0..n {
                prop_assert_eq!(g.get(a, b), g.get(b, a));
            }
        }
        for ap in 0..k {
            for ue in 0..n {
                let (v, s) = (stats.v.get(ap, ue), stats.sigma.get(ap, ue));
                prop_assert!(v > 0.0 && v <= s);
            }
        }
        prop_assert!(proportional_allocation(&stats).validate(&stats).is_ok());
    }

    #[test]
    fn path_loss_non_increasing(d in 10.0f64..2000.0, step in 0.0f64..500.0) {
        let pl = SystemConfig::default().path_loss;
        prop_assert!(pl.clamped_gain(d + step) <= pl.clamped_gain(d));
    }
}
