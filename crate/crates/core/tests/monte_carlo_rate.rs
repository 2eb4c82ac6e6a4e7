//! The sampled SINR of a lone UE converges to the closed form.

use approx::assert_relative_eq;
use cellfree_gnn::baselines::proportional_allocation;
use cellfree_gnn::channel::{compute_v, sample_topology, SystemConfig};
use cellfree_gnn::rate::{closed_form_sinr, monte_carlo_sinr_terms};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn single_ue_sampled_sinr_matches_closed_form() {
    for (seed, aps, antennas) in [(21, 1, 1), (22, 3, 2), (23, 4, 4)] {
        let cfg = SystemConfig {
            num_aps: aps,
            num_ues: 1,
            antennas,
            pilot_len: 1,
            area_side: 200.0,
            ..SystemConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let topo = sample_topology(&cfg, &mut rng);
        let stats = compute_v(&topo, &cfg);
        let p = proportional_allocation(&stats);
        let closed = closed_form_sinr(p.matrix(), &stats)[0];
        let report = monte_carlo_sinr_terms(&p, &topo, &cfg, 100_000, &mut rng).unwrap();
        assert_relative_eq!(report.per_ue[0].sinr, closed, max_relative = 0.02);
    }
}
