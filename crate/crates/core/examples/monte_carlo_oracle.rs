//! Closed-form SINR terms next to their simulated counterparts.

use cellfree_gnn::baselines::proportional_allocation;
use cellfree_gnn::channel::{compute_v, sample_topology, SystemConfig};
use cellfree_gnn::rate::{closed_form_terms, monte_carlo_sinr_terms};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cellfree_gnn::Result<()> {
    let cfg = SystemConfig {
        num_aps: 3,
        num_ues: 3,
        antennas: 2,
        pilot_len: 2,
        area_side: 200.0,
        ..SystemConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let topo = sample_topology(&cfg, &mut rng);
    let stats = compute_v(&topo, &cfg);
    let p = proportional_allocation(&stats);
    let closed = closed_form_terms(p.matrix(), &stats);
    let sampled = monte_carlo_sinr_terms(&p, &topo, &cfg, 50_000, &mut rng)?;

    println!("pilots {:?}", topo.pilot_index);
    for (n, (c, s)) in closed.iter().zip(&sampled.per_ue).enumerate() {
        println!("UE {n}");
        println!(
            "  desired mean  {:>11.4e} {:>11.4e} ± {:.1e}",
            c.desired_mean, s.terms.desired_mean, s.std_errors.desired_mean
        );
        println!(
            "  gain variance {:>11.4e} {:>11.4e} ± {:.1e}",
            c.gain_variance, s.terms.gain_variance, s.std_errors.gain_variance
        );
        println!(
            "  cross power   {:>11.4e} {:>11.4e} ± {:.1e}",
            c.cross_power(),
            s.cross_power,
            s.std_errors.cross_power
        );
        println!(
            "  SINR          {:>11.4e} {:>11.4e} ± {:.1e}",
            c.sinr(),
            s.sinr,
            s.std_errors.sinr
        );
    }
    Ok(())
}
