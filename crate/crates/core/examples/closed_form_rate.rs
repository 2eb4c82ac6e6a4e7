//! Downlink rates of the two heuristic allocations, computed directly and
//! from the per-AP summaries the CPU would receive.

use cellfree_gnn::baselines::{equal_allocation, proportional_allocation};
use cellfree_gnn::channel::{Scenario, SystemConfig};
use cellfree_gnn::rate::{closed_form_terms, ergodic_rate, rate_from_payloads, shared_info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cellfree_gnn::Result<()> {
    let cfg = SystemConfig {
        num_aps: 10,
        num_ues: 5,
        antennas: 4,
        pilot_len: 3,
        ..SystemConfig::default()
    };
    let s = Scenario::sample(&cfg, &mut ChaCha8Rng::seed_from_u64(2));

    for (name, p) in [
        ("equal", equal_allocation(&s.stats)),
        ("proportional", proportional_allocation(&s.stats)),
    ] {
        let direct = ergodic_rate(&p, &s.stats)?;
        let payloads: Vec<_> = (0..cfg.num_aps)
            .map(|k| shared_info(k, p.matrix().row(k), &s.stats).payload())
            .collect();
        let routed = rate_from_payloads(&payloads, cfg.antennas)?;
        println!(
            "{name:<12} sum rate {:.4}  via summaries {:.4}  ({} scalars per AP)",
            direct.sum_rate,
            routed.sum_rate,
            payloads[0].len()
        );
        for (n, t) in closed_form_terms(p.matrix(), &s.stats).iter().enumerate() {
            println!(
                "  UE {n}: signal {:.3e}  gain var {:.3e}  contamination {:.3e}  interference {:.3e}  rate {:.3}",
                t.desired_mean * t.desired_mean,
                t.gain_variance,
                t.contamination_power,
                t.interference_power,
                direct.per_ue[n]
            );
        }
    }
    Ok(())
}
