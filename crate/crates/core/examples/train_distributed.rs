//! Short distributed training run: one designated AP per round on the
//! tape, the others contributing their summaries as constants.

use cellfree_gnn::baselines::{equal_allocation, proportional_allocation};
use cellfree_gnn::channel::{Instance, Scenario, SystemConfig};
use cellfree_gnn::gnn::{init_model, ModelConfig};
use cellfree_gnn::rate::ergodic_rate;
use cellfree_gnn::training::{mean_sum_rate, train, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cellfree_gnn::Result<()> {
    let cfg = SystemConfig {
        num_aps: 6,
        num_ues: 4,
        antennas: 2,
        pilot_len: 4,
        ..SystemConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let data: Vec<Instance> = (0..200).map(|_| Instance::sample(&cfg, &mut rng)).collect();
    let test: Vec<Scenario> = (0..40).map(|_| Scenario::sample(&cfg, &mut rng)).collect();
    let refs: Vec<&Scenario> = test.iter().collect();

    let tc = TrainConfig {
        rounds: 300,
        convergence: None,
        ..TrainConfig::default()
    };
    let out = train(init_model(ModelConfig::new(cfg.pilot_len), 0)?, &data, &tc)?;
    let summary = out.log.summary();
    println!(
        "{} rounds in {:.1} s",
        summary.rounds,
        summary.total_ms / 1e3
    );
    println!(
        "uplink {} scalars, downlink {} scalars",
        out.ledger.uplink, out.ledger.downlink
    );

    let mean = |f: &dyn Fn(&Scenario) -> f64| test.iter().map(f).sum::<f64>() / test.len() as f64;
    let equal = mean(&|s| {
        ergodic_rate(&equal_allocation(&s.stats), &s.stats)
            .unwrap()
            .sum_rate
    });
    let prop = mean(&|s| {
        ergodic_rate(&proportional_allocation(&s.stats), &s.stats)
            .unwrap()
            .sum_rate
    });
    println!(
        "test sum rate: gnn {:.4}  proportional {prop:.4}  equal {equal:.4}",
        mean_sum_rate(&out.model, &refs)?
    );
    Ok(())
}
