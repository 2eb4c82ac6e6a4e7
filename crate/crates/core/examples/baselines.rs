//! Heuristic, projected-gradient and full-CSI GNN allocations on the same
//! networks.

use cellfree_gnn::baselines::{
    centralized_mean_sum_rate, centralized_train, equal_allocation, init_centralized,
    projected_gradient_allocation, proportional_allocation, CentralizedConfig, PgdConfig,
};
use cellfree_gnn::channel::{Instance, Scenario, SystemConfig};
use cellfree_gnn::rate::ergodic_rate;
use cellfree_gnn::training::TrainConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cellfree_gnn::Result<()> {
    let cfg = SystemConfig {
        num_aps: 8,
        num_ues: 4,
        antennas: 2,
        pilot_len: 4,
        ..SystemConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let test: Vec<Scenario> = (0..20).map(|_| Scenario::sample(&cfg, &mut rng)).collect();
    let mean = |f: &dyn Fn(&Scenario) -> f64| test.iter().map(f).sum::<f64>() / test.len() as f64;

    let pgd = PgdConfig::default();
    println!(
        "equal        {:.4}",
        mean(&|s| ergodic_rate(&equal_allocation(&s.stats), &s.stats)
            .unwrap()
            .sum_rate)
    );
    println!(
        "proportional {:.4}",
        mean(
            &|s| ergodic_rate(&proportional_allocation(&s.stats), &s.stats)
                .unwrap()
                .sum_rate
        )
    );
    println!(
        "pgd          {:.4}",
        mean(&|s| projected_gradient_allocation(&s.stats, &pgd, None)
            .unwrap()
            .sum_rate)
    );

    let data: Vec<Instance> = (0..100).map(|_| Instance::sample(&cfg, &mut rng)).collect();
    let tc = TrainConfig {
        rounds: 150,
        convergence: None,
        ..TrainConfig::default()
    };
    let out = centralized_train(
        init_centralized(CentralizedConfig::new(cfg.pilot_len), 0)?,
        &data,
        &tc,
    )?;
    let refs: Vec<&Scenario> = test.iter().collect();
    println!(
        "centralized  {:.4}  ({} rounds)",
        centralized_mean_sum_rate(&out.model, &refs)?,
        out.log.rounds.len()
    );
    Ok(())
}
