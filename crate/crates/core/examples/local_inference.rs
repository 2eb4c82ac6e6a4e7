//! Each AP computes its own power row from local statistics only; the
//! model is saved and reloaded between uses.

use cellfree_gnn::channel::{Scenario, SystemConfig};
use cellfree_gnn::gnn::{
    init_model, load_checkpoint, predict_all, predict_power, save_checkpoint, ModelConfig,
};
use cellfree_gnn::rate::ergodic_rate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cellfree_gnn::Result<()> {
    let cfg = SystemConfig {
        num_aps: 5,
        num_ues: 4,
        antennas: 2,
        pilot_len: 4,
        ..SystemConfig::default()
    };
    let s = Scenario::sample(&cfg, &mut ChaCha8Rng::seed_from_u64(4));
    let model = init_model(ModelConfig::new(cfg.pilot_len), 0)?;
    println!("{} parameters", model.num_params());

    for k in 0..cfg.num_aps {
        let row = predict_power(&model, k, &s.topology, &s.stats, &cfg)?;
        let used: f64 = row.iter().zip(s.stats.v.row(k)).map(|(p, v)| p * v).sum();
        println!(
            "AP {k}: budget used {:.4} of {:.4}",
            used,
            1.0 / cfg.antennas as f64
        );
    }

    let path = std::env::temp_dir().join("cfgnn_example_model.json");
    save_checkpoint(&model, "example", &path)?;
    let (reloaded, tag) = load_checkpoint(&path)?;
    let p = predict_all(&reloaded, &s.topology, &s.stats, &cfg)?;
    println!(
        "reloaded ({tag}), untrained sum rate {:.4}",
        ergodic_rate(&p, &s.stats)?.sum_rate
    );
    std::fs::remove_file(path)?;
    Ok(())
}
