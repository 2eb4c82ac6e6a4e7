//! Draws one network, prints its large-scale fading and estimate quality,
//! and round-trips it through the instance file format.

use cellfree_gnn::channel::{Instance, SystemConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cellfree_gnn::Result<()> {
    let cfg = SystemConfig {
        num_aps: 6,
        num_ues: 4,
        antennas: 2,
        pilot_len: 3,
        ..SystemConfig::default()
    };
    let inst = Instance::sample(&cfg, &mut ChaCha8Rng::seed_from_u64(1));
    let stats = inst.stats();

    println!("pilots {:?}", inst.pilot_index);
    println!(
        "{:>3} {:>4} {:>12} {:>12} {:>8}",
        "AP", "UE", "sigma", "v", "v/sigma"
    );
    for k in 0..cfg.num_aps {
        for n in 0..cfg.num_ues {
            let (s, v) = (inst.sigma.get(k, n), stats.v.get(k, n));
            println!("{k:>3} {n:>4} {s:>12.4e} {v:>12.4e} {:>8.4}", v / s);
        }
    }

    let json = inst.to_json()?;
    let back = Instance::from_json(&json)?;
    assert_eq!(back, inst);
    println!("instance file: {} bytes, round trip exact", json.len());
    Ok(())
}
