//! Per-call cost of every allocator as the number of APs grows.

use cellfree_gnn::baselines::{init_centralized, CentralizedConfig, PgdConfig};
use cellfree_gnn::channel::SystemConfig;
use cellfree_gnn::experiment::{bench_runtime, BenchConfig, BENCH_METHODS};
use cellfree_gnn::gnn::{init_model, ModelConfig};

fn main() -> cellfree_gnn::Result<()> {
    let base = SystemConfig {
        pilot_len: 4,
        ..SystemConfig::default()
    };
    let bc = BenchConfig {
        instances: 2,
        trials: 3,
        ..BenchConfig::default()
    };
    let d = init_model(ModelConfig::new(4), 0)?;
    let c = init_centralized(CentralizedConfig::new(4), 0)?;
    let report = bench_runtime(&base, &bc, &PgdConfig::default(), &d, &c, 8)?;
    print!("{:>4}", "K");
    for m in BENCH_METHODS {
        print!(" {m:>20}");
    }
    println!();
    for &k in &bc.aps {
        print!("{k:>4}");
        for m in BENCH_METHODS {
            print!(" {:>17.4} ms", report.get(k, m).unwrap_or(f64::NAN));
        }
        println!();
    }
    Ok(())
}
