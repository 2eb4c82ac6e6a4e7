//! Scalars exchanged by each scheme, counted on the message bus and
//! compared with the closed-form counts.

use cellfree_gnn::channel::SystemConfig;
use cellfree_gnn::experiment::{exchange_report, ExchangeConfig};

fn main() -> cellfree_gnn::Result<()> {
    let base = SystemConfig {
        pilot_len: 4,
        ..SystemConfig::default()
    };
    let rows = exchange_report(&base, &ExchangeConfig::default(), 7)?;
    println!(
        "{:<12} {:<10} {:>3} {:>3} {:>10} {:>10} {:>10}",
        "scheme", "phase", "K", "N", "uplink", "literal", "downlink"
    );
    for r in &rows {
        println!(
            "{:<12} {:<10} {:>3} {:>3} {:>10} {:>10} {:>10}{}",
            r.scheme,
            r.phase,
            r.k,
            r.n,
            r.measured_uplink,
            r.literal_uplink,
            r.measured_downlink,
            if r.matches { "" } else { "  MISMATCH" }
        );
    }
    Ok(())
}
