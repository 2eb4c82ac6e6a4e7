//! Randomized check of every closed-form rate term against simulation,
//! as run by `cfgnn verify-rate`.

use cellfree_gnn::channel::SystemConfig;
use cellfree_gnn::experiment::{verify_rate, VerifyConfig};

fn main() -> cellfree_gnn::Result<()> {
    let vc = VerifyConfig {
        instances: 3,
        samples: 40_000,
        ..VerifyConfig::default()
    };
    let report = verify_rate(&SystemConfig::default(), &vc, 9)?;
    for (i, case) in report.cases.iter().enumerate() {
        println!(
            "case {i}: K={} N={} M={} tau={}",
            case.aps, case.ues, case.antennas, case.pilot_len
        );
        for c in &case.checks {
            println!(
                "  UE {} {:<20} closed {:>11.4e} sampled {:>11.4e} rel {:.2e} (±{:.1e})",
                c.ue, c.term, c.closed_form, c.sampled, c.rel_error, c.confidence_radius
            );
        }
    }
    println!(
        "max relative error {:.3e} against {:.0e}",
        report.max_rel_error, report.tolerance
    );
    Ok(())
}
