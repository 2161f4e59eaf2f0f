//! Forward against reversed coolant flow for each layout.
//!
//! ```bash
//! cargo run --release --example flow_reversal -- 300
//! ```

use vasctherm::geometry::LayoutKind;
use vasctherm::scenario::{flow_reversal_experiment, LayoutConfig, ScenarioConfig};

fn main() -> vasctherm::Result<()> {
    // simulated time in seconds; the full 1500 s takes a few seconds per layout
    let total: f64 = std::env::args().nth(1).map_or(Ok(300.0), |s| s.parse()).expect("time in s");
    for kind in LayoutKind::ALL {
        let mut config = ScenarioConfig {
            layout: LayoutConfig::of_kind(kind),
            flux: 2000.0,
            ..ScenarioConfig::default()
        };
        config.transient.total_time = total;
        let r = flow_reversal_experiment(&config)?.report;
        println!(
            "{:<11} steady |dMST| {:.2e} K |dOutlet| {:.2e} K, transient max |dMST| {:.2e} K -> {}",
            kind.name(),
            r.steady_mst_gap,
            r.steady_outlet_gap,
            r.max_transient_mst_gap.unwrap(),
            if r.pass() { "invariant" } else { "NOT invariant" }
        );
    }
    Ok(())
}
