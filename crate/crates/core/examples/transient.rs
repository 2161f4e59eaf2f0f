//! Full transient run with every output file: observables, solver log,
//! bounds, report and plot-ready CSVs.
//!
//! ```bash
//! cargo run --release --example transient -- out/transient
//! ```

use std::path::PathBuf;

use vasctherm::scenario::{run_scenario, write_run, ScenarioConfig};

fn main() -> vasctherm::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/transient".into()));
    let config = ScenarioConfig {
        name: "u_shape_cfrp_tdmp".into(),
        ..ScenarioConfig::default()
    };
    let run = run_scenario(&config)?;
    write_run(&run, &out)?;
    for o in run.observables.iter().filter(|o| o.t as usize % 150 == 0) {
        println!(
            "t = {:>6} s  MST {:.4} K  outlet {:.4} K  eta {:.4}",
            o.t,
            o.mst,
            o.theta_outlet.unwrap(),
            o.eta.unwrap()
        );
    }
    println!(
        "largest nodal gap to the steady field at t = {} s: {:.3} K",
        config.transient.total_time,
        run.summary.transient_to_steady_gap.unwrap()
    );
    println!("outputs in {}", out.display());
    Ok(())
}
