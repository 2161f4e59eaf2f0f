//! Scenario from JSON: an explicit channel path, a held edge temperature and
//! a warm coolant.
//!
//! ```bash
//! cargo run --release --example custom_scenario
//! ```

use vasctherm::scenario::{run_scenario, ScenarioConfig};

const CONFIG: &str = r#"{
    "name": "l_channel",
    "layout": { "path": [[0.03, 0.1], [0.03, 0.03], [0.1, 0.03]] },
    "material": { "name": "gfrp_like", "mode": "TDMP" },
    "coolant": { "flow_rate_ml_min": 2.0 },
    "inlet_temperature": 300.0,
    "flux": 1500.0,
    "boundary": {
        "bottom": { "kind": "dirichlet", "temperature": 296.42 },
        "right": { "kind": "neumann", "flux": 0.0 },
        "top": { "kind": "neumann", "flux": 0.0 },
        "left": { "kind": "neumann", "flux": 0.0 }
    },
    "steady_only": true
}"#;

fn main() -> vasctherm::Result<()> {
    let config = ScenarioConfig::from_json(CONFIG)?;
    let run = run_scenario(&config)?;
    let s = &run.summary;
    println!("{}: {} nodes, chi = {:.4} W/K", s.name, s.mesh.n_nodes, s.chi);
    println!("MST {:.4} K, outlet {:.4} K", s.steady.mst, s.steady.theta_outlet.unwrap());
    println!("bounds: [{:.4}, {:.4}] K against [{}, {}] K", s.bounds.observed_min, s.bounds.observed_max, s.bounds.phi_min, s.bounds.phi_max);
    println!("energy residual {:.2e} W", s.steady_balance.residual);
    Ok(())
}
