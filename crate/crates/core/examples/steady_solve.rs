//! Steady state of the default plate: observables, bounds and energy balance.
//!
//! ```bash
//! cargo run --release --example steady_solve -- 2000
//! ```

use vasctherm::scenario::{run_scenario, ScenarioConfig};

fn main() -> vasctherm::Result<()> {
    let flux = std::env::args().nth(1).map_or(Ok(1000.0), |s| s.parse()).expect("flux in W/m2");
    let config = ScenarioConfig {
        flux,
        steady_only: true,
        ..ScenarioConfig::default()
    };
    let run = run_scenario(&config)?;
    let s = &run.summary;
    println!("{} layout, {} {}, f0 = {flux} W/m2", s.layout, s.material, s.mode.label());
    println!("Newton iterations      {}", s.steady_newton_iterations);
    println!("mean surface temp      {:.4} K", s.steady.mst);
    println!("outlet temperature     {:.4} K", s.steady.theta_outlet.unwrap());
    println!("thermal efficiency     {:.4}", s.steady.eta.unwrap());
    println!("field range            [{:.4}, {:.4}] K", s.bounds.observed_min, s.bounds.observed_max);
    println!("max edge Peclet        {:.1}", s.max_edge_peclet);
    let b = s.steady_balance;
    println!(
        "balance (W)            supplied {:.5}, convected {:.5}, radiated {:.5}, coolant {:.5}, residual {:.1e}",
        b.supplied, b.convected, b.radiated, b.coolant, b.residual
    );
    Ok(())
}
