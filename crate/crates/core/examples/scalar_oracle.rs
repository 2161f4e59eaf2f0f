//! A plate without a channel reduces to a scalar energy balance; the FEM
//! transient is checked against an RK4 integration of it.
//!
//! ```bash
//! cargo run --release --example scalar_oracle
//! ```

use vasctherm::postprocess::mean_surface_temperature;
use vasctherm::scenario::{LayoutConfig, ScenarioConfig};
use vasctherm::solvers::{solve_steady, solve_transient};
use vasctherm::verification::scalar_reference;

fn main() -> vasctherm::Result<()> {
    let mut config = ScenarioConfig {
        layout: LayoutConfig {
            none: true,
            ..LayoutConfig::default()
        },
        ..ScenarioConfig::default()
    };
    config.mesh.n = 6;
    for emissivity in [0.0, 0.97] {
        config.surface.emissivity = emissivity;
        let p = config.build_problem()?;
        let reference = scalar_reference(&p, &config.transient)?;
        let steady = solve_steady(&p, &config.newton, None)?;
        let series = solve_transient(&p, &config.transient, &config.newton)?;
        let worst = series
            .fields
            .iter()
            .zip(&reference.trajectory)
            .map(|(f, (_, r))| (mean_surface_temperature(f, &p.mesh) - r).abs())
            .fold(0.0, f64::max);
        println!(
            "emissivity {emissivity}: steady {:.8} K (root {:.8} K), worst transient gap {worst:.2e} K",
            steady.theta[0], reference.steady
        );
    }
    Ok(())
}
