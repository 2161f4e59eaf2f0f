//! Property curves of the built-in materials and the coolant heat capacity rate.
//!
//! ```bash
//! cargo run --example materials
//! ```

use vasctherm::materials::{builtin_material, check_ellipticity, heat_capacity_rate, BuiltinMaterial, Coolant, PropertyMode};

fn main() -> vasctherm::Result<()> {
    for which in BuiltinMaterial::ALL {
        let m = builtin_material(which, PropertyMode::TemperatureDependent);
        let frozen = builtin_material(which, PropertyMode::Constant);
        let e = check_ellipticity(&m, 256)?;
        println!("{} (rho = {} kg/m3)", m.name, m.density);
        println!("  k in [{:.4}, {:.4}] W/(m K) over the valid range", e.sampled_min, e.sampled_max);
        for theta in [296.42, 320.0, 350.0, 400.0] {
            println!(
                "  {theta:>7.2} K  c = {:8.2} J/(kg K)  k = {:.4} W/(m K)  (CMP: c = {:.2}, k = {:.4})",
                m.specific_heat.eval(theta),
                m.conductivity.eval(theta),
                frozen.specific_heat.eval(theta),
                frozen.conductivity.eval(theta),
            );
        }
    }
    for q in [0.5, 1.0, 2.0] {
        let c = Coolant::water(q)?;
        println!("water at {q} mL/min: chi = {:.5} W/K", heat_capacity_rate(&c));
    }
    Ok(())
}
