//! Constant against temperature-dependent material properties.
//!
//! ```bash
//! cargo run --release --example compare_props -- gfrp_like out/compare
//! ```

use std::path::PathBuf;

use vasctherm::scenario::{compare_cmp_tdmp, write_comparison, ScenarioConfig};

fn main() -> vasctherm::Result<()> {
    let mut args = std::env::args().skip(1);
    let material = args.next().unwrap_or_else(|| "cfrp_like".into());
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/compare".into()));
    let mut config = ScenarioConfig {
        flux: 2000.0,
        ..ScenarioConfig::default()
    };
    config.material.name = material;
    let exp = compare_cmp_tdmp(&config)?;
    write_comparison(&exp, &out)?;
    let r = &exp.report;
    println!("steady MST       CMP {:.4} K, TDMP {:.4} K", r.cmp.steady.mst, r.tdmp.steady.mst);
    println!("steady eta gap   {:.2e}", r.steady_eta_gap.unwrap());
    println!(
        "transient        max MST gap {:.3} K, max eta gap {:.2e} at t = {} s",
        r.max_transient_mst_gap.unwrap(),
        r.max_transient_eta_gap.unwrap(),
        r.peak_eta_gap_time.unwrap()
    );
    println!("outputs in {}", out.display());
    Ok(())
}
