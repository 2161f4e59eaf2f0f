//! Manufactured-solution convergence for linear and quadratic elements,
//! followed by the finite-difference Jacobian sweep.
//!
//! ```bash
//! cargo run --release --example mms_convergence
//! ```

use vasctherm::mesh::ElementOrder;
use vasctherm::verification::{jacobian_mask_sweep, mms_convergence, MmsCase};

fn main() -> vasctherm::Result<()> {
    for order in [ElementOrder::Linear, ElementOrder::Quadratic] {
        for mut case in MmsCase::standard() {
            case.order = order;
            let t = mms_convergence(&case, &[8, 16, 32, 64])?;
            let slope = t.slope.map_or("exact".to_string(), |s| format!("{s:.3}"));
            println!("P{} {:<22} L2 slope {slope}", order.degree(), t.case);
            for r in &t.rows {
                println!("    n = {:>3}  h = {:.5}  L2 = {:.3e}  max = {:.3e}", r.n, r.h, r.l2_error, r.max_error);
            }
        }
    }
    let worst = jacobian_mask_sweep(5, 1).map(|v| v.iter().map(|m| m.1).fold(0.0, f64::max))?;
    println!("Jacobian, 16 term masks: worst relative error {worst:.2e}");
    Ok(())
}
