//! Generates the three channel layouts, embeds each in a structured mesh and
//! exports the meshes as CSV.
//!
//! ```bash
//! cargo run --example layouts -- out/layouts
//! ```

use std::path::PathBuf;

use vasctherm::geometry::{generate_layout, Domain2D, LayoutKind, LayoutParams};
use vasctherm::mesh::{build_structured_mesh, embed_vasculature, tag_boundary, BoundarySpec, ElementOrder};

fn main() -> vasctherm::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/layouts".into()));
    let domain = Domain2D::default();
    let grid = build_structured_mesh(&domain, 40)?;
    for kind in LayoutKind::ALL {
        let path = generate_layout(&domain, &LayoutParams::for_kind(kind))?;
        let mesh = tag_boundary(&embed_vasculature(&grid, &path, ElementOrder::Linear)?, &BoundarySpec::adiabatic());
        let ch = mesh.channel().expect("embedded channel");
        println!(
            "{:<11} {} vertices, arc length {:.4} m (snapped {:.4} m, max snap error {:.1e} m), inlet node {}, outlet node {}",
            kind.name(),
            path.vertices().len(),
            path.arc_length(),
            ch.arc_length(),
            ch.snap_error,
            ch.inlet_node,
            ch.outlet_node
        );
        mesh.write_csv(&out.join(kind.name()))?;
    }
    println!("meshes written under {}", out.display());
    Ok(())
}
