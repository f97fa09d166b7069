//! Built-in optical materials and the lattice anomalies of the default
//! array.
//!
//! Usage: `cargo run --release --example materials`

use eot_sim::materials::{wood_anomaly_wavelength, LatticeAnomaly, MaterialModel};

fn main() -> anyhow::Result<()> {
    let materials = [
        MaterialModel::silver(),
        MaterialModel::ito(),
        MaterialModel::fused_silica(),
        MaterialModel::fused_silica_sellmeier(),
        MaterialModel::borosilicate(),
    ];
    for m in &materials {
        println!("{} (valid {:?} nm, {} poles)", m.name, m.valid_range, m.poles.len());
        for l in [350.0, 500.0, 650.0, 795.0, 950.0] {
            let eps = m.permittivity(l)?;
            let n = m.refractive_index(l)?;
            println!("  {l:>5} nm  eps = {:>9.4} {:+.4}i   n = {:.4} {:+.4}i", eps.re, eps.im, n.re, n.im);
        }
    }
    println!("Wood-Rayleigh anomalies, 400 nm square lattice:");
    for (medium, n) in [("vacuum", 1.0), ("ITO", 1.9), ("fused silica", 1.45)] {
        for order in [(1, 0), (1, 1)] {
            let a = LatticeAnomaly::new(400.0, order, n)?;
            println!("  {medium:<12} {order:?}: {:.1} nm", wood_anomaly_wavelength(&a));
        }
    }
    Ok(())
}
