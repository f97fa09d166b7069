//! Single-colour transmission of the default array against linear
//! polarization at 795 nm, from one x- and one y-polarized run.
//!
//! Usage: `cargo run --release --example polarization_sweep -- [dx_nm]`

use std::time::Instant;

use eot_sim::fdtd::{DeviceStack, GridSpec, PolarizationBasis, RunOptions, SimulationGrid};
use eot_sim::scenarios::{angle_grid, near_infrared_monitors, near_infrared_source, PROBE_WAVELENGTH_NM};

fn main() -> anyhow::Result<()> {
    let dx: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(10.0);
    let stack = DeviceStack::default_eot();
    let grid = SimulationGrid::for_stack(&GridSpec::uniform(dx), &stack)?;
    let start = Instant::now();
    let basis = PolarizationBasis::compute(
        &stack,
        &grid,
        &near_infrared_source(),
        &near_infrared_monitors(),
        &RunOptions::default(),
    )?;
    println!(
        "basis runs: {} + {} steps in {:.1} s{}",
        basis.x.steps,
        basis.y.steps,
        start.elapsed().as_secs_f64(),
        if basis.converged() { "" } else { " (provisional)" }
    );

    println!("angle_deg  T({PROBE_WAVELENGTH_NM} nm)");
    let mut best = (0.0, f64::NEG_INFINITY);
    let mut worst = (0.0, f64::INFINITY);
    for a in angle_grid(5.0) {
        let t = basis.spectrum(a).at(PROBE_WAVELENGTH_NM);
        println!("{a:>9.0}  {t:.5}");
        if t > best.1 {
            best = (a, t);
        }
        if t < worst.1 {
            worst = (a, t);
        }
    }
    println!("max T = {:.4} at {}°, min T = {:.4} at {}°, contrast {:.3}", best.1, best.0, worst.1, worst.0, worst.1 / best.1);
    let s60 = basis.spectrum(60.0);
    if let Some((l, t)) = s60.peak_in(750.0, 870.0) {
        println!("60°: peak T = {t:.4} at {l} nm within 750-870 nm");
    }
    Ok(())
}
