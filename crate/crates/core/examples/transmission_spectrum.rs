//! Transmission and reflection spectra of the default triangular-hole
//! silver array, normalized to vacuum and to the bare substrate.
//!
//! Usage: `cargo run --release --example transmission_spectrum -- [dx_nm] [polarization_deg] [band_lo_nm] [band_hi_nm]`

use std::time::Instant;

use eot_sim::fdtd::run::wavelength_grid;
use eot_sim::fdtd::{run_transmission, DeviceStack, GridSpec, MonitorSpec, RunOptions, SimulationGrid, SourceSpec};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let dx: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10.0);
    let theta: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(60.0);
    let lo: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(400.0);
    let hi: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1000.0);

    let stack = DeviceStack::default_eot();
    let grid = SimulationGrid::for_stack(&GridSpec::uniform(dx), &stack)?;
    let source = SourceSpec::broadband(lo, hi, theta);
    let monitors = MonitorSpec {
        wavelengths_nm: wavelength_grid(lo, hi, 10.0, &[795.0]),
        field_map_depth_nm: None,
    };
    println!(
        "grid {}x{}x{} cells, dt = {:.3} as",
        grid.nx,
        grid.ny,
        grid.nz,
        grid.dt * 1e18
    );
    let start = Instant::now();
    let s = run_transmission(&stack, &grid, &source, &monitors, &RunOptions::default())?;
    println!(
        "{} steps in {:.1} s{}",
        s.steps,
        start.elapsed().as_secs_f64(),
        if s.provisional { " (provisional: time cap reached)" } else { "" }
    );
    println!("wavelength_nm  T        R        T/T_substrate");
    for i in 0..s.wavelengths_nm.len() {
        println!(
            "{:>8.1}  {:.5}  {:.5}  {:.5}",
            s.wavelengths_nm[i], s.transmission[i], s.reflection[i], s.transmission_substrate[i]
        );
    }
    if let Some((l, t)) = s.peak_in(750.0, 870.0) {
        println!("peak in 750-870 nm: T = {t:.4} at {l} nm");
    }
    Ok(())
}
