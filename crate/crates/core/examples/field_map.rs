//! Near-field |E| maps 10 nm below the silver film at the near-infrared
//! transmission peak for 0° and 60° polarization, written as portable
//! binary matrices (`EOTF`, u32 rows and columns, little-endian f64).
//!
//! Usage: `cargo run --release --example field_map -- [dx_nm] [out_dir]`

use std::path::PathBuf;

use eot_sim::fdtd::{DeviceStack, GridSpec, PolarizationBasis, RunOptions, SimulationGrid};
use eot_sim::io::write_field_map;
use eot_sim::scenarios::{near_infrared_monitors, near_infrared_source};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let dx: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10.0);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/field_map".into()));
    std::fs::create_dir_all(&out)?;

    let stack = DeviceStack::default_eot();
    let grid = SimulationGrid::for_stack(&GridSpec::uniform(dx), &stack)?;
    let mut monitors = near_infrared_monitors();
    monitors.field_map_depth_nm = Some(10.0);
    let basis = PolarizationBasis::compute(&stack, &grid, &near_infrared_source(), &monitors, &RunOptions::default())?;
    let (peak, t) = basis.spectrum(60.0).peak_in(750.0, 870.0).expect("monitors cover 750-870 nm");
    println!("60° peak T = {t:.4} at {peak} nm; mapping there");

    let mut maps = Vec::new();
    for theta in [0.0, 60.0] {
        let map = basis.field_map(theta, peak).expect("basis records the map plane");
        let (rows, cols, values) = map.magnitude_window(200.0);
        let path = out.join(format!("fieldmap_{theta}deg.eotf"));
        write_field_map(&path, rows, cols, &values)?;
        let max = values.iter().cloned().fold(0.0, f64::max);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        println!(
            "{theta:>4}°: z = {:.1} nm, {rows}x{cols} px, max |E|/|E0| = {max:.3}, mean {mean:.3} -> {}",
            map.z_nm,
            path.display()
        );
        maps.push(map);
    }
    println!("pearson correlation of the two maps: {:.3}", maps[0].correlation(&maps[1]));
    Ok(())
}
