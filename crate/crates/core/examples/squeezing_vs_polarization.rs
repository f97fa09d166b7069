//! Predicted squeezing after the array as the probe polarization turns:
//! FDTD transmission at 795 nm placed in a loss chain with the vapor-cell
//! and detector losses folded out, against the ND-filter reference.
//!
//! Usage: `cargo run --release --example squeezing_vs_polarization -- [dx_nm] [gain]`

use eot_sim::fdtd::{DeviceStack, GridSpec, RunOptions, SimulationGrid};
use eot_sim::loss_chain::{LossChain, LossElement};
use eot_sim::quantum::Arm;
use eot_sim::scenarios::{
    angle_grid, nd_comparison_curve, near_infrared_source, predict_squeezing_vs_polarization, sweep_polarization,
    SweepMethod, EOT_ELEMENT, PROBE_WAVELENGTH_NM,
};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let dx: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10.0);
    let gain: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4.0);

    let stack = DeviceStack::default_eot();
    let grid = SimulationGrid::for_stack(&GridSpec::uniform(dx), &stack)?;
    let sweep = sweep_polarization(
        &stack,
        &grid,
        &near_infrared_source(),
        &angle_grid(15.0),
        PROBE_WAVELENGTH_NM,
        SweepMethod::Superposition,
        &RunOptions::default(),
    )?;
    let chain = LossChain::vapor_and_detector().with_element(LossElement::new(EOT_ELEMENT, 1.0, Arm::Both)?)?;
    let curve = predict_squeezing_vs_polarization(&sweep, &chain, gain)?;
    let reference = nd_comparison_curve(&sweep.transmission, gain)?;
    println!("{:>9} {:>8} {:>12} {:>12}", "angle_deg", "T", "array dB", "ND dB");
    for ((p, t), r) in curve.points.iter().zip(&sweep.transmission).zip(&reference.points) {
        println!("{:>9.0} {t:>8.4} {:>12.4} {:>12.4}", p.x, p.squeezing_db, r.squeezing_db);
    }
    Ok(())
}
