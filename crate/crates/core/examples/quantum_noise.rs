//! Intensity-difference noise of a seeded two-mode squeezer followed by
//! symmetric loss: closed form against the covariance engine, with the
//! uncertainty-principle check on every state.
//!
//! Usage: `cargo run --release --example quantum_noise -- [gain]`

use eot_sim::quantum::{
    balanced_squeezed_state, closed_form_noise, intensity_difference_noise, noise_ratio_to_db,
};

fn main() -> anyhow::Result<()> {
    let gain: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(4.0);
    println!("gain G = {gain}; ideal noise 1/G = {:.4} ({:.3} dB)", 1.0 / gain, noise_ratio_to_db(1.0 / gain)?);
    println!("{:>6} {:>12} {:>12} {:>10} {:>12}", "eta", "closed form", "engine", "dB", "min eig");
    for i in 0..=10 {
        let eta = i as f64 / 10.0;
        let state = balanced_squeezed_state(eta, gain)?;
        let exact = closed_form_noise(eta, gain)?;
        let engine = intensity_difference_noise(&state, 1e6)?;
        println!(
            "{eta:>6.2} {exact:>12.9} {engine:>12.9} {:>10.4} {:>12.2e}",
            noise_ratio_to_db(exact)?,
            state.min_uncertainty_eigenvalue()
        );
    }
    Ok(())
}
