//! Loss-chain bookkeeping: squeezing predicted with the vapor-cell and
//! detector losses, the transmission implied by an observed squeezing
//! level, the gain implied by an observation, and the anti-squeezed point
//! at minimum transmission that no beamsplitter loss can explain.
//!
//! Usage: `cargo run --release --example loss_chain`

use eot_sim::loss_chain::{
    infer_gain, predicted_squeezing, transmission_for_squeezing, LossChain, LossElement,
};
use eot_sim::quantum::Arm;
use eot_sim::scenarios::{MEASURED_DB_AT_MIN_TRANSMISSION, MIN_TRANSMISSION_REFERENCE};

fn main() -> anyhow::Result<()> {
    let gain = 4.0;
    let raw = LossChain::vapor_and_detector();
    let unnormalized = LossChain::new(raw.elements().to_vec(), Vec::<String>::new())?;
    println!("G = {gain}");
    println!("  vapor 0.70 + detector 0.94, folded out of the axis: {:.3} dB", predicted_squeezing(&raw, gain)?);
    println!("  same losses counted:                               {:.3} dB", predicted_squeezing(&unnormalized, gain)?);

    let eta = transmission_for_squeezing(1.28, gain)?;
    println!("1.28 dB at G = {gain} needs symmetric transmission {eta:.4} (measured array: 0.36)");
    println!("gain implied by 1.28 dB at eta = 0.36: {:.3}", infer_gain(1.28, 0.36)?);

    let chain = LossChain::new(vec![LossElement::new("eot", MIN_TRANSMISSION_REFERENCE, Arm::Both)?], Vec::<String>::new())?;
    println!(
        "at eta = {MIN_TRANSMISSION_REFERENCE}: model {:.4} dB for G = {gain}, observed {MEASURED_DB_AT_MIN_TRANSMISSION} dB",
        predicted_squeezing(&chain, gain)?
    );
    match infer_gain(MEASURED_DB_AT_MIN_TRANSMISSION, MIN_TRANSMISSION_REFERENCE) {
        Ok(g) => println!("  explained by G = {g}"),
        Err(e) => println!("  {e}"),
    }
    Ok(())
}
