//! Loss chains between the squeezer and the detectors.
//!
//! A [`LossChain`] is an ordered list of named beamsplitter-like elements
//! (vapor-cell absorption, the EOT array, ND filters, detector efficiency).
//! Elements listed in the chain's normalization set are divided out of the
//! transmission axis, matching how squeezing is plotted against the
//! transmission of the element under test alone.
//!
//! The noise model assumes the conjugate is rebalanced against the probe
//! before detection. With rebalancing, the residual symmetric loss is set by
//! the lossier arm, so unequal arm transmissions enter the closed form
//! through their minimum.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantum::{
    self, apply_loss, apply_two_mode_squeezer, balance_arms, closed_form_noise,
    db_to_noise_ratio, intensity_difference_noise, noise_ratio_to_db, Arm, BeamsplitterLoss,
    GaussianTwoModeState, QuantumError, SqueezerParams,
};

/// Seed flux used when a chain is propagated through the covariance engine.
const ENGINE_FLUX: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossChainError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("duplicate element name `{0}` in loss chain")]
    DuplicateName(String),
    #[error("normalization set names unknown element `{0}`")]
    UnknownNormalization(String),
    #[error("no element named `{0}` in loss chain")]
    UnknownElement(String),
    #[error("no physical gain explains {observed_db} dB at eta = {eta}: {reason}")]
    NoPhysicalGain {
        observed_db: f64,
        eta: f64,
        reason: NoGainReason,
    },
    #[error("no symmetric transmission gives {observed_db} dB at G = {gain}")]
    NoTransmission { observed_db: f64, gain: f64 },
    #[error("spatial-mode ensemble is empty")]
    EmptyEnsemble,
    #[error("spatial-mode weights must be non-negative and sum to 1 (sum = {0})")]
    BadWeights(f64),
}

/// Why [`infer_gain`] found no solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoGainReason {
    /// Observed noise at or below the loss floor `1 − η`.
    BelowLossFloor,
    /// Observed noise above shot noise; the beamsplitter model cannot add noise.
    AboveShotNoise,
}

impl std::fmt::Display for NoGainReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NoGainReason::BelowLossFloor => write!(f, "loss alone cannot produce that much squeezing"),
            NoGainReason::AboveShotNoise => write!(f, "excess noise is outside the beamsplitter model"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossElement {
    pub name: String,
    pub eta: f64,
    pub arm: Arm,
}

impl LossElement {
    pub fn new(name: impl Into<String>, eta: f64, arm: Arm) -> Result<Self, LossChainError> {
        quantum::check_transmission(eta)?;
        Ok(Self {
            name: name.into(),
            eta,
            arm,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossChain {
    elements: Vec<LossElement>,
    normalization_set: BTreeSet<String>,
}

impl LossChain {
    pub fn new<I, S>(elements: Vec<LossElement>, normalization: I) -> Result<Self, LossChainError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names = BTreeSet::new();
        for e in &elements {
            quantum::check_transmission(e.eta)?;
            if !names.insert(e.name.clone()) {
                return Err(LossChainError::DuplicateName(e.name.clone()));
            }
        }
        let mut normalization_set = BTreeSet::new();
        for n in normalization {
            let n = n.into();
            if !names.contains(&n) {
                return Err(LossChainError::UnknownNormalization(n));
            }
            normalization_set.insert(n);
        }
        Ok(Self {
            elements,
            normalization_set,
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// The losses quoted for the experiment: 30% vapor-cell absorption and a
    /// 94% efficient detector, both folded out of the transmission axis.
    pub fn vapor_and_detector() -> Self {
        Self::new(
            vec![
                LossElement::new("vapor", 0.70, Arm::Both).unwrap(),
                LossElement::new("detector", 0.94, Arm::Both).unwrap(),
            ],
            ["vapor", "detector"],
        )
        .unwrap()
    }

    pub fn elements(&self) -> &[LossElement] {
        &self.elements
    }

    pub fn normalization_set(&self) -> &BTreeSet<String> {
        &self.normalization_set
    }

    /// Appends an element; its name must be new.
    pub fn with_element(mut self, element: LossElement) -> Result<Self, LossChainError> {
        if self.elements.iter().any(|e| e.name == element.name) {
            return Err(LossChainError::DuplicateName(element.name));
        }
        quantum::check_transmission(element.eta)?;
        self.elements.push(element);
        Ok(self)
    }

    /// Replaces the transmission of the named element.
    pub fn set_eta(&mut self, name: &str, eta: f64) -> Result<(), LossChainError> {
        quantum::check_transmission(eta)?;
        let el = self
            .elements
            .iter_mut()
            .find(|e| e.name == name)
            .ok_or_else(|| LossChainError::UnknownElement(name.to_string()))?;
        el.eta = eta;
        Ok(())
    }

    /// Transmission after folding out the normalization set.
    pub fn normalized_transmission(&self, arm: Arm) -> f64 {
        self.elements
            .iter()
            .filter(|e| e.arm.touches(arm) && !self.normalization_set.contains(&e.name))
            .map(|e| e.eta)
            .product()
    }

    /// The symmetric-loss transmission that enters the noise model after
    /// rebalancing: the lower of the two normalized arm transmissions.
    pub fn model_transmission(&self) -> f64 {
        self.normalized_transmission(Arm::Probe)
            .min(self.normalized_transmission(Arm::Conjugate))
    }
}

/// Product of `η` over the elements acting on `arm`. `Arm::Both` multiplies
/// every element in the chain.
pub fn effective_transmission(chain: &LossChain, arm: Arm) -> f64 {
    chain
        .elements
        .iter()
        .filter(|e| e.arm.touches(arm))
        .map(|e| e.eta)
        .product()
}

/// Squeezing in dB predicted for the chain at amplifier gain `gain`.
pub fn predicted_squeezing(chain: &LossChain, gain: f64) -> Result<f64, LossChainError> {
    let ratio = closed_form_noise(chain.model_transmission(), gain)?;
    Ok(noise_ratio_to_db(ratio)?)
}

/// Propagates a seeded probe through the squeezer and the chain element by
/// element in the covariance engine, rebalancing before detection.
///
/// Normalization-set elements are skipped so the result is comparable with
/// [`predicted_squeezing`].
pub fn propagate_chain(chain: &LossChain, gain: f64) -> Result<GaussianTwoModeState, LossChainError> {
    let squeezer = SqueezerParams::new(gain)?;
    let mut state = apply_two_mode_squeezer(&GaussianTwoModeState::seeded_probe(), &squeezer);
    state = balance_arms(&state).0;
    for e in chain.elements.iter().filter(|e| !chain.normalization_set.contains(&e.name)) {
        state = apply_loss(&state, &BeamsplitterLoss::new(e.eta, e.arm)?);
    }
    Ok(balance_arms(&state).0)
}

/// Gain that reproduces `observed_db` of squeezing at transmission `eta`:
/// `G = η / (S − 1 + η)` with `S = 10^(−dB/10)`.
pub fn infer_gain(observed_db: f64, eta: f64) -> Result<f64, LossChainError> {
    quantum::check_transmission(eta)?;
    let s = db_to_noise_ratio(observed_db);
    let fail = |reason| LossChainError::NoPhysicalGain {
        observed_db,
        eta,
        reason,
    };
    if s <= 1.0 - eta {
        return Err(fail(NoGainReason::BelowLossFloor));
    }
    if s > 1.0 {
        return Err(fail(NoGainReason::AboveShotNoise));
    }
    Ok((eta / (s - 1.0 + eta)).max(1.0))
}

/// Symmetric transmission at which gain `gain` yields `observed_db` of
/// squeezing: `η = (1 − S) / (1 − 1/G)` with `S = 10^(−dB/10)`.
pub fn transmission_for_squeezing(observed_db: f64, gain: f64) -> Result<f64, LossChainError> {
    let g = SqueezerParams::new(gain)?.gain();
    let s = db_to_noise_ratio(observed_db);
    let eta = (1.0 - s) / (1.0 - 1.0 / g);
    if !(0.0..=1.0).contains(&eta) {
        return Err(LossChainError::NoTransmission { observed_db, gain });
    }
    Ok(eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialMode {
    pub weight: f64,
    pub eta: f64,
}

/// Independent squeezed pairs, one per transverse mode, each crossing the
/// EOT element with its own transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialModeEnsemble {
    modes: Vec<SpatialMode>,
}

impl SpatialModeEnsemble {
    pub fn new(modes: Vec<SpatialMode>) -> Result<Self, LossChainError> {
        if modes.is_empty() {
            return Err(LossChainError::EmptyEnsemble);
        }
        let mut sum = 0.0;
        for m in &modes {
            quantum::check_transmission(m.eta)?;
            if !(m.weight >= 0.0) {
                return Err(LossChainError::BadWeights(m.weight));
            }
            sum += m.weight;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(LossChainError::BadWeights(sum));
        }
        Ok(Self { modes })
    }

    /// `n` equally weighted modes sharing transmission `eta`.
    pub fn uniform(n: usize, eta: f64) -> Result<Self, LossChainError> {
        if n == 0 {
            return Err(LossChainError::EmptyEnsemble);
        }
        let w = 1.0 / n as f64;
        Self::new(vec![SpatialMode { weight: w, eta }; n])
    }

    pub fn modes(&self) -> &[SpatialMode] {
        &self.modes
    }
}

/// Per-mode states after the squeezer, rebalancing and the mode's own loss.
pub fn ensemble_states(
    ensemble: &SpatialModeEnsemble,
    gain: f64,
) -> Result<Vec<GaussianTwoModeState>, LossChainError> {
    ensemble
        .modes
        .iter()
        .map(|m| Ok(quantum::balanced_squeezed_state(m.eta, gain)?))
        .collect()
}

/// Weight-averaged intensity-difference noise of the ensemble, in dB.
pub fn ensemble_noise(ensemble: &SpatialModeEnsemble, gain: f64) -> Result<f64, LossChainError> {
    let states = ensemble_states(ensemble, gain)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (m, s) in ensemble.modes.iter().zip(&states) {
        num += m.weight * intensity_difference_noise(s, ENGINE_FLUX)?;
        den += m.weight;
    }
    Ok(noise_ratio_to_db(num / den)?)
}
