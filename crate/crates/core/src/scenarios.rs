//! Reproduction recipes that bind FDTD transmission to the noise model:
//! single-colour polarization sweeps, predicted squeezing against
//! polarization and the neutral-density reference curve.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::fdtd::run::wavelength_grid;
use crate::fdtd::{
    run_transmission, DeviceStack, FdtdError, MonitorSpec, PolarizationBasis, RunOptions,
    SimulationGrid, SourceSpec, TransmissionSpectrum,
};
use crate::io::content_hash;
use crate::loss_chain::{predicted_squeezing, LossChain, LossChainError};
use crate::quantum::{closed_form_noise, noise_ratio_to_db, QuantumError};

/// Wavelength of the squeezed probe, nm.
pub const PROBE_WAVELENGTH_NM: f64 = 795.0;

/// Loss-chain slot filled with the array transmission in
/// [`predict_squeezing_vs_polarization`].
pub const EOT_ELEMENT: &str = "eot";

/// Measured noise of the probe and conjugate through the array at its
/// 3%-transmission polarization, dB relative to shot noise (positive is
/// squeezing). The value is anti-squeezing and lies outside what the
/// loss model can produce.
pub const MEASURED_DB_AT_MIN_TRANSMISSION: f64 = -0.2;

/// Transmission of the array at the polarization of
/// [`MEASURED_DB_AT_MIN_TRANSMISSION`].
pub const MIN_TRANSMISSION_REFERENCE: f64 = 0.03;

/// Outcome of one sweep angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "detail")]
pub enum AngleStatus {
    Ok,
    /// The run hit its time cap before the field decayed.
    Provisional,
    /// Transmission above 1 from numerical overshoot; value kept as computed.
    Overshoot,
    Failed(String),
}

/// How the per-angle transmissions are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SweepMethod {
    /// Two runs (x and y polarized) combined linearly for every angle.
    #[default]
    Superposition,
    /// One run per angle.
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarizationSweep {
    /// Strictly increasing, in `[0, 180)`.
    pub angles_deg: Vec<f64>,
    pub wavelength_nm: f64,
    /// Transmission relative to vacuum, `NaN` where the angle failed.
    pub transmission: Vec<f64>,
    /// Transmission relative to the coated substrate.
    pub transmission_substrate: Vec<f64>,
    pub status: Vec<AngleStatus>,
    /// Hash of the FDTD inputs that produced the sweep.
    pub config_hash: String,
}

impl PolarizationSweep {
    /// Transmission at `angle_deg`, folded into `[0, 180)`.
    pub fn at(&self, angle_deg: f64) -> Option<f64> {
        let a = angle_deg.rem_euclid(180.0);
        self.angles_deg
            .iter()
            .position(|&x| (x - a).abs() < 1e-9)
            .map(|i| self.transmission[i])
    }

    /// `(angle, T)` of the largest transmission among successful angles.
    pub fn argmax(&self) -> Option<(f64, f64)> {
        self.ok_points().max_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn argmin(&self) -> Option<(f64, f64)> {
        self.ok_points().min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// `T_min / T_max` over the sweep.
    pub fn contrast(&self) -> Option<f64> {
        Some(self.argmin()?.1 / self.argmax()?.1)
    }

    /// Angle to transmission, for order-independent lookups.
    pub fn by_angle(&self) -> BTreeMap<String, f64> {
        self.angles_deg
            .iter()
            .zip(&self.transmission)
            .map(|(a, t)| (format!("{a}"), *t))
            .collect()
    }

    fn ok_points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.angles_deg
            .iter()
            .zip(&self.transmission)
            .zip(&self.status)
            .filter(|(_, s)| !matches!(s, AngleStatus::Failed(_)))
            .map(|((a, t), _)| (*a, *t))
    }
}

/// `0, step, 2·step, …` below 180°.
pub fn angle_grid(step_deg: f64) -> Vec<f64> {
    let n = (180.0 / step_deg - 1e-9).ceil() as usize;
    (0..n).map(|i| i as f64 * step_deg).collect()
}

fn check_angles(angles: &[f64]) -> Result<(), FdtdError> {
    if angles.is_empty() {
        return Err(FdtdError::InvalidSource("no sweep angles".into()));
    }
    for &a in angles {
        if !(0.0..180.0).contains(&a) {
            return Err(FdtdError::InvalidSource(format!("sweep angle {a} outside [0, 180)")));
        }
    }
    if angles.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FdtdError::InvalidSource("sweep angles must be strictly increasing".into()));
    }
    Ok(())
}

fn angle_status(spec: &TransmissionSpectrum, idx: usize) -> AngleStatus {
    if spec.provisional {
        AngleStatus::Provisional
    } else if spec.transmission[idx] > 1.0 {
        AngleStatus::Overshoot
    } else {
        AngleStatus::Ok
    }
}

/// Single-colour transmission against polarization.
///
/// `source` sets the pulse band; its polarization is ignored. Angles must
/// be strictly increasing within `[0, 180)`. With [`SweepMethod::Direct`]
/// a failed angle is recorded in its status and the sweep continues; with
/// superposition a failure of either basis run fails every angle.
pub fn sweep_polarization(
    stack: &DeviceStack,
    grid: &SimulationGrid,
    source: &SourceSpec,
    angles_deg: &[f64],
    wavelength_nm: f64,
    method: SweepMethod,
    opts: &RunOptions,
) -> Result<PolarizationSweep, FdtdError> {
    check_angles(angles_deg)?;
    let monitors = MonitorSpec {
        wavelengths_nm: vec![wavelength_nm],
        field_map_depth_nm: None,
    };
    let config_hash = content_hash(&(stack, grid, source, angles_deg, wavelength_nm, method, opts));
    let mut sweep = PolarizationSweep {
        angles_deg: angles_deg.to_vec(),
        wavelength_nm,
        transmission: vec![f64::NAN; angles_deg.len()],
        transmission_substrate: vec![f64::NAN; angles_deg.len()],
        status: Vec::with_capacity(angles_deg.len()),
        config_hash,
    };
    match method {
        SweepMethod::Superposition => {
            let basis = PolarizationBasis::compute(stack, grid, source, &monitors, opts)?;
            for (i, &a) in angles_deg.iter().enumerate() {
                let s = basis.spectrum(a);
                sweep.transmission[i] = s.transmission[0];
                sweep.transmission_substrate[i] = s.transmission_substrate[0];
                sweep.status.push(angle_status(&s, 0));
            }
        }
        SweepMethod::Direct => {
            // angles are independent; results are keyed by position
            for (i, &a) in angles_deg.iter().enumerate() {
                match run_transmission(stack, grid, &source.with_polarization(a), &monitors, opts) {
                    Ok(s) => {
                        sweep.transmission[i] = s.transmission[0];
                        sweep.transmission_substrate[i] = s.transmission_substrate[0];
                        sweep.status.push(angle_status(&s, 0));
                    }
                    Err(e) if e.is_config_error() => return Err(e),
                    Err(e) => sweep.status.push(AngleStatus::Failed(e.to_string())),
                }
            }
        }
    }
    Ok(sweep)
}

/// What the curve's x values measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveAxis {
    /// Normalized transmission of the element under test.
    Transmission,
    PolarizationDeg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingPoint {
    pub x: f64,
    /// Squeezing below shot noise, dB (positive is squeezed).
    pub squeezing_db: f64,
    /// Shot-noise reference, always 0 dB.
    pub shot_noise_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqueezingCurve {
    pub axis: CurveAxis,
    pub gain: f64,
    pub points: Vec<SqueezingPoint>,
    /// Hash of the inputs that produced the curve.
    pub config_hash: String,
}

impl SqueezingCurve {
    pub fn max_db(&self) -> f64 {
        self.points.iter().map(|p| p.squeezing_db).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Predicted squeezing at every successful sweep angle, with the sweep's
/// transmission placed in the chain's [`EOT_ELEMENT`] slot.
pub fn predict_squeezing_vs_polarization(
    sweep: &PolarizationSweep,
    chain: &LossChain,
    gain: f64,
) -> Result<SqueezingCurve, LossChainError> {
    let mut chain = chain.clone();
    let mut points = Vec::with_capacity(sweep.angles_deg.len());
    for ((&a, &t), status) in sweep.angles_deg.iter().zip(&sweep.transmission).zip(&sweep.status) {
        if matches!(status, AngleStatus::Failed(_)) {
            continue;
        }
        chain.set_eta(EOT_ELEMENT, t)?;
        points.push(SqueezingPoint {
            x: a,
            squeezing_db: predicted_squeezing(&chain, gain)?,
            shot_noise_db: 0.0,
        });
    }
    Ok(SqueezingCurve {
        axis: CurveAxis::PolarizationDeg,
        gain,
        config_hash: content_hash(&(&sweep.config_hash, chain.elements(), chain.normalization_set(), gain)),
        points,
    })
}

/// Squeezing of the loss model alone against symmetric transmission, the
/// reference for a variable neutral-density filter.
pub fn nd_comparison_curve(etas: &[f64], gain: f64) -> Result<SqueezingCurve, QuantumError> {
    let points = etas
        .iter()
        .map(|&eta| {
            Ok(SqueezingPoint {
                x: eta,
                squeezing_db: noise_ratio_to_db(closed_form_noise(eta, gain)?)?,
                shot_noise_db: 0.0,
            })
        })
        .collect::<Result<Vec<_>, QuantumError>>()?;
    Ok(SqueezingCurve {
        axis: CurveAxis::Transmission,
        gain,
        config_hash: content_hash(&(etas, gain)),
        points,
    })
}

/// Squeezing predicted by a loss chain as one element is swept over
/// `etas`, e.g. an ND filter on top of fixed vapor and detector losses.
pub fn chain_curve(chain: &LossChain, element: &str, etas: &[f64], gain: f64) -> Result<SqueezingCurve, LossChainError> {
    let mut chain = chain.clone();
    let mut points = Vec::with_capacity(etas.len());
    for &eta in etas {
        chain.set_eta(element, eta)?;
        points.push(SqueezingPoint {
            x: eta,
            squeezing_db: predicted_squeezing(&chain, gain)?,
            shot_noise_db: 0.0,
        });
    }
    Ok(SqueezingCurve {
        axis: CurveAxis::Transmission,
        gain,
        config_hash: content_hash(&(chain.elements(), chain.normalization_set(), element, etas, gain)),
        points,
    })
}

/// `0, step, …, 1` transmission axis.
pub fn transmission_axis(step: f64) -> Vec<f64> {
    let n = (1.0 / step).round() as usize;
    (0..=n).map(|i| (i as f64 * step).min(1.0)).collect()
}

/// Source band used for single-colour and near-infrared work: narrow
/// enough to leave the long-lived short-wavelength grating modes unexcited.
pub fn near_infrared_source() -> SourceSpec {
    SourceSpec::broadband(700.0, 900.0, 0.0)
}

/// Monitors for locating the near-infrared transmission peak.
pub fn near_infrared_monitors() -> MonitorSpec {
    MonitorSpec {
        wavelengths_nm: wavelength_grid(700.0, 900.0, 5.0, &[PROBE_WAVELENGTH_NM]),
        field_map_depth_nm: None,
    }
}
