//! Two-mode Gaussian states of the probe/conjugate pair.
//!
//! Quadratures are ordered `(x₁, p₁, x₂, p₂)` with `x = a + a†` and
//! `p = −i(a − a†)`, so the vacuum has covariance equal to the identity
//! (vacuum variance = 1). Under this convention the uncertainty principle
//! reads `cov + iΩ ⪰ 0`.
//!
//! Means are stored per unit seed amplitude: a probe seeded with a coherent
//! amplitude `α = 1` has `x̄₁ = 2`. Every transformation here is linear and
//! homogeneous in the mean, so a real seed of `N` photons simply scales all
//! means by `√N`. [`intensity_difference_noise`] applies that scaling.

use nalgebra::{Matrix4, SMatrix, SymmetricEigen, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest seed photon flux accepted by [`intensity_difference_noise`].
///
/// The linearized treatment drops terms of relative order `G / N̄` against
/// the mean-field terms; at 100 photons per measurement window and the
/// gains used here that is below the 0.1 dB measurement resolution.
pub const MIN_LINEARIZED_FLUX: f64 = 100.0;

/// Tolerance on `cov + iΩ` eigenvalues used by [`GaussianTwoModeState::is_physical`].
pub const PHYSICALITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("amplifier gain must satisfy G >= 1, got {0}")]
    InvalidGain(f64),
    #[error("transmission must lie in [0, 1], got {0}")]
    InvalidTransmission(f64),
    #[error("seed photon flux must be positive, got {0}")]
    NonPositiveFlux(f64),
    #[error("seed photon flux {flux} is below the linearization threshold {min}")]
    FluxBelowLinearization { flux: f64, min: f64 },
    #[error("state carries no mean field; intensity noise is undefined")]
    NoMeanField,
    #[error("noise ratio must be positive and finite, got {0}")]
    InvalidNoiseRatio(f64),
    #[error("covariance matrix is not symmetric")]
    AsymmetricCovariance,
    #[error("covariance violates the uncertainty principle (min eigenvalue {0:.3e})")]
    Unphysical(f64),
}

/// Which of the two beams an element acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Probe,
    Conjugate,
    Both,
}

impl Arm {
    /// True if an element placed on `self` attenuates light travelling in `mode`.
    pub fn touches(self, mode: Arm) -> bool {
        self == Arm::Both || mode == Arm::Both || self == mode
    }
}

/// Mean vector and covariance matrix of the probe/conjugate mode pair.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianTwoModeState {
    mean: Vector4<f64>,
    cov: Matrix4<f64>,
}

impl GaussianTwoModeState {
    /// Both modes in vacuum: zero mean, identity covariance.
    pub fn vacuum() -> Self {
        Self {
            mean: Vector4::zeros(),
            cov: Matrix4::identity(),
        }
    }

    /// Coherent states with complex amplitudes `alpha1` (probe) and `alpha2` (conjugate).
    pub fn coherent(alpha1: Complex64, alpha2: Complex64) -> Self {
        Self {
            mean: Vector4::new(2.0 * alpha1.re, 2.0 * alpha1.im, 2.0 * alpha2.re, 2.0 * alpha2.im),
            cov: Matrix4::identity(),
        }
    }

    /// Vacuum conjugate with a unit-amplitude coherent probe seed.
    pub fn seeded_probe() -> Self {
        Self::coherent(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    /// Builds a state from raw parts, checking symmetry and the uncertainty principle.
    pub fn from_parts(mean: Vector4<f64>, cov: Matrix4<f64>) -> Result<Self, QuantumError> {
        let state = Self { mean, cov };
        if !state.is_symmetric(1e-12) {
            return Err(QuantumError::AsymmetricCovariance);
        }
        let min = state.min_uncertainty_eigenvalue();
        if min < -PHYSICALITY_TOLERANCE {
            return Err(QuantumError::Unphysical(min));
        }
        Ok(state)
    }

    pub fn mean(&self) -> &Vector4<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix4<f64> {
        &self.cov
    }

    /// Symmetry to within `rel_tol` relative to the largest covariance entry.
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let scale = self.cov.amax().max(1.0);
        (self.cov - self.cov.transpose()).amax() <= rel_tol * scale
    }

    /// Smallest eigenvalue of the Hermitian matrix `cov + iΩ`.
    ///
    /// Computed through the real 8×8 embedding `[[A, −B], [B, A]]`, whose
    /// spectrum is that of `A + iB` with every eigenvalue doubled.
    pub fn min_uncertainty_eigenvalue(&self) -> f64 {
        let omega = symplectic_form();
        let mut big = SMatrix::<f64, 8, 8>::zeros();
        for r in 0..4 {
            for c in 0..4 {
                let a = 0.5 * (self.cov[(r, c)] + self.cov[(c, r)]);
                big[(r, c)] = a;
                big[(r + 4, c + 4)] = a;
                big[(r, c + 4)] = -omega[(r, c)];
                big[(r + 4, c)] = omega[(r, c)];
            }
        }
        SymmetricEigen::new(big).eigenvalues.min()
    }

    /// Whether `cov + iΩ ⪰ 0` within [`PHYSICALITY_TOLERANCE`].
    pub fn is_physical(&self) -> bool {
        self.min_uncertainty_eigenvalue() >= -PHYSICALITY_TOLERANCE
    }

    /// Mean photon number of `mode` per unit seed photon (`|α|² = (x̄² + p̄²)/4`).
    pub fn mean_photons(&self, mode: Arm) -> f64 {
        let probe = 0.25 * (self.mean[0].powi(2) + self.mean[1].powi(2));
        let conj = 0.25 * (self.mean[2].powi(2) + self.mean[3].powi(2));
        match mode {
            Arm::Probe => probe,
            Arm::Conjugate => conj,
            Arm::Both => probe + conj,
        }
    }
}

/// Two-mode symplectic form `Ω = J ⊕ J` with `J = [[0, 1], [−1, 0]]`.
pub fn symplectic_form() -> Matrix4<f64> {
    let mut omega = Matrix4::zeros();
    omega[(0, 1)] = 1.0;
    omega[(1, 0)] = -1.0;
    omega[(2, 3)] = 1.0;
    omega[(3, 2)] = -1.0;
    omega
}

/// Intensity gain of the four-wave-mixing amplifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezerParams {
    gain: f64,
}

impl SqueezerParams {
    pub fn new(gain: f64) -> Result<Self, QuantumError> {
        if !gain.is_finite() || gain < 1.0 {
            return Err(QuantumError::InvalidGain(gain));
        }
        Ok(Self { gain })
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// Squeezing parameter `r` with `cosh² r = G`.
    pub fn squeeze_parameter(&self) -> f64 {
        self.gain.sqrt().acosh()
    }

    /// The symplectic matrix of `a₁ → √G a₁ + √(G−1) a₂†` (and 1 ↔ 2).
    pub fn symplectic_matrix(&self) -> Matrix4<f64> {
        let c = self.gain.sqrt();
        let s = (self.gain - 1.0).sqrt();
        Matrix4::new(
            c, 0.0, s, 0.0, //
            0.0, c, 0.0, -s, //
            s, 0.0, c, 0.0, //
            0.0, -s, 0.0, c,
        )
    }
}

/// Beamsplitter with power transmission `eta` on one or both arms; the
/// reflected port admits vacuum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamsplitterLoss {
    eta: f64,
    arm: Arm,
}

impl BeamsplitterLoss {
    pub fn new(eta: f64, arm: Arm) -> Result<Self, QuantumError> {
        check_transmission(eta)?;
        Ok(Self { eta, arm })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn arm(&self) -> Arm {
        self.arm
    }
}

pub(crate) fn check_transmission(eta: f64) -> Result<(), QuantumError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(QuantumError::InvalidTransmission(eta));
    }
    Ok(())
}

/// Applies the two-mode squeezer `S`: `mean → S mean`, `cov → S cov Sᵀ`.
pub fn apply_two_mode_squeezer(
    state: &GaussianTwoModeState,
    params: &SqueezerParams,
) -> GaussianTwoModeState {
    if params.gain == 1.0 {
        return state.clone();
    }
    let s = params.symplectic_matrix();
    let cov = s * state.cov * s.transpose();
    GaussianTwoModeState {
        mean: s * state.mean,
        cov: 0.5 * (cov + cov.transpose()),
    }
}

/// Mixes vacuum into the lossy arm(s): `cov → L cov L + (1 − η)` on the
/// affected diagonal, `mean → √η mean` there.
pub fn apply_loss(state: &GaussianTwoModeState, loss: &BeamsplitterLoss) -> GaussianTwoModeState {
    if loss.eta == 1.0 {
        return state.clone();
    }
    let t = loss.eta.sqrt();
    let mut scale = [1.0; 4];
    let mut added = [0.0; 4];
    for (mode, range) in [(Arm::Probe, 0..2), (Arm::Conjugate, 2..4)] {
        if loss.arm.touches(mode) {
            for q in range {
                scale[q] = t;
                added[q] = 1.0 - loss.eta;
            }
        }
    }
    let mut cov = state.cov;
    let mut mean = state.mean;
    for r in 0..4 {
        mean[r] *= scale[r];
        for c in 0..4 {
            cov[(r, c)] *= scale[r] * scale[c];
        }
        cov[(r, r)] += added[r];
    }
    // full loss leaves exact vacuum on that mode
    for (mode, range) in [(Arm::Probe, 0..2usize), (Arm::Conjugate, 2..4usize)] {
        if loss.eta == 0.0 && loss.arm.touches(mode) {
            for q in range {
                mean[q] = 0.0;
                for c in 0..4 {
                    cov[(q, c)] = if q == c { 1.0 } else { 0.0 };
                    cov[(c, q)] = cov[(q, c)];
                }
            }
        }
    }
    GaussianTwoModeState { mean, cov }
}

/// Attenuates the brighter arm until both carry the same mean photon number,
/// the neutral-density rebalancing done before a balanced detection.
///
/// Returns the rebalanced state and the loss that was applied (if any).
pub fn balance_arms(state: &GaussianTwoModeState) -> (GaussianTwoModeState, Option<BeamsplitterLoss>) {
    let n1 = state.mean_photons(Arm::Probe);
    let n2 = state.mean_photons(Arm::Conjugate);
    if n1 == n2 || (n1 == 0.0 && n2 == 0.0) {
        return (state.clone(), None);
    }
    let loss = if n1 > n2 {
        BeamsplitterLoss { eta: n2 / n1, arm: Arm::Probe }
    } else {
        BeamsplitterLoss { eta: n1 / n2, arm: Arm::Conjugate }
    };
    (apply_loss(state, &loss), Some(loss))
}

/// Linearized intensity-difference noise `Δ²(N₁ − N₂) / (N̄₁ + N̄₂)`.
///
/// With `δN_k ≈ |α_k| δX_k` along each mode's mean-field direction, the
/// variance is `wᵀ cov w` with `w = ½ √flux (x̄₁, p̄₁, −x̄₂, −p̄₂)`. The ratio
/// is flux independent. A state with no mean field on either mode is only
/// accepted when it is vacuum, whose ratio is 1 (the η → 0 limit).
pub fn intensity_difference_noise(
    state: &GaussianTwoModeState,
    seed_photon_flux: f64,
) -> Result<f64, QuantumError> {
    if !(seed_photon_flux > 0.0) || !seed_photon_flux.is_finite() {
        return Err(QuantumError::NonPositiveFlux(seed_photon_flux));
    }
    if seed_photon_flux < MIN_LINEARIZED_FLUX {
        return Err(QuantumError::FluxBelowLinearization {
            flux: seed_photon_flux,
            min: MIN_LINEARIZED_FLUX,
        });
    }
    let amp = seed_photon_flux.sqrt();
    let m = &state.mean;
    let w = Vector4::new(m[0], m[1], -m[2], -m[3]) * (0.5 * amp);
    let shot = w.norm_squared();
    if shot == 0.0 {
        if (state.cov - Matrix4::identity()).amax() <= 1e-12 {
            return Ok(1.0);
        }
        return Err(QuantumError::NoMeanField);
    }
    let variance = (w.transpose() * state.cov * w)[(0, 0)];
    Ok(variance / shot)
}

/// Relative intensity-difference noise of a balanced squeezer followed by
/// symmetric loss: `1 − η + η/G`.
pub fn closed_form_noise(eta: f64, gain: f64) -> Result<f64, QuantumError> {
    check_transmission(eta)?;
    SqueezerParams::new(gain)?;
    Ok(1.0 - eta + eta / gain)
}

/// Squeezing in dB: `−10 log₁₀(ratio)`. Positive values are below shot noise.
pub fn noise_ratio_to_db(ratio: f64) -> Result<f64, QuantumError> {
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(QuantumError::InvalidNoiseRatio(ratio));
    }
    Ok(-10.0 * ratio.log10())
}

/// Inverse of [`noise_ratio_to_db`].
pub fn db_to_noise_ratio(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

/// Seeded probe → squeezer → rebalancing → symmetric loss `eta`.
///
/// This is the covariance-level counterpart of [`closed_form_noise`].
pub fn balanced_squeezed_state(eta: f64, gain: f64) -> Result<GaussianTwoModeState, QuantumError> {
    let squeezer = SqueezerParams::new(gain)?;
    let loss = BeamsplitterLoss::new(eta, Arm::Both)?;
    let squeezed = apply_two_mode_squeezer(&GaussianTwoModeState::seeded_probe(), &squeezer);
    let (balanced, _) = balance_arms(&squeezed);
    Ok(apply_loss(&balanced, &loss))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const FLUX: f64 = 1e6;

    #[test]
    fn vacuum_is_identity() {
        let v = GaussianTwoModeState::vacuum();
        assert_eq!(*v.cov(), Matrix4::identity());
        assert_eq!(*v.mean(), Vector4::zeros());
        assert!(v.is_physical());
        assert_abs_diff_eq!(v.min_uncertainty_eigenvalue(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gain_one_is_identity() {
        let p = SqueezerParams::new(1.0).unwrap();
        assert_eq!(p.squeeze_parameter(), 0.0);
        let s = GaussianTwoModeState::seeded_probe();
        assert_eq!(apply_two_mode_squeezer(&s, &p), s);
    }

    #[test]
    fn rejects_deamplification() {
        assert_eq!(SqueezerParams::new(0.5), Err(QuantumError::InvalidGain(0.5)));
        assert!(SqueezerParams::new(f64::NAN).is_err());
    }

    #[test]
    fn squeeze_parameter_matches_gain() {
        for g in [1.0, 1.5, 2.0, 4.0, 8.0] {
            let r = SqueezerParams::new(g).unwrap().squeeze_parameter();
            assert_abs_diff_eq!(r.cosh().powi(2), g, epsilon = 1e-12);
        }
    }

    #[test]
    fn seed_gain_on_both_modes() {
        let g = 4.0;
        let out = apply_two_mode_squeezer(
            &GaussianTwoModeState::seeded_probe(),
            &SqueezerParams::new(g).unwrap(),
        );
        assert_abs_diff_eq!(out.mean_photons(Arm::Probe), g, epsilon = 1e-12);
        assert_abs_diff_eq!(out.mean_photons(Arm::Conjugate), g - 1.0, epsilon = 1e-12);
    }

    #[test]
    fn g2_vacuum_eigenvalues_match_explicit_construction() {
        // oracle: build S from r directly and form S Sᵀ by hand
        let r = 2f64.sqrt().acosh();
        let (c, s) = (r.cosh(), r.sinh());
        let mut sm = [[0.0f64; 4]; 4];
        sm[0][0] = c;
        sm[1][1] = c;
        sm[2][2] = c;
        sm[3][3] = c;
        sm[0][2] = s;
        sm[2][0] = s;
        sm[1][3] = -s;
        sm[3][1] = -s;
        let mut oracle = [[0.0f64; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                oracle[i][j] = (0..4).map(|k| sm[i][k] * sm[j][k]).sum();
            }
        }
        let out = apply_two_mode_squeezer(
            &GaussianTwoModeState::vacuum(),
            &SqueezerParams::new(2.0).unwrap(),
        );
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(out.cov()[(i, j)], oracle[i][j], epsilon = 1e-12);
            }
        }
        let mut eig: Vec<f64> = SymmetricEigen::new(*out.cov()).eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        let (lo, hi) = ((-2.0 * r).exp(), (2.0 * r).exp());
        for (got, want) in eig.iter().zip([lo, lo, hi, hi]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert!(out.is_physical());
    }

    #[test]
    fn unit_transmission_is_identity() {
        let s = balanced_squeezed_state(0.7, 4.0).unwrap();
        let out = apply_loss(&s, &BeamsplitterLoss::new(1.0, Arm::Both).unwrap());
        assert_eq!(out, s);
    }

    #[test]
    fn full_loss_gives_vacuum() {
        let s = balanced_squeezed_state(1.0, 4.0).unwrap();
        let out = apply_loss(&s, &BeamsplitterLoss::new(0.0, Arm::Both).unwrap());
        assert_eq!(out, GaussianTwoModeState::vacuum());
        assert_eq!(intensity_difference_noise(&out, FLUX).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_transmission() {
        assert!(BeamsplitterLoss::new(1.2, Arm::Probe).is_err());
        assert!(BeamsplitterLoss::new(-0.1, Arm::Both).is_err());
        assert!(closed_form_noise(1.01, 4.0).is_err());
        assert!(closed_form_noise(0.5, 0.9).is_err());
    }

    #[test]
    fn coherent_pair_is_shot_noise_limited() {
        let s = GaussianTwoModeState::coherent(Complex64::new(1.0, 0.3), Complex64::new(-0.2, 0.8));
        assert_abs_diff_eq!(intensity_difference_noise(&s, FLUX).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn unbalanced_squeezer_gives_inverse_two_g_minus_one() {
        let g = 4.0;
        let out = apply_two_mode_squeezer(
            &GaussianTwoModeState::seeded_probe(),
            &SqueezerParams::new(g).unwrap(),
        );
        let ratio = intensity_difference_noise(&out, FLUX).unwrap();
        assert_abs_diff_eq!(ratio, 1.0 / (2.0 * g - 1.0), epsilon = 1e-12);
    }

    #[test]
    fn balanced_ideal_squeezer_gives_inverse_gain() {
        let s = balanced_squeezed_state(1.0, 4.0).unwrap();
        assert_abs_diff_eq!(intensity_difference_noise(&s, FLUX).unwrap(), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(noise_ratio_to_db(0.25).unwrap(), 6.0206, epsilon = 1e-4);
    }

    #[test]
    fn vapor_and_detector_losses() {
        // 0.94 * 0.70 = 0.658; 1 - 0.658 + 0.658/4 = 0.5065
        let s = balanced_squeezed_state(0.94 * 0.70, 4.0).unwrap();
        let ratio = intensity_difference_noise(&s, FLUX).unwrap();
        assert_abs_diff_eq!(ratio, 0.5065, epsilon = 1e-12);
    }

    #[test]
    fn eot_probe_loss_with_conjugate_rebalancing() {
        let g = 4.0;
        let squeezed = apply_two_mode_squeezer(
            &GaussianTwoModeState::seeded_probe(),
            &SqueezerParams::new(g).unwrap(),
        );
        let eot = apply_loss(&squeezed, &BeamsplitterLoss::new(0.36, Arm::Probe).unwrap());
        let (balanced, nd) = balance_arms(&eot);
        let nd = nd.unwrap();
        assert_eq!(nd.arm(), Arm::Conjugate);
        // conjugate ND transmission equals the symmetric-loss η of the closed form
        assert_abs_diff_eq!(nd.eta(), 0.36 * g / (g - 1.0), epsilon = 1e-12);
        let engine = intensity_difference_noise(&balanced, FLUX).unwrap();
        let closed = closed_form_noise(nd.eta(), g).unwrap();
        assert_abs_diff_eq!(engine, closed, epsilon = 1e-9);
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(closed_form_noise(0.0, 4.0).unwrap(), 1.0);
        assert_eq!(closed_form_noise(1.0, 4.0).unwrap(), 0.25);
        let r = closed_form_noise(0.34, 4.0).unwrap();
        assert_abs_diff_eq!(r, 0.745, epsilon = 1e-12);
        assert_abs_diff_eq!(noise_ratio_to_db(r).unwrap(), 1.28, epsilon = 0.005);
    }

    #[test]
    fn db_conversions() {
        assert_eq!(noise_ratio_to_db(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(noise_ratio_to_db(0.25).unwrap(), 6.0206, epsilon = 1e-4);
        assert_abs_diff_eq!(noise_ratio_to_db(10f64.powf(0.02)).unwrap(), -0.2, epsilon = 1e-12);
        assert!(noise_ratio_to_db(0.0).is_err());
        assert!(noise_ratio_to_db(-1.0).is_err());
    }

    #[test]
    fn flux_validation() {
        let s = GaussianTwoModeState::seeded_probe();
        assert!(matches!(
            intensity_difference_noise(&s, 0.0),
            Err(QuantumError::NonPositiveFlux(_))
        ));
        assert!(matches!(
            intensity_difference_noise(&s, 10.0),
            Err(QuantumError::FluxBelowLinearization { .. })
        ));
    }

    #[test]
    fn squeezed_vacuum_without_seed_has_no_mean_field() {
        let s = apply_two_mode_squeezer(&GaussianTwoModeState::vacuum(), &SqueezerParams::new(2.0).unwrap());
        assert_eq!(intensity_difference_noise(&s, FLUX), Err(QuantumError::NoMeanField));
    }

    #[test]
    fn from_parts_rejects_unphysical() {
        let cov = Matrix4::identity() * 0.5;
        assert!(matches!(
            GaussianTwoModeState::from_parts(Vector4::zeros(), cov),
            Err(QuantumError::Unphysical(_))
        ));
        let mut asym = Matrix4::identity();
        asym[(0, 1)] = 0.3;
        assert_eq!(
            GaussianTwoModeState::from_parts(Vector4::zeros(), asym),
            Err(QuantumError::AsymmetricCovariance)
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn any_operation_sequence_stays_physical(
                g in 1.0f64..10.0,
                e1 in 0.0f64..=1.0,
                e2 in 0.0f64..=1.0,
                balance in any::<bool>(),
            ) {
                let mut s = apply_two_mode_squeezer(
                    &GaussianTwoModeState::seeded_probe(),
                    &SqueezerParams::new(g).unwrap(),
                );
                prop_assert!(s.is_physical());
                s = apply_loss(&s, &BeamsplitterLoss::new(e1, Arm::Probe).unwrap());
                prop_assert!(s.is_physical());
                if balance {
                    s = balance_arms(&s).0;
                    prop_assert!(s.is_physical());
                }
                s = apply_loss(&s, &BeamsplitterLoss::new(e2, Arm::Conjugate).unwrap());
                prop_assert!(s.is_physical());
                prop_assert!(s.is_symmetric(1e-12));
            }

            #[test]
            fn noise_is_flux_independent(eta in 0.0f64..=1.0, g in 1.0f64..10.0) {
                let s = balanced_squeezed_state(eta, g).unwrap();
                let reference = intensity_difference_noise(&s, 1e3).unwrap();
                for flux in [1e4, 1e5, 1e6, 1e7, 1e8, 1e9] {
                    prop_assert!((intensity_difference_noise(&s, flux).unwrap() - reference).abs() < 1e-9);
                }
            }

            #[test]
            fn db_round_trip(ratio in 1e-3f64..1e3) {
                let back = db_to_noise_ratio(noise_ratio_to_db(ratio).unwrap());
                prop_assert!((back - ratio).abs() <= 1e-12 * ratio);
            }

            #[test]
            fn closed_form_bounds(eta in 0.0f64..=1.0, g in 1.0f64..20.0) {
                let r = closed_form_noise(eta, g).unwrap();
                prop_assert!(r >= 1.0 / g - 1e-15 && r <= 1.0 + 1e-15);
            }

            #[test]
            fn closed_form_decreasing_in_eta(a in 0.0f64..1.0, b in 0.0f64..1.0, g in 1.01f64..20.0) {
                prop_assume!((a - b).abs() > 1e-9);
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                prop_assert!(closed_form_noise(hi, g).unwrap() < closed_form_noise(lo, g).unwrap());
                prop_assert!((closed_form_noise(lo, 1.0).unwrap() - 1.0).abs() < 1e-15);
            }
        }
    }
}
