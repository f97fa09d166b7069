//! Dispersive permittivity models and grating anomaly positions.
//!
//! Sign convention: fields vary as `exp(+iωt)`, so absorbing media have
//! `Im ε ≤ 0`. Pole terms are
//!
//! ```text
//! Drude:   −f·ωp² / (ω² − iγω)
//! Lorentz:  f·ω0² / (ω0² − ω² + iγω)
//! ```
//!
//! Both forms map directly onto the auxiliary-differential-equation updates
//! in [`crate::fdtd`], which is why every material is expressed as a pole set
//! rather than a lookup table.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light in nm/s.
pub const C_NM_PER_S: f64 = 2.997_924_58e17;

/// Tabulated silver optical constants (wavelength nm, n, k), used to fit
/// [`MaterialModel::silver`].
pub const AG_TABLE_CSV: &str = include_str!("../data/ag_johnson_christy.csv");
/// Golden evaluation of the committed silver fit on a 5 nm grid.
pub const AG_FIT_CSV: &str = include_str!("../data/ag_drude_lorentz_fit.csv");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("{material}: wavelength {wavelength} nm outside valid range {lo}-{hi} nm")]
    OutOfRange {
        material: String,
        wavelength: f64,
        lo: f64,
        hi: f64,
    },
    #[error("{material}: pole damping must be finite and >= 0 (got {damping})")]
    NegativeDamping { material: String, damping: f64 },
    #[error("{material}: invalid parameter: {what}")]
    Invalid { material: String, what: String },
    #[error("invalid lattice anomaly: {0}")]
    InvalidAnomaly(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoleKind {
    Drude,
    Lorentz,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pole {
    pub kind: PoleKind,
    /// Plasma frequency (Drude) or resonance frequency (Lorentz), rad/s.
    pub frequency: f64,
    /// Damping rate, rad/s.
    pub damping: f64,
    /// Dimensionless oscillator strength.
    pub strength: f64,
}

impl Pole {
    /// Contribution of this pole to ε at angular frequency `omega`.
    pub fn susceptibility(&self, omega: f64) -> Complex64 {
        let i = Complex64::i();
        let w2 = self.frequency * self.frequency;
        match self.kind {
            PoleKind::Drude => -self.strength * w2 / (omega * omega - i * self.damping * omega),
            PoleKind::Lorentz => self.strength * w2 / (w2 - omega * omega + i * self.damping * omega),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialModel {
    pub name: String,
    pub eps_inf: f64,
    #[serde(default)]
    pub poles: Vec<Pole>,
    /// Wavelength interval (nm) over which the model may be evaluated.
    pub valid_range: (f64, f64),
}

impl MaterialModel {
    pub fn new(
        name: impl Into<String>,
        eps_inf: f64,
        poles: Vec<Pole>,
        valid_range: (f64, f64),
    ) -> Result<Self, MaterialError> {
        let m = Self {
            name: name.into(),
            eps_inf,
            poles,
            valid_range,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        let invalid = |what: &str| MaterialError::Invalid {
            material: self.name.clone(),
            what: what.to_string(),
        };
        if !(self.eps_inf.is_finite() && self.eps_inf > 0.0) {
            return Err(invalid("eps_inf must be positive"));
        }
        let (lo, hi) = self.valid_range;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(invalid("valid_range must satisfy 0 < lo < hi"));
        }
        for p in &self.poles {
            if !(p.damping.is_finite() && p.damping >= 0.0) {
                return Err(MaterialError::NegativeDamping {
                    material: self.name.clone(),
                    damping: p.damping,
                });
            }
            if !(p.frequency.is_finite() && p.frequency >= 0.0) {
                return Err(invalid("pole frequency must be >= 0"));
            }
            if !(p.strength.is_finite() && p.strength >= 0.0) {
                return Err(invalid("pole strength must be >= 0"));
            }
        }
        Ok(())
    }

    /// Non-dispersive, lossless material of refractive index `n`.
    pub fn constant_index(name: impl Into<String>, n: f64) -> Self {
        Self {
            name: name.into(),
            eps_inf: n * n,
            poles: Vec::new(),
            valid_range: (1.0, 1e6),
        }
    }

    pub fn vacuum() -> Self {
        Self::constant_index("vacuum", 1.0)
    }

    /// Fused silica at n = 1.45 (the Malitson Sellmeier fit gives 1.4533 at
    /// 795 nm; see [`MaterialModel::fused_silica_sellmeier`]).
    pub fn fused_silica() -> Self {
        Self::constant_index("fused_silica", 1.45)
    }

    /// Borosilicate crown glass at n = 1.515.
    pub fn borosilicate() -> Self {
        Self::constant_index("borosilicate", 1.515)
    }

    /// Indium tin oxide as a lossless n = 1.9 layer.
    pub fn ito() -> Self {
        Self::constant_index("ito", 1.9)
    }

    /// Material from Sellmeier terms `B λ² / (λ² − C)` with `C` in µm².
    ///
    /// Each term is a lossless Lorentz pole at `ω0 = 2πc/√C`, so the model
    /// runs through the same dispersive FDTD path as the metal.
    pub fn sellmeier(
        name: impl Into<String>,
        terms: &[(f64, f64)],
        valid_range: (f64, f64),
    ) -> Result<Self, MaterialError> {
        let poles = terms
            .iter()
            .map(|&(b, c_um2)| Pole {
                kind: PoleKind::Lorentz,
                frequency: 2.0 * std::f64::consts::PI * C_NM_PER_S / (c_um2.sqrt() * 1e3),
                damping: 0.0,
                strength: b,
            })
            .collect();
        Self::new(name, 1.0, poles, valid_range)
    }

    /// Malitson (1965) fused silica, 210-3710 nm.
    pub fn fused_silica_sellmeier() -> Self {
        Self::sellmeier(
            "fused_silica_sellmeier",
            &[
                (0.696_166_3, 0.068_404_3f64.powi(2)),
                (0.407_942_6, 0.116_241_4f64.powi(2)),
                (0.897_479_4, 9.896_161f64.powi(2)),
            ],
            (210.0, 3710.0),
        )
        .unwrap()
    }

    /// Drude plus two Lorentz poles fitted to tabulated silver optical
    /// constants over 295-1100 nm (`data/fit_ag_drude_lorentz.py`).
    pub fn silver() -> Self {
        Self {
            name: "silver".into(),
            eps_inf: 2.226_847_50,
            poles: vec![
                Pole {
                    kind: PoleKind::Drude,
                    frequency: 1.388_666_13e16,
                    damping: 3.594_537_59e13,
                    strength: 1.0,
                },
                Pole {
                    kind: PoleKind::Lorentz,
                    frequency: 6.259_675_08e15,
                    damping: 4.153_547_55e14,
                    strength: 0.156_265_102,
                },
                Pole {
                    kind: PoleKind::Lorentz,
                    frequency: 7.373_284_15e15,
                    damping: 7.596_337_24e13,
                    strength: 0.969_945_629,
                },
            ],
            valid_range: (300.0, 1000.0),
        }
    }

    /// Looks up a built-in material by name.
    pub fn builtin(name: &str) -> Option<Self> {
        Some(match name {
            "vacuum" | "air" => Self::vacuum(),
            "silver" | "ag" => Self::silver(),
            "fused_silica" => Self::fused_silica(),
            "fused_silica_sellmeier" => Self::fused_silica_sellmeier(),
            "borosilicate" => Self::borosilicate(),
            "ito" => Self::ito(),
            _ => return None,
        })
    }

    pub fn is_dispersive(&self) -> bool {
        !self.poles.is_empty()
    }

    /// Permittivity at free-space wavelength `wavelength_nm`.
    pub fn permittivity(&self, wavelength_nm: f64) -> Result<Complex64, MaterialError> {
        let (lo, hi) = self.valid_range;
        if !(wavelength_nm >= lo && wavelength_nm <= hi) {
            return Err(MaterialError::OutOfRange {
                material: self.name.clone(),
                wavelength: wavelength_nm,
                lo,
                hi,
            });
        }
        Ok(self.permittivity_at_omega(wavelength_to_omega(wavelength_nm)))
    }

    /// Permittivity at angular frequency `omega` (rad/s), without range checks.
    pub fn permittivity_at_omega(&self, omega: f64) -> Complex64 {
        self.poles
            .iter()
            .fold(Complex64::new(self.eps_inf, 0.0), |acc, p| acc + p.susceptibility(omega))
    }

    /// Complex refractive index `n − iκ` at `wavelength_nm`.
    pub fn refractive_index(&self, wavelength_nm: f64) -> Result<Complex64, MaterialError> {
        // principal root: Re n ≥ 0, and Im n ≤ 0 follows from Im ε ≤ 0
        Ok(self.permittivity(wavelength_nm)?.sqrt())
    }
}

pub fn wavelength_to_omega(wavelength_nm: f64) -> f64 {
    2.0 * std::f64::consts::PI * C_NM_PER_S / wavelength_nm
}

pub fn omega_to_wavelength(omega: f64) -> f64 {
    2.0 * std::f64::consts::PI * C_NM_PER_S / omega
}

/// Diffraction order of a square lattice that grazes the interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeAnomaly {
    pub pitch: f64,
    pub order: (i32, i32),
    pub refractive_index: f64,
}

impl LatticeAnomaly {
    pub fn new(pitch: f64, order: (i32, i32), refractive_index: f64) -> Result<Self, MaterialError> {
        if order == (0, 0) {
            return Err(MaterialError::InvalidAnomaly("order (0,0) never grazes".into()));
        }
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(MaterialError::InvalidAnomaly(format!("pitch {pitch} must be > 0")));
        }
        if !(refractive_index >= 1.0 && refractive_index.is_finite()) {
            return Err(MaterialError::InvalidAnomaly(format!(
                "index {refractive_index} must be >= 1"
            )));
        }
        Ok(Self {
            pitch,
            order,
            refractive_index,
        })
    }
}

/// Normal-incidence Wood-Rayleigh wavelength `p·n / √(i² + j²)` in nm.
pub fn wood_anomaly_wavelength(a: &LatticeAnomaly) -> f64 {
    let (i, j) = a.order;
    a.pitch * a.refractive_index / f64::from(i * i + j * j).sqrt()
}

/// Parses a three-column CSV with one header row.
pub fn parse_table(csv: &str) -> Vec<[f64; 3]> {
    csv.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut it = l.split(',').map(|v| v.trim().parse::<f64>().expect("numeric table"));
            [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()]
        })
        .collect()
}
