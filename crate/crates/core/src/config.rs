//! Run configuration: one TOML file with sections for materials, the
//! device stack, grid, source, monitors, run control, the polarization
//! sweep, field maps, the quantum scenario and output.
//!
//! Every section is optional and falls back to the default device (80 nm
//! silver film with 200/288 nm triangular holes at 400 nm pitch on 20 nm
//! ITO over fused silica). Unknown keys are rejected. Materials are
//! referenced by name: built-ins (`vacuum`, `air`, `silver`, `ag`,
//! `fused_silica`, `fused_silica_sellmeier`, `borosilicate`, `ito`) or
//! entries of `[[materials]]`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fdtd::run::wavelength_grid;
use crate::fdtd::{
    DeviceStack, FdtdError, GridSpec, Layer, MonitorSpec, RunOptions, SimulationGrid, SourceSpec,
    TriangleHole,
};
use crate::io::sha256_hex;
use crate::loss_chain::{LossChain, LossChainError, LossElement};
use crate::materials::{MaterialError, MaterialModel, Pole};
use crate::quantum::Arm;
use crate::scenarios::{SweepMethod, PROBE_WAVELENGTH_NM};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Fdtd(#[from] FdtdError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    LossChain(#[from] LossChainError),
}

/// A material defined in the config file: either a constant `index` or
/// `eps_inf` with Drude/Lorentz `poles`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialDef {
    pub name: String,
    pub index: Option<f64>,
    pub eps_inf: Option<f64>,
    #[serde(default)]
    pub poles: Vec<Pole>,
    pub valid_range_nm: Option<(f64, f64)>,
}

impl MaterialDef {
    fn resolve(&self) -> Result<MaterialModel, ConfigError> {
        match (self.index, self.eps_inf) {
            (Some(n), None) if self.poles.is_empty() => {
                if !(n.is_finite() && n >= 1.0) {
                    return Err(ConfigError::Invalid(format!("material `{}`: index must be >= 1", self.name)));
                }
                let mut m = MaterialModel::constant_index(self.name.clone(), n);
                if let Some(r) = self.valid_range_nm {
                    m.valid_range = r;
                }
                m.validate()?;
                Ok(m)
            }
            (None, Some(eps_inf)) => Ok(MaterialModel::new(
                self.name.clone(),
                eps_inf,
                self.poles.clone(),
                self.valid_range_nm.ok_or_else(|| {
                    ConfigError::Invalid(format!("material `{}`: valid_range_nm is required with poles", self.name))
                })?,
            )?),
            _ => Err(ConfigError::Invalid(format!(
                "material `{}`: give either `index` or `eps_inf` (+ `poles`)",
                self.name
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub name: String,
    pub material: String,
    pub thickness_nm: f64,
    #[serde(default)]
    pub holed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleConfig {
    pub base_nm: f64,
    pub leg_nm: f64,
    #[serde(default)]
    pub orientation_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StackConfig {
    pub substrate: String,
    pub superstrate: String,
    pub pitch_nm: f64,
    /// Thin layers from the substrate upward.
    pub layers: Vec<LayerConfig>,
    /// Omit for an unpatterned stack.
    pub hole: Option<HoleConfig>,
}

impl Default for StackConfig {
    fn default() -> Self {
        Self {
            substrate: "fused_silica".into(),
            superstrate: "vacuum".into(),
            pitch_nm: 400.0,
            layers: vec![
                LayerConfig {
                    name: "ito".into(),
                    material: "ito".into(),
                    thickness_nm: 20.0,
                    holed: false,
                },
                LayerConfig {
                    name: "film".into(),
                    material: "silver".into(),
                    thickness_nm: 80.0,
                    holed: true,
                },
            ],
            hole: Some(HoleConfig {
                base_nm: 200.0,
                leg_nm: 288.0,
                orientation_deg: 0.0,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonitorConfig {
    pub start_nm: f64,
    pub stop_nm: f64,
    pub step_nm: f64,
    /// Additional wavelengths, nm.
    pub extra_nm: Vec<f64>,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            start_nm: 400.0,
            stop_nm: 1000.0,
            step_nm: 10.0,
            extra_nm: vec![PROBE_WAVELENGTH_NM],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolarizationConfig {
    pub wavelength_nm: f64,
    pub step_deg: f64,
    /// Explicit angles; overrides `step_deg`.
    pub angles_deg: Option<Vec<f64>>,
    pub method: SweepMethod,
    /// Pulse band for the sweep, nm.
    pub band_nm: (f64, f64),
}

impl Default for PolarizationConfig {
    fn default() -> Self {
        Self {
            wavelength_nm: PROBE_WAVELENGTH_NM,
            step_deg: 5.0,
            angles_deg: None,
            method: SweepMethod::Superposition,
            band_nm: (700.0, 900.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldMapConfig {
    /// Polarizations to map, degrees.
    pub polarizations_deg: Vec<f64>,
    /// Map wavelength; when absent, the transmission peak within
    /// `search_nm` at the first polarization.
    pub wavelength_nm: Option<f64>,
    pub search_nm: (f64, f64),
    pub depth_below_film_nm: f64,
    /// Side of the square window written to the binary maps, nm.
    pub window_nm: f64,
    /// Pulse band, nm.
    pub band_nm: (f64, f64),
    pub step_nm: f64,
}

impl Default for FieldMapConfig {
    fn default() -> Self {
        Self {
            polarizations_deg: vec![60.0, 150.0],
            wavelength_nm: None,
            search_nm: (750.0, 870.0),
            depth_below_film_nm: 10.0,
            window_nm: 200.0,
            band_nm: (700.0, 900.0),
            step_nm: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementConfig {
    pub name: String,
    pub eta: f64,
    #[serde(default = "both_arms")]
    pub arm: Arm,
}

fn both_arms() -> Arm {
    Arm::Both
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantumConfig {
    /// Amplifier gain `G`.
    pub gain: f64,
    /// Step of the transmission axis for the swept element.
    pub eta_step: f64,
    pub chain: Vec<ElementConfig>,
    /// Elements divided out of the transmission axis. Empty by default,
    /// so the chain curve includes the vapor and detector losses.
    pub normalization: Vec<String>,
    /// Element swept along the axis; appended with `η = 1` if absent.
    pub sweep_element: String,
    /// Arm(s) the swept element acts on when it is appended.
    pub sweep_arm: Arm,
    /// Optional `angle_deg,T` table to convert into squeezing against
    /// polarization.
    pub polarization_csv: Option<String>,
}

impl Default for QuantumConfig {
    fn default() -> Self {
        Self {
            gain: 4.0,
            eta_step: 0.05,
            chain: vec![
                ElementConfig {
                    name: "vapor".into(),
                    eta: 0.70,
                    arm: Arm::Both,
                },
                ElementConfig {
                    name: "detector".into(),
                    eta: 0.94,
                    arm: Arm::Both,
                },
            ],
            normalization: vec![],
            sweep_element: "nd".into(),
            sweep_arm: Arm::Both,
            polarization_csv: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub materials: Vec<MaterialDef>,
    pub stack: StackConfig,
    pub grid: GridSpec,
    pub source: SourceSpec,
    pub monitors: MonitorConfig,
    pub run: RunOptions,
    pub polarization: PolarizationConfig,
    pub field_map: FieldMapConfig,
    pub quantum: QuantumConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// The configuration with every default filled in.
    pub fn to_resolved_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }

    /// SHA-256 of the resolved configuration.
    pub fn hash(&self) -> String {
        sha256_hex(self.to_resolved_toml().as_bytes())
    }

    /// Checks every section that can be checked without running anything.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let stack = self.stack()?;
        let grid = self.grid()?;
        crate::fdtd::build_geometry(&stack, &grid)?;
        self.source.validate()?;
        for &l in &self.monitors()?.wavelengths_nm {
            if !self.source.covers(l) {
                let (lo, hi) = self.source.band();
                return Err(ConfigError::Invalid(format!(
                    "monitor wavelength {l} nm outside the source band {lo}-{hi} nm"
                )));
            }
            stack.check_wavelength(l)?;
        }
        let p = &self.polarization;
        let band = SourceSpec::broadband(p.band_nm.0, p.band_nm.1, 0.0);
        band.validate()?;
        if !band.covers(p.wavelength_nm) {
            return Err(ConfigError::Invalid(format!(
                "polarization wavelength {} nm outside its band {:?}",
                p.wavelength_nm, p.band_nm
            )));
        }
        if !(p.step_deg > 0.0 && p.step_deg < 180.0) {
            return Err(ConfigError::Invalid("polarization.step_deg must lie in (0, 180)".into()));
        }
        let f = &self.field_map;
        SourceSpec::broadband(f.band_nm.0, f.band_nm.1, 0.0).validate()?;
        if f.polarizations_deg.is_empty() {
            return Err(ConfigError::Invalid("field_map.polarizations_deg is empty".into()));
        }
        if !(f.window_nm > 0.0 && f.depth_below_film_nm >= 0.0 && f.step_nm > 0.0) {
            return Err(ConfigError::Invalid(
                "field_map window_nm and step_nm must be > 0 and depth_below_film_nm >= 0".into(),
            ));
        }
        if !(self.quantum.eta_step > 0.0 && self.quantum.eta_step <= 1.0) {
            return Err(ConfigError::Invalid("quantum.eta_step must lie in (0, 1]".into()));
        }
        if !(self.quantum.gain >= 1.0 && self.quantum.gain.is_finite()) {
            return Err(ConfigError::Invalid("quantum.gain must be >= 1".into()));
        }
        self.chain()?;
        Ok(())
    }

    fn material(&self, name: &str) -> Result<MaterialModel, ConfigError> {
        if let Some(def) = self.materials.iter().find(|m| m.name == name) {
            return def.resolve();
        }
        MaterialModel::builtin(name).ok_or_else(|| ConfigError::Invalid(format!("unknown material `{name}`")))
    }

    pub fn stack(&self) -> Result<DeviceStack, ConfigError> {
        let s = &self.stack;
        let layers = s
            .layers
            .iter()
            .map(|l| {
                Ok(Layer {
                    name: l.name.clone(),
                    material: self.material(&l.material)?,
                    thickness: l.thickness_nm,
                    holed: l.holed,
                })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let stack = DeviceStack {
            substrate: self.material(&s.substrate)?,
            layers,
            superstrate: self.material(&s.superstrate)?,
            hole: s.hole.map(|h| TriangleHole {
                base: h.base_nm,
                leg: h.leg_nm,
                orientation_deg: h.orientation_deg,
            }),
            pitch: s.pitch_nm,
        };
        stack.validate()?;
        Ok(stack)
    }

    pub fn grid(&self) -> Result<SimulationGrid, ConfigError> {
        Ok(SimulationGrid::for_stack(&self.grid, &self.stack()?)?)
    }

    pub fn monitors(&self) -> Result<MonitorSpec, ConfigError> {
        let m = &self.monitors;
        if !(m.step_nm > 0.0 && m.stop_nm >= m.start_nm && m.start_nm > 0.0) {
            return Err(ConfigError::Invalid("monitors need 0 < start_nm <= stop_nm and step_nm > 0".into()));
        }
        Ok(MonitorSpec {
            wavelengths_nm: wavelength_grid(m.start_nm, m.stop_nm, m.step_nm, &m.extra_nm),
            field_map_depth_nm: None,
        })
    }

    /// The loss chain with the swept element appended if needed.
    pub fn chain(&self) -> Result<LossChain, ConfigError> {
        let q = &self.quantum;
        let mut elements = q
            .chain
            .iter()
            .map(|e| LossElement::new(e.name.clone(), e.eta, e.arm))
            .collect::<Result<Vec<_>, _>>()?;
        if !elements.iter().any(|e| e.name == q.sweep_element) {
            elements.push(LossElement::new(q.sweep_element.clone(), 1.0, q.sweep_arm)?);
        }
        Ok(LossChain::new(elements, q.normalization.iter().cloned())?)
    }
}
