//! 3D finite-difference time-domain solver for periodic hole-array films.
//!
//! Normal incidence only: x and y are periodic over one lattice period, z is
//! terminated by CPML. Dispersive layers use auxiliary differential
//! equations (see [`crate::materials`] for the pole forms). A plane wave is
//! injected downward through a total-field/scattered-field plane in the
//! superstrate; transmission is measured in the substrate, reflection above
//! the injection plane.

pub mod analytic;
pub mod geometry;
pub mod grid;
pub mod monitor;
pub mod run;
pub mod solver;
pub mod source;

use thiserror::Error;

use crate::materials::MaterialError;

pub use analytic::planar_stack_tr;
pub use geometry::{build_geometry, DeviceStack, Geometry, Layer, TriangleHole, ZLayout};
pub use grid::{dt_limit, GridSpec, SimulationGrid};
pub use monitor::{FieldMap, PlaneDft};
pub use run::{
    run_field_map, run_transmission, MonitorSpec, Normalization, PolarizationBasis, RunOptions,
    RunRecord, TransmissionSpectrum,
};
pub use solver::Simulation;
pub use source::{SourceKind, SourceSpec, Waveform};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FdtdError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid source: {0}")]
    InvalidSource(String),
    #[error("invalid monitor: {0}")]
    BadMonitor(String),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("numerical instability at step {step} (t = {time_fs:.3} fs): {detail}")]
    Instability { step: usize, time_fs: f64, detail: String },
}

impl FdtdError {
    /// Errors caused by the inputs rather than by the time stepping.
    pub fn is_config_error(&self) -> bool {
        !matches!(self, FdtdError::Instability { .. })
    }
}
