//! Uniform Yee grid and its time step.

use serde::{Deserialize, Serialize};

use super::geometry::DeviceStack;
use super::FdtdError;
use crate::materials::C_NM_PER_S;

/// User-facing grid settings; the cell counts follow from the stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Cell size along x, nm.
    pub dx: f64,
    /// Cell size along y, nm.
    pub dy: f64,
    /// Cell size along z, nm.
    pub dz: f64,
    /// Fraction of the 3D Courant limit used for `dt`.
    pub courant_factor: f64,
    /// CPML thickness on each z side, cells.
    pub pml_cells: usize,
    /// Peak real coordinate stretch of the CPML.
    pub pml_kappa_max: f64,
    /// Homogeneous substrate between the lower PML and the first layer, nm.
    pub substrate_gap_nm: f64,
    /// Homogeneous superstrate between the top layer and the upper PML, nm.
    pub superstrate_gap_nm: f64,
    /// Permit `courant_factor >= 1`. Only useful for exercising the
    /// instability diagnostics.
    pub allow_unstable: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            dx: 5.0,
            dy: 5.0,
            dz: 5.0,
            courant_factor: 0.99,
            pml_cells: 10,
            pml_kappa_max: DEFAULT_PML_KAPPA,
            substrate_gap_nm: 200.0,
            superstrate_gap_nm: 200.0,
            allow_unstable: false,
        }
    }
}

impl GridSpec {
    pub fn uniform(d: f64) -> Self {
        Self {
            dx: d,
            dy: d,
            dz: d,
            ..Self::default()
        }
    }

    /// Cells in the lower and upper homogeneous gaps.
    pub fn gap_cells(&self) -> (usize, usize) {
        let cells = |nm: f64| ((nm / self.dz).ceil() as usize).max(6);
        (cells(self.substrate_gap_nm), cells(self.superstrate_gap_nm))
    }
}

/// Default peak real stretch of the CPML.
pub const DEFAULT_PML_KAPPA: f64 = 15.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationGrid {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub courant_factor: f64,
    /// Time step, s.
    pub dt: f64,
    pub pml_cells: usize,
    pub pml_kappa: f64,
}

/// Largest stable time step (s) of the 3D Yee scheme for the given cell
/// sizes in nm.
pub fn dt_limit(dx: f64, dy: f64, dz: f64) -> f64 {
    1.0 / (C_NM_PER_S * (1.0 / (dx * dx) + 1.0 / (dy * dy) + 1.0 / (dz * dz)).sqrt())
}

impl SimulationGrid {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dx: f64,
        dy: f64,
        dz: f64,
        nx: usize,
        ny: usize,
        nz: usize,
        courant_factor: f64,
        pml_cells: usize,
        allow_unstable: bool,
    ) -> Result<Self, FdtdError> {
        for (name, d) in [("dx", dx), ("dy", dy), ("dz", dz)] {
            if !(d > 0.0 && d.is_finite()) {
                return Err(FdtdError::InvalidGrid(format!("{name} = {d} must be > 0")));
            }
        }
        if nx == 0 || ny == 0 || nz < 2 * pml_cells + 4 {
            return Err(FdtdError::InvalidGrid(format!(
                "extents {nx}x{ny}x{nz} too small for {pml_cells} PML cells per side"
            )));
        }
        if !(courant_factor > 0.0 && courant_factor.is_finite()) {
            return Err(FdtdError::InvalidGrid(format!(
                "courant_factor = {courant_factor} must be > 0"
            )));
        }
        if courant_factor >= 1.0 && !allow_unstable {
            return Err(FdtdError::InvalidGrid(format!(
                "courant_factor = {courant_factor} violates the CFL limit (must be < 1; set allow_unstable to force)"
            )));
        }
        Ok(Self {
            dx,
            dy,
            dz,
            nx,
            ny,
            nz,
            courant_factor,
            dt: courant_factor * dt_limit(dx, dy, dz),
            pml_cells,
            pml_kappa: DEFAULT_PML_KAPPA,
        })
    }

    /// Grid whose lateral extent is one period of `stack` and whose z extent
    /// holds the PMLs, gaps and layers.
    pub fn for_stack(spec: &GridSpec, stack: &DeviceStack) -> Result<Self, FdtdError> {
        let lateral = |d: f64, name: &str| -> Result<usize, FdtdError> {
            let n = (stack.pitch / d).round();
            if n < 1.0 || (n * d - stack.pitch).abs() > 1e-9 * stack.pitch {
                return Err(FdtdError::InvalidGrid(format!(
                    "{name} = {d} nm does not divide the pitch {} nm",
                    stack.pitch
                )));
            }
            Ok(n as usize)
        };
        let nx = lateral(spec.dx, "dx")?;
        let ny = lateral(spec.dy, "dy")?;
        let (below, above) = spec.gap_cells();
        let layers: usize = stack
            .layers
            .iter()
            .map(|l| super::geometry::layer_cells(l.thickness, spec.dz))
            .sum();
        let nz = 2 * spec.pml_cells + below + layers + above;
        Self::new(
            spec.dx,
            spec.dy,
            spec.dz,
            nx,
            ny,
            nz,
            spec.courant_factor,
            spec.pml_cells,
            spec.allow_unstable,
        )
        .and_then(|g| {
            if !(spec.pml_kappa_max >= 1.0 && spec.pml_kappa_max.is_finite()) {
                return Err(FdtdError::InvalidGrid(format!(
                    "pml_kappa_max = {} must be >= 1",
                    spec.pml_kappa_max
                )));
            }
            Ok(Self {
                pml_kappa: spec.pml_kappa_max,
                ..g
            })
        })
    }

    /// Same z extent and time step with a single lateral cell, for
    /// laterally uniform problems.
    pub fn laterally_uniform(&self) -> Self {
        Self {
            nx: 1,
            ny: 1,
            ..self.clone()
        }
    }

    pub fn plane_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    /// `c·dt` in nm.
    pub fn c_dt(&self) -> f64 {
        C_NM_PER_S * self.dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn courant_limit() {
        let g = SimulationGrid::new(5.0, 5.0, 5.0, 4, 4, 40, 0.99, 10, false).unwrap();
        let lim = 1.0 / (C_NM_PER_S * (3.0f64 / 25.0).sqrt());
        assert!((g.dt - 0.99 * lim).abs() < 1e-12 * lim);
        assert!(g.dt <= 0.99 / (C_NM_PER_S * (3.0 / 25.0f64).sqrt()) * (1.0 + 1e-15));

        let aniso = SimulationGrid::new(5.0, 10.0, 2.0, 4, 4, 40, 0.5, 10, false).unwrap();
        let lim = 1.0 / (C_NM_PER_S * (1.0 / 25.0 + 1.0 / 100.0 + 1.0 / 4.0f64).sqrt());
        assert!((aniso.dt - 0.5 * lim).abs() < 1e-12 * lim);
    }

    #[test]
    fn cfl_violation_requires_opt_in() {
        assert!(SimulationGrid::new(5.0, 5.0, 5.0, 4, 4, 40, 1.2, 10, false).is_err());
        assert!(SimulationGrid::new(5.0, 5.0, 5.0, 4, 4, 40, 1.2, 10, true).is_ok());
    }

    #[test]
    fn lateral_extent_spans_one_period() {
        let stack = DeviceStack::default_eot();
        let g = SimulationGrid::for_stack(&GridSpec::default(), &stack).unwrap();
        assert_eq!((g.nx, g.ny), (80, 80));
        assert_eq!(g.nx as f64 * g.dx, stack.pitch);
        let bad = GridSpec {
            dx: 7.0,
            ..GridSpec::default()
        };
        assert!(SimulationGrid::for_stack(&bad, &stack).is_err());
    }
}
