//! Transmission, reflection and field-map runs.
//!
//! Every spectrum is a ratio against a vacuum run with the same z layout
//! and time step. The references are laterally uniform, so they run on a
//! single lateral cell; a uniform field on the periodic Yee grid evolves
//! identically there. A second, substrate-only reference gives spectra
//! relative to the coated substrate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::geometry::{build_geometry, DeviceStack, Geometry};
use super::grid::SimulationGrid;
use super::monitor::{FieldMap, PlaneDft};
use super::solver::Simulation;
use super::source::{SourceKind, SourceSpec};
use super::FdtdError;
use crate::materials::C_NM_PER_S;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunOptions {
    /// Hard cap on simulated time, fs. Runs stopped here are provisional.
    pub max_time_fs: f64,
    /// Never stop before this many steps (used to extend runs).
    pub min_steps: usize,
    /// Stop once grid energy falls below this fraction of its peak.
    pub decay_threshold: f64,
    /// Steps between energy checks.
    pub check_interval: usize,
    /// DFT samples per period of the shortest monitored wavelength.
    pub samples_per_period: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            max_time_fs: 300.0,
            min_steps: 0,
            decay_threshold: 1e-5,
            check_interval: 100,
            samples_per_period: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonitorSpec {
    pub wavelengths_nm: Vec<f64>,
    /// Record a field map this far below the film's bottom face, nm.
    pub field_map_depth_nm: Option<f64>,
}

impl Default for MonitorSpec {
    fn default() -> Self {
        Self {
            wavelengths_nm: wavelength_grid(400.0, 1000.0, 10.0, &[795.0]),
            field_map_depth_nm: None,
        }
    }
}

/// `lo, lo + step, …, hi` plus any `extra` points, sorted and deduplicated.
pub fn wavelength_grid(lo: f64, hi: f64, step: f64, extra: &[f64]) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut v: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).collect();
    v.extend_from_slice(extra);
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    v
}

impl MonitorSpec {
    fn validate(&self, stack: &DeviceStack, source: &SourceSpec) -> Result<(), FdtdError> {
        if self.wavelengths_nm.is_empty() {
            return Err(FdtdError::BadMonitor("no monitor wavelengths".into()));
        }
        for &l in &self.wavelengths_nm {
            if !source.covers(l) {
                let (lo, hi) = source.band();
                return Err(FdtdError::BadMonitor(format!(
                    "monitor wavelength {l} nm outside source band {lo}-{hi} nm"
                )));
            }
            stack.check_wavelength(l)?;
        }
        Ok(())
    }
}

/// Raw monitor data of one run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub transmission: PlaneDft,
    pub reflection: PlaneDft,
    pub map: Option<PlaneDft>,
    /// Incident field spectrum at the injection plane.
    pub incident: Vec<Complex64>,
    pub steps: usize,
    /// Grid energy decayed below the threshold before the time cap.
    pub converged: bool,
}

/// Runs `stack` on `grid` with the given source and records the monitors.
pub fn simulate(
    grid: &SimulationGrid,
    geometry: &Geometry,
    source: &SourceSpec,
    monitors: &MonitorSpec,
    opts: &RunOptions,
) -> Result<RunRecord, FdtdError> {
    let mut sim = Simulation::new(grid, geometry, Some(source))?;
    let layout = &geometry.layout;
    let wl = &monitors.wavelengths_nm;
    let (nx, ny) = (grid.nx, grid.ny);
    let mut t = PlaneDft::new(layout.transmission_monitor, nx, ny, wl, false);
    let mut r = PlaneDft::new(layout.reflection_monitor, nx, ny, wl, false);
    let mut map = match monitors.field_map_depth_nm {
        Some(depth) => Some(PlaneDft::new(layout.plane_below_film(depth, grid.dz)?, nx, ny, wl, true)),
        None => None,
    };
    let omegas: Vec<f64> = wl.iter().map(|&l| crate::materials::wavelength_to_omega(l)).collect();
    let mut incident = vec![Complex64::ZERO; wl.len()];

    let lambda_min = wl.iter().cloned().fold(f64::INFINITY, f64::min);
    let period_steps = lambda_min / C_NM_PER_S / grid.dt;
    let stride = ((period_steps / opts.samples_per_period.max(2) as f64).floor() as usize).max(1);
    let weight = stride as f64 * grid.dt;
    let max_steps = ((opts.max_time_fs * 1e-15 / grid.dt).ceil() as usize).max(opts.min_steps);
    let check = opts.check_interval.max(1);
    let t_end = sim.source_end_time();
    let cw = source.kind == SourceKind::ContinuousWave;

    let mut peak = 0.0f64;
    let mut peak_at_end: Option<f64> = None;
    let mut converged = false;
    while sim.steps() < max_steps {
        sim.step();
        let n = sim.steps();
        if n % stride == 0 {
            t.accumulate(&sim, weight);
            r.accumulate(&sim, weight);
            if let Some(m) = map.as_mut() {
                m.accumulate(&sim, weight);
            }
            let (einc, te) = (sim.incident_e(), sim.time_e());
            for (acc, w) in incident.iter_mut().zip(&omegas) {
                *acc += Complex64::from_polar(weight * einc, -w * te);
            }
        }
        if n % check == 0 {
            let u = sim.energy();
            let unstable = |detail: String| FdtdError::Instability {
                step: n,
                time_fs: sim.time_e() * 1e15,
                detail,
            };
            if !u.is_finite() {
                return Err(unstable("field energy is NaN/Inf".into()));
            }
            peak = peak.max(u);
            if sim.time_e() > t_end {
                let ref_peak = *peak_at_end.get_or_insert(peak);
                if u > 100.0 * ref_peak && !cw {
                    return Err(unstable(format!(
                        "energy grew {:.1e}x after the source ended",
                        u / ref_peak
                    )));
                }
                if !cw && n >= opts.min_steps && u <= opts.decay_threshold * peak {
                    converged = true;
                    break;
                }
            }
        }
    }
    Ok(RunRecord {
        transmission: t,
        reflection: r,
        map,
        incident,
        steps: sim.steps(),
        converged: converged || cw,
    })
}

/// Reference fluxes for normalizing spectra.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Normalization {
    pub wavelengths_nm: Vec<f64>,
    /// Downward flux of the incident wave alone.
    pub incident_flux: Vec<f64>,
    /// Downward flux into the substrate through the coated substrate alone.
    pub substrate_flux: Vec<f64>,
    /// Reflection seen in the vacuum reference (TFSF leakage).
    pub leakage: Vec<f64>,
    pub converged: bool,
}

impl Normalization {
    pub fn compute(
        stack: &DeviceStack,
        grid: &SimulationGrid,
        source: &SourceSpec,
        monitors: &MonitorSpec,
        opts: &RunOptions,
    ) -> Result<Self, FdtdError> {
        let g1 = grid.laterally_uniform();
        let flux_only = MonitorSpec {
            field_map_depth_nm: None,
            ..monitors.clone()
        };
        let src = source.with_polarization(0.0);
        let vac = simulate(&g1, &build_geometry(&stack.vacuum_reference(), &g1)?, &src, &flux_only, opts)?;
        let sub = simulate(&g1, &build_geometry(&stack.substrate_reference(), &g1)?, &src, &flux_only, opts)?;
        let incident_flux: Vec<f64> = vac.transmission.flux().iter().map(|f| -f).collect();
        let leakage = vac
            .reflection
            .flux()
            .iter()
            .zip(&incident_flux)
            .map(|(r, i)| r / i)
            .collect();
        Ok(Self {
            wavelengths_nm: monitors.wavelengths_nm.clone(),
            substrate_flux: sub.transmission.flux().iter().map(|f| -f).collect(),
            incident_flux,
            leakage,
            converged: vac.converged && sub.converged,
        })
    }

    /// Transmission of the coated substrate alone.
    pub fn substrate_transmission(&self) -> Vec<f64> {
        self.substrate_flux.iter().zip(&self.incident_flux).map(|(s, i)| s / i).collect()
    }
}

/// Power transmission and reflection per wavelength at one polarization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransmissionSpectrum {
    pub polarization_deg: f64,
    pub wavelengths_nm: Vec<f64>,
    /// Transmitted power over incident power.
    pub transmission: Vec<f64>,
    /// Reflected power over incident power.
    pub reflection: Vec<f64>,
    /// Transmitted power over that of the coated substrate alone.
    pub transmission_substrate: Vec<f64>,
    /// The structure run hit the time cap before its energy decayed.
    pub provisional: bool,
    /// Some transmission exceeds 1 (numerical overshoot).
    pub overshoot: bool,
    pub steps: usize,
}

impl TransmissionSpectrum {
    fn from_planes(
        norm: &Normalization,
        t: &PlaneDft,
        r: &PlaneDft,
        polarization_deg: f64,
        converged: bool,
        steps: usize,
    ) -> Self {
        let tf = t.flux();
        let rf = r.flux();
        let transmission: Vec<f64> = tf.iter().zip(&norm.incident_flux).map(|(f, i)| -f / i).collect();
        let reflection = rf.iter().zip(&norm.incident_flux).map(|(f, i)| f / i).collect();
        let transmission_substrate = tf.iter().zip(&norm.substrate_flux).map(|(f, s)| -f / s).collect();
        Self {
            polarization_deg,
            wavelengths_nm: norm.wavelengths_nm.clone(),
            overshoot: transmission.iter().any(|&v| v > 1.0),
            transmission,
            reflection,
            transmission_substrate,
            provisional: !converged,
            steps,
        }
    }

    /// Transmission at the monitor wavelength nearest `wavelength_nm`.
    pub fn at(&self, wavelength_nm: f64) -> f64 {
        self.transmission[nearest(&self.wavelengths_nm, wavelength_nm)]
    }

    /// `(wavelength, T)` of the largest transmission within `[lo, hi]` nm.
    pub fn peak_in(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        self.wavelengths_nm
            .iter()
            .zip(&self.transmission)
            .filter(|(l, _)| **l >= lo && **l <= hi)
            .map(|(l, t)| (*l, *t))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

fn nearest(v: &[f64], x: f64) -> usize {
    v.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

fn prepare(
    stack: &DeviceStack,
    grid: &SimulationGrid,
    source: &SourceSpec,
    monitors: &MonitorSpec,
) -> Result<Geometry, FdtdError> {
    source.validate()?;
    monitors.validate(stack, source)?;
    build_geometry(stack, grid)
}

/// Direct run at the source's polarization, normalized against vacuum and
/// against the coated substrate.
pub fn run_transmission(
    stack: &DeviceStack,
    grid: &SimulationGrid,
    source: &SourceSpec,
    monitors: &MonitorSpec,
    opts: &RunOptions,
) -> Result<TransmissionSpectrum, FdtdError> {
    let geom = prepare(stack, grid, source, monitors)?;
    let norm = Normalization::compute(stack, grid, source, monitors, opts)?;
    let rec = simulate(grid, &geom, source, monitors, opts)?;
    Ok(TransmissionSpectrum::from_planes(
        &norm,
        &rec.transmission,
        &rec.reflection,
        source.reduced_polarization(),
        rec.converged,
        rec.steps,
    ))
}

fn map_from_plane(
    plane: &PlaneDft,
    incident: &[Complex64],
    wavelength_nm: f64,
    polarization_deg: f64,
    geometry_z: f64,
    grid: &SimulationGrid,
) -> FieldMap {
    let w = nearest(&plane.wavelengths_nm, wavelength_nm);
    let n = plane.nx * plane.ny;
    let inc = incident[w];
    let slice = |v: &[Complex64]| v[w * n..(w + 1) * n].iter().map(|c| c / inc).collect();
    FieldMap {
        wavelength_nm: plane.wavelengths_nm[w],
        polarization_deg,
        z_nm: geometry_z,
        nx: plane.nx,
        ny: plane.ny,
        dx: grid.dx,
        dy: grid.dy,
        ex: slice(&plane.ex),
        ey: slice(&plane.ey),
        ez: slice(plane.ez.as_ref().expect("field-map monitor records Ez")),
    }
}

/// Direct field-map run at the source's polarization.
pub fn run_field_map(
    stack: &DeviceStack,
    grid: &SimulationGrid,
    source: &SourceSpec,
    wavelength_nm: f64,
    depth_below_film_nm: f64,
    opts: &RunOptions,
) -> Result<FieldMap, FdtdError> {
    let monitors = MonitorSpec {
        wavelengths_nm: vec![wavelength_nm],
        field_map_depth_nm: Some(depth_below_film_nm),
    };
    let geom = prepare(stack, grid, source, &monitors)?;
    let rec = simulate(grid, &geom, source, &monitors, opts)?;
    let k = geom.layout.plane_below_film(depth_below_film_nm, grid.dz)?;
    let z = geom.layout.z_relative_to_film(k, grid.dz);
    Ok(map_from_plane(
        rec.map.as_ref().unwrap(),
        &rec.incident,
        wavelength_nm,
        source.reduced_polarization(),
        z,
        grid,
    ))
}

/// x- and y-polarized runs from which any linear polarization follows by
/// superposition.
#[derive(Debug, Clone)]
pub struct PolarizationBasis {
    pub normalization: Normalization,
    pub x: RunRecord,
    pub y: RunRecord,
    grid: SimulationGrid,
    map_z_nm: Option<f64>,
}

impl PolarizationBasis {
    pub fn compute(
        stack: &DeviceStack,
        grid: &SimulationGrid,
        source: &SourceSpec,
        monitors: &MonitorSpec,
        opts: &RunOptions,
    ) -> Result<Self, FdtdError> {
        let geom = prepare(stack, grid, source, monitors)?;
        let normalization = Normalization::compute(stack, grid, source, monitors, opts)?;
        let x = simulate(grid, &geom, &source.with_polarization(0.0), monitors, opts)?;
        let y = simulate(grid, &geom, &source.with_polarization(90.0), monitors, opts)?;
        let map_z_nm = match monitors.field_map_depth_nm {
            Some(d) => Some(geom.layout.z_relative_to_film(geom.layout.plane_below_film(d, grid.dz)?, grid.dz)),
            None => None,
        };
        Ok(Self {
            normalization,
            x,
            y,
            grid: grid.clone(),
            map_z_nm,
        })
    }

    pub fn converged(&self) -> bool {
        self.x.converged && self.y.converged
    }

    pub fn spectrum(&self, polarization_deg: f64) -> TransmissionSpectrum {
        let th = polarization_deg.rem_euclid(180.0).to_radians();
        let (s, c) = th.sin_cos();
        let t = self.x.transmission.combine(c, &self.y.transmission, s);
        let r = self.x.reflection.combine(c, &self.y.reflection, s);
        TransmissionSpectrum::from_planes(
            &self.normalization,
            &t,
            &r,
            polarization_deg.rem_euclid(180.0),
            self.converged(),
            self.x.steps.max(self.y.steps),
        )
    }

    /// Field map at the recorded wavelength nearest `wavelength_nm`.
    pub fn field_map(&self, polarization_deg: f64, wavelength_nm: f64) -> Option<FieldMap> {
        let (mx, my) = (self.x.map.as_ref()?, self.y.map.as_ref()?);
        let th = polarization_deg.rem_euclid(180.0).to_radians();
        let (s, c) = th.sin_cos();
        Some(map_from_plane(
            &mx.combine(c, my, s),
            &self.x.incident,
            wavelength_nm,
            polarization_deg.rem_euclid(180.0),
            self.map_z_nm?,
            &self.grid,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdtd::analytic::planar_stack_tr;
    use crate::fdtd::grid::GridSpec;
    use crate::materials::MaterialModel;

    fn uniform_grid(stack: &DeviceStack, d: f64) -> SimulationGrid {
        SimulationGrid::for_stack(&GridSpec::uniform(d), stack).unwrap().laterally_uniform()
    }

    #[test]
    fn wavelength_grid_includes_extras() {
        let g = wavelength_grid(400.0, 1000.0, 10.0, &[795.0, 800.0]);
        assert_eq!(g.len(), 62);
        assert!(g.contains(&795.0) && g[0] == 400.0 && *g.last().unwrap() == 1000.0);
    }

    #[test]
    fn empty_grid_transmits_everything() {
        let stack = DeviceStack::slab(MaterialModel::vacuum(), MaterialModel::vacuum(), 50.0, MaterialModel::vacuum());
        let grid = uniform_grid(&stack, 10.0);
        let spec = run_transmission(&stack, &grid, &SourceSpec::default(), &MonitorSpec::default(), &RunOptions::default()).unwrap();
        for (l, t) in spec.wavelengths_nm.iter().zip(&spec.transmission) {
            assert!((t - 1.0).abs() < 0.01, "{l}: {t}");
        }
        assert!(spec.reflection.iter().all(|r| r.abs() < 1e-6));
        assert!(!spec.provisional);
    }

    #[test]
    fn dielectric_slab_matches_airy_formula() {
        let stack = DeviceStack::slab(MaterialModel::vacuum(), MaterialModel::constant_index("n2", 2.0), 100.0, MaterialModel::vacuum());
        let grid = uniform_grid(&stack, 5.0);
        let monitors = MonitorSpec {
            wavelengths_nm: wavelength_grid(500.0, 900.0, 20.0, &[]),
            field_map_depth_nm: None,
        };
        let spec = run_transmission(&stack, &grid, &SourceSpec::default(), &monitors, &RunOptions::default()).unwrap();
        for (i, &l) in spec.wavelengths_nm.iter().enumerate() {
            let (t, r) = planar_stack_tr(&stack, l).unwrap();
            assert!((spec.transmission[i] - t).abs() < 0.02 * t, "{l}: {} vs {t}", spec.transmission[i]);
            assert!((spec.reflection[i] - r).abs() < 0.02, "{l}: R {} vs {r}", spec.reflection[i]);
        }
    }

    #[test]
    fn dispersive_film_matches_transfer_matrix() {
        let stack = DeviceStack::slab(
            MaterialModel::fused_silica(),
            MaterialModel::silver(),
            30.0,
            MaterialModel::vacuum(),
        );
        let grid = uniform_grid(&stack, 2.0);
        let monitors = MonitorSpec {
            wavelengths_nm: wavelength_grid(450.0, 950.0, 50.0, &[]),
            field_map_depth_nm: None,
        };
        let spec = run_transmission(&stack, &grid, &SourceSpec::default(), &monitors, &RunOptions::default()).unwrap();
        for (i, &l) in spec.wavelengths_nm.iter().enumerate() {
            let (t, _) = planar_stack_tr(&stack, l).unwrap();
            assert!((spec.transmission[i] - t).abs() < 0.1 * t, "{l}: {} vs {t}", spec.transmission[i]);
        }
    }

    #[test]
    fn lossless_stack_conserves_energy() {
        let stack = DeviceStack::default_eot().with_film_material(MaterialModel::constant_index("n1.5", 1.5));
        let grid = SimulationGrid::for_stack(&GridSpec::uniform(10.0), &stack).unwrap();
        let src = SourceSpec::broadband(600.0, 1000.0, 30.0);
        let monitors = MonitorSpec {
            wavelengths_nm: wavelength_grid(600.0, 1000.0, 50.0, &[]),
            field_map_depth_nm: None,
        };
        let s = run_transmission(&stack, &grid, &src, &monitors, &RunOptions::default()).unwrap();
        for i in 0..s.wavelengths_nm.len() {
            let sum = s.transmission[i] + s.reflection[i];
            assert!((sum - 1.0).abs() < 0.02, "{}: T+R = {sum}", s.wavelengths_nm[i]);
        }
    }

    #[test]
    fn polarization_is_periodic_and_superposes() {
        let mut stack = DeviceStack::default_eot();
        stack.layers.remove(0);
        let grid = SimulationGrid::for_stack(&GridSpec::uniform(20.0), &stack).unwrap();
        let src = SourceSpec::broadband(600.0, 1000.0, 0.0);
        let monitors = MonitorSpec {
            wavelengths_nm: wavelength_grid(600.0, 1000.0, 100.0, &[]),
            field_map_depth_nm: Some(10.0),
        };
        let opts = RunOptions::default();
        let basis = PolarizationBasis::compute(&stack, &grid, &src, &monitors, &opts).unwrap();
        let a = basis.spectrum(35.0);
        let b = basis.spectrum(215.0);
        for (x, y) in a.transmission.iter().zip(&b.transmission) {
            assert!((x - y).abs() <= 1e-6 * x.abs().max(1e-12));
        }
        let direct = run_transmission(&stack, &grid, &src.with_polarization(35.0), &monitors, &opts).unwrap();
        for (x, y) in a.transmission.iter().zip(&direct.transmission) {
            assert!((x - y).abs() <= 1e-6 * y.abs().max(1e-9), "{x} vs {y}");
        }
        let m0 = basis.field_map(0.0, 800.0).unwrap();
        let m180 = basis.field_map(180.0, 800.0).unwrap();
        assert!((m0.correlation(&m180) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn default_scenario_stays_stable_for_50000_steps() {
        // default grid, Courant factor, stack and source; the run is forced
        // well past the decay point so late-time CPML growth would show up
        let stack = DeviceStack::default_eot();
        let grid = SimulationGrid::for_stack(&GridSpec::default(), &stack).unwrap();
        let monitors = MonitorSpec {
            wavelengths_nm: vec![795.0],
            field_map_depth_nm: None,
        };
        let opts = RunOptions {
            min_steps: 50_000,
            max_time_fs: 0.0,
            ..RunOptions::default()
        };
        let s = run_transmission(&stack, &grid, &SourceSpec::default(), &monitors, &opts).unwrap();
        assert!(s.steps >= 50_000, "{} steps", s.steps);
        assert!(s.transmission.iter().chain(&s.reflection).all(|v| v.is_finite()));
        assert!(s.transmission[0] > 0.0 && s.transmission[0] < 1.0, "{}", s.transmission[0]);
    }

    #[test]
    fn monitors_outside_band_rejected() {
        let stack = DeviceStack::default_eot();
        let grid = SimulationGrid::for_stack(&GridSpec::uniform(20.0), &stack);
        let monitors = MonitorSpec {
            wavelengths_nm: vec![1200.0],
            field_map_depth_nm: None,
        };
        let grid = grid.unwrap();
        let err = run_transmission(&stack, &grid, &SourceSpec::default(), &monitors, &RunOptions::default()).unwrap_err();
        assert!(matches!(err, FdtdError::BadMonitor(_)));
    }
}
