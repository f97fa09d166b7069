//! Layered device stacks with a triangular hole lattice, and their
//! rasterization onto the Yee grid.
//!
//! Cell `k` spans `z ∈ [(k − ½)dz, (k + ½)dz)`. Tangential E components sit
//! at the cell centre in z; `Ez` sits on the upper face of its cell and
//! takes that cell's material. Laterally, cell `(i, j)` is centred at
//! `((i + ½)dx, (j + ½)dy)`, and each E component is sampled at its own
//! Yee position.

use serde::{Deserialize, Serialize};

use super::grid::SimulationGrid;
use super::FdtdError;
use crate::materials::MaterialModel;

/// Isosceles triangle hole. With `orientation_deg = 0` the base lies
/// along x, so 0° polarization is parallel to the base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriangleHole {
    /// Base length, nm.
    pub base: f64,
    /// Length of each of the two equal legs, nm.
    pub leg: f64,
    /// In-plane rotation about the unit-cell centre, degrees.
    #[serde(default)]
    pub orientation_deg: f64,
}

impl TriangleHole {
    pub fn new(base: f64, leg: f64) -> Self {
        Self {
            base,
            leg,
            orientation_deg: 0.0,
        }
    }

    pub fn height(&self) -> f64 {
        (self.leg * self.leg - self.base * self.base / 4.0).sqrt()
    }

    pub fn area(&self) -> f64 {
        0.5 * self.base * self.height()
    }

    fn validate(&self, pitch: f64) -> Result<(), FdtdError> {
        if !(self.base > 0.0 && self.leg > self.base / 2.0) {
            return Err(FdtdError::InvalidGeometry(format!(
                "triangle with base {} nm and legs {} nm is degenerate (need leg > base/2)",
                self.base, self.leg
            )));
        }
        if self.base > pitch {
            return Err(FdtdError::InvalidGeometry(format!(
                "triangle base {} nm exceeds pitch {pitch} nm",
                self.base
            )));
        }
        if self.height() > pitch {
            return Err(FdtdError::InvalidGeometry(format!(
                "triangle height {:.3} nm exceeds pitch {pitch} nm",
                self.height()
            )));
        }
        Ok(())
    }

    /// Whether `(x, y)` lies in the hole of a lattice with period `pitch`,
    /// the triangle's bounding box being centred in the unit cell.
    pub fn contains(&self, x: f64, y: f64, pitch: f64) -> bool {
        let (s, c) = self.orientation_deg.to_radians().sin_cos();
        let h = self.height();
        let half = pitch / 2.0;
        for sx in [-1.0, 0.0, 1.0] {
            for sy in [-1.0, 0.0, 1.0] {
                let px = x - half + sx * pitch;
                let py = y - half + sy * pitch;
                let u = c * px + s * py;
                let v = -s * px + c * py;
                if v >= -h / 2.0 && v <= h / 2.0 && u.abs() <= self.base / 2.0 * (h / 2.0 - v) / h {
                    return true;
                }
            }
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub name: String,
    pub material: MaterialModel,
    /// Thickness, nm.
    pub thickness: f64,
    /// Whether the hole lattice is cut through this layer.
    pub holed: bool,
}

/// Substrate, thin layers bottom-to-top, superstrate. The substrate and
/// superstrate are semi-infinite (they run into the PMLs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceStack {
    pub substrate: MaterialModel,
    pub layers: Vec<Layer>,
    pub superstrate: MaterialModel,
    pub hole: Option<TriangleHole>,
    /// Square-lattice period, nm.
    pub pitch: f64,
}

/// Number of z cells a layer of `thickness` nm occupies.
pub fn layer_cells(thickness: f64, dz: f64) -> usize {
    (thickness / dz).round() as usize
}

impl DeviceStack {
    /// 80 nm silver film with 200/288 nm triangular holes on a 400 nm
    /// square lattice, on 20 nm ITO over fused silica, in air.
    pub fn default_eot() -> Self {
        Self {
            substrate: MaterialModel::fused_silica(),
            layers: vec![
                Layer {
                    name: "ito".into(),
                    material: MaterialModel::ito(),
                    thickness: 20.0,
                    holed: false,
                },
                Layer {
                    name: "film".into(),
                    material: MaterialModel::silver(),
                    thickness: 80.0,
                    holed: true,
                },
            ],
            superstrate: MaterialModel::vacuum(),
            hole: Some(TriangleHole::new(200.0, 288.0)),
            pitch: 400.0,
        }
    }

    /// A single layer between two half-spaces, no holes.
    pub fn slab(substrate: MaterialModel, layer: MaterialModel, thickness: f64, superstrate: MaterialModel) -> Self {
        Self {
            substrate,
            layers: vec![Layer {
                name: "slab".into(),
                material: layer,
                thickness,
                holed: false,
            }],
            superstrate,
            hole: None,
            pitch: 400.0,
        }
    }

    pub fn validate(&self) -> Result<(), FdtdError> {
        if !(self.pitch > 0.0 && self.pitch.is_finite()) {
            return Err(FdtdError::InvalidGeometry(format!("pitch {} nm must be > 0", self.pitch)));
        }
        if let Some(h) = &self.hole {
            h.validate(self.pitch)?;
        }
        for l in &self.layers {
            if !(l.thickness > 0.0 && l.thickness.is_finite()) {
                return Err(FdtdError::InvalidGeometry(format!(
                    "layer `{}` thickness {} nm must be > 0",
                    l.name, l.thickness
                )));
            }
        }
        for m in self.materials() {
            m.validate()?;
        }
        Ok(())
    }

    fn materials(&self) -> impl Iterator<Item = &MaterialModel> {
        std::iter::once(&self.substrate)
            .chain(self.layers.iter().map(|l| &l.material))
            .chain(std::iter::once(&self.superstrate))
    }

    /// Index of the layer the field-map depth is measured from: the first
    /// holed layer, else the topmost layer.
    pub fn film_index(&self) -> Option<usize> {
        self.layers
            .iter()
            .position(|l| l.holed)
            .or_else(|| self.layers.len().checked_sub(1))
    }

    pub fn without_holes(&self) -> Self {
        Self {
            hole: None,
            ..self.clone()
        }
    }

    /// Same stack with every holed layer made of `material`.
    pub fn with_film_material(&self, material: MaterialModel) -> Self {
        let mut s = self.clone();
        for l in s.layers.iter_mut().filter(|l| l.holed) {
            l.material = material.clone();
        }
        s
    }

    /// Same z layout, everything vacuum.
    pub fn vacuum_reference(&self) -> Self {
        let mut s = self.clone();
        s.substrate = MaterialModel::vacuum();
        s.superstrate = MaterialModel::vacuum();
        for l in &mut s.layers {
            l.material = MaterialModel::vacuum();
        }
        s.hole = None;
        s
    }

    /// Same z layout with holed layers replaced by the superstrate: the
    /// coated substrate alone.
    pub fn substrate_reference(&self) -> Self {
        let mut s = self.with_film_material(self.superstrate.clone());
        s.hole = None;
        s
    }

    /// Every wavelength (nm) must lie in every material's valid range.
    pub fn check_wavelength(&self, wavelength_nm: f64) -> Result<(), FdtdError> {
        for m in self.materials() {
            m.permittivity(wavelength_nm)?;
        }
        Ok(())
    }
}

/// z indices of the stack features on the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZLayout {
    pub nz: usize,
    pub pml_cells: usize,
    /// Half-open cell range of each layer, bottom to top.
    pub layers: Vec<(usize, usize)>,
    /// First cell of the reference film (see [`DeviceStack::film_index`]).
    pub film_bottom: usize,
    /// Plane of the total-field/scattered-field boundary: cells `<= tfsf`
    /// hold total fields.
    pub tfsf: usize,
    pub transmission_monitor: usize,
    pub reflection_monitor: usize,
}

impl ZLayout {
    /// z (nm) of plane `k` relative to the bottom face of the reference film.
    pub fn z_relative_to_film(&self, k: usize, dz: f64) -> f64 {
        (k as f64 - (self.film_bottom as f64 - 0.5)) * dz
    }

    /// Tangential-E plane nearest `depth_nm` below the film's bottom face,
    /// ties going deeper.
    pub fn plane_below_film(&self, depth_nm: f64, dz: f64) -> Result<usize, FdtdError> {
        let target = self.film_bottom as f64 - 0.5 - depth_nm / dz;
        let k = (target - 1e-9).round();
        if k < (self.pml_cells + 1) as f64 || k >= self.nz as f64 {
            return Err(FdtdError::BadMonitor(format!(
                "field-map plane {depth_nm} nm below the film is outside the simulation region"
            )));
        }
        Ok(k as usize)
    }
}

/// Per-component material ids on the Yee lattice plus a cell-centred view.
#[derive(Debug, Clone)]
pub struct Geometry {
    /// Material table; ids index into it.
    pub materials: Vec<MaterialModel>,
    /// Cell-centred ids, layout `(k·ny + j)·nx + i`.
    pub cells: Vec<u8>,
    pub ex: Vec<u8>,
    pub ey: Vec<u8>,
    pub ez: Vec<u8>,
    pub layout: ZLayout,
    /// Material id of the reference film, if the stack has layers.
    pub film_id: Option<u8>,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

impl Geometry {
    /// Area (nm²) of non-film cells in the middle plane of the reference
    /// film: the rasterized hole area.
    pub fn hole_area(&self) -> f64 {
        let Some(film) = self.film_id else { return 0.0 };
        let plane = self.nx * self.ny;
        let Some(&(lo, hi)) = self.layout.layers.iter().find(|l| l.0 == self.layout.film_bottom) else {
            return 0.0;
        };
        let mid = (lo + hi) / 2;
        let cells = &self.cells[mid * plane..(mid + 1) * plane];
        cells.iter().filter(|&&m| m != film).count() as f64 * self.dx * self.dy
    }

    /// Number of z cells whose cell-centred id is `id` everywhere in the plane.
    pub fn full_layers_of(&self, id: u8) -> usize {
        let plane = self.nx * self.ny;
        self.cells
            .chunks(plane)
            .filter(|p| p.iter().all(|&m| m == id))
            .count()
    }

    pub fn material_id(&self, name: &str) -> Option<u8> {
        self.materials.iter().position(|m| m.name == name).map(|i| i as u8)
    }
}

/// Assigns a material to every cell and Yee component position.
pub fn build_geometry(stack: &DeviceStack, grid: &SimulationGrid) -> Result<Geometry, FdtdError> {
    stack.validate()?;
    let (nx, ny, nz) = (grid.nx, grid.ny, grid.nz);
    if stack.hole.is_some() {
        let span = |n: usize, d: f64| (n as f64 * d - stack.pitch).abs() <= 1e-9 * stack.pitch;
        if !span(nx, grid.dx) || !span(ny, grid.dy) {
            return Err(FdtdError::InvalidGrid(format!(
                "lateral extent {}x{} nm must equal the pitch {} nm",
                nx as f64 * grid.dx,
                ny as f64 * grid.dy,
                stack.pitch
            )));
        }
    }

    // material table: substrate, layers, superstrate (deduplicated by value)
    let mut materials: Vec<MaterialModel> = Vec::new();
    let mut id_of = |m: &MaterialModel| -> u8 {
        if let Some(i) = materials.iter().position(|x| x == m) {
            i as u8
        } else {
            materials.push(m.clone());
            (materials.len() - 1) as u8
        }
    };
    let sub_id = id_of(&stack.substrate);
    let sup_id = id_of(&stack.superstrate);
    let layer_ids: Vec<u8> = stack.layers.iter().map(|l| id_of(&l.material)).collect();

    let mut layers = Vec::with_capacity(stack.layers.len());
    let used: usize = stack.layers.iter().map(|l| layer_cells(l.thickness, grid.dz)).sum();
    if nz < 2 * grid.pml_cells + used + 12 {
        return Err(FdtdError::InvalidGrid(format!(
            "nz = {nz} leaves no room around {used} layer cells"
        )));
    }
    let below = (nz - 2 * grid.pml_cells - used) / 2;
    let below = below.min(nz - 2 * grid.pml_cells - used - 6).max(6);
    let mut k = grid.pml_cells + below;
    for l in &stack.layers {
        let n = layer_cells(l.thickness, grid.dz);
        if n < 2 {
            return Err(FdtdError::InvalidGeometry(format!(
                "layer `{}` ({} nm) spans {n} cells at dz = {} nm; at least 2 are required",
                l.name, l.thickness, grid.dz
            )));
        }
        layers.push((k, k + n));
        k += n;
    }
    let stack_top = k;
    let film_bottom = stack.film_index().map(|i| layers[i].0).unwrap_or(stack_top);
    let top_free = nz - grid.pml_cells;
    if top_free < stack_top + 6 {
        return Err(FdtdError::InvalidGrid("superstrate gap below 6 cells".into()));
    }
    let gap_above = top_free - stack_top;
    let tfsf = stack_top + gap_above / 2;
    let reflection_monitor = tfsf + (top_free - tfsf) / 2;
    let transmission_monitor = grid.pml_cells + (below / 3).max(2);
    let layout = ZLayout {
        nz,
        pml_cells: grid.pml_cells,
        layers,
        film_bottom,
        tfsf,
        transmission_monitor,
        reflection_monitor,
    };

    let layer_at = |k: usize| layout.layers.iter().position(|&(lo, hi)| k >= lo && k < hi);
    let first = layout.layers.first().map_or(stack_top, |l| l.0);
    let hole = stack.hole;
    let id_at = |k: usize, x: f64, y: f64| -> u8 {
        match layer_at(k) {
            Some(li) if stack.layers[li].holed && hole.is_some_and(|h| h.contains(x, y, stack.pitch)) => sup_id,
            Some(li) => layer_ids[li],
            None if k < first => sub_id,
            None => sup_id,
        }
    };

    let plane = nx * ny;
    let mut cells = vec![0u8; plane * nz];
    let mut ex = vec![0u8; plane * nz];
    let mut ey = vec![0u8; plane * nz];
    let mut ez = vec![0u8; plane * nz];
    let (dx, dy) = (grid.dx, grid.dy);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let idx = (k * ny + j) * nx + i;
                let (xi, yj) = (i as f64 * dx, j as f64 * dy);
                cells[idx] = id_at(k, xi + dx / 2.0, yj + dy / 2.0);
                ex[idx] = id_at(k, xi + dx / 2.0, yj);
                ey[idx] = id_at(k, xi, yj + dy / 2.0);
                ez[idx] = id_at(k, xi, yj);
            }
        }
    }
    let film_id = stack.film_index().map(|i| layer_ids[i]);
    Ok(Geometry {
        film_id,
        materials,
        cells,
        ex,
        ey,
        ez,
        layout,
        nx,
        ny,
        dx,
        dy,
    })
}
