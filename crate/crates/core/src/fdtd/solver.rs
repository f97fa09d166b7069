//! Yee leapfrog kernel with CPML in z, periodic x/y and ADE dispersion.
//!
//! Fields are stored in z slabs (`(j·nx + i)` within a slab) and H is
//! scaled by the vacuum impedance, so both updates share the factor
//! `c·dt/d`. Dispersive poles carry a normalized polarization `p = P/ε0`
//! advanced by the central-difference recursion
//!
//! ```text
//! p⁺ = c1·p + c2·p⁻ + c3·E
//! ε∞(E⁺ − E) = c·dt·curl H − (p⁺ − p)
//! ```
//!
//! Each slab's update reads only neighbouring slabs of the other field, so
//! the slab loop runs in parallel and the result does not depend on the
//! worker count.

use rayon::prelude::*;

use super::geometry::Geometry;
use super::grid::SimulationGrid;
use super::source::{cpml_coefficients, Cpml, IncidentLine, SourceSpec, Waveform};
use super::FdtdError;
use crate::materials::{MaterialModel, PoleKind};

/// Per-material update constants.
#[derive(Debug, Clone)]
struct MatCoef {
    inv_eps: f64,
    /// `[c1, c2, c3]` per pole.
    poles: Vec<[f64; 3]>,
}

impl MatCoef {
    fn new(m: &MaterialModel, dt: f64) -> Self {
        let poles = m
            .poles
            .iter()
            .map(|p| {
                let g = 0.5 * p.damping * dt;
                let w2 = p.frequency * p.frequency;
                let (w0sq, drive) = match p.kind {
                    PoleKind::Drude => (0.0, p.strength * w2),
                    PoleKind::Lorentz => (w2, p.strength * w2),
                };
                [
                    (2.0 - w0sq * dt * dt) / (1.0 + g),
                    (g - 1.0) / (1.0 + g),
                    drive * dt * dt / (1.0 + g),
                ]
            })
            .collect();
        Self {
            inv_eps: 1.0 / m.eps_inf,
            poles,
        }
    }
}

#[derive(Debug, Clone)]
enum Coef {
    Uniform(f64),
    Map(Vec<f64>),
}

impl Coef {
    fn at(&self, idx: usize) -> f64 {
        match self {
            Coef::Uniform(c) => *c,
            Coef::Map(v) => v[idx],
        }
    }

    fn from_ids(ids: &[u8], mats: &[MatCoef]) -> Self {
        let first = ids[0];
        if ids.iter().all(|&m| m == first) {
            Coef::Uniform(mats[first as usize].inv_eps)
        } else {
            Coef::Map(ids.iter().map(|&m| mats[m as usize].inv_eps).collect())
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct DispPoint {
    comp: u8,
    mat: u8,
    idx: u32,
    /// Offset of this point's `(p, p⁻)` pairs in the slab state.
    base: u32,
}

#[derive(Debug, Clone)]
struct ESlab {
    ex: Vec<f64>,
    ey: Vec<f64>,
    ez: Vec<f64>,
    cx: Coef,
    cy: Coef,
    cz: Coef,
    psi_x: Vec<f64>,
    psi_y: Vec<f64>,
    pml: Option<Cpml>,
    disp: Vec<DispPoint>,
    pstate: Vec<f64>,
    dp: Vec<f64>,
}

#[derive(Debug, Clone)]
struct HSlab {
    hx: Vec<f64>,
    hy: Vec<f64>,
    hz: Vec<f64>,
    psi_x: Vec<f64>,
    psi_y: Vec<f64>,
    pml: Option<Cpml>,
}

#[derive(Debug, Clone, Copy)]
struct Consts {
    nx: usize,
    ny: usize,
    cdx: f64,
    cdy: f64,
    cdz: f64,
}

#[derive(Debug, Clone)]
struct Injection {
    line: IncidentLine,
    waveform: Waveform,
    pol: (f64, f64),
    k: usize,
}

/// One FDTD state. Independent simulations may run concurrently.
#[derive(Debug, Clone)]
pub struct Simulation {
    grid: SimulationGrid,
    consts: Consts,
    e: Vec<ESlab>,
    h: Vec<HSlab>,
    mats: Vec<MatCoef>,
    zeros: Vec<f64>,
    injection: Option<Injection>,
    steps: usize,
}

/// Depth fraction into the z PML at (possibly half-integer) plane `z`.
fn pml_depth(z: f64, nz: usize, pml: usize) -> f64 {
    if pml == 0 {
        return 0.0;
    }
    let p = pml as f64;
    let top_start = (nz - pml) as f64 - 1.0;
    if z < p {
        ((p - z) / p).min(1.0)
    } else if z > top_start {
        ((z - top_start) / p).min(1.0)
    } else {
        0.0
    }
}

impl Simulation {
    /// Builds the field state. With `source = None` the grid starts empty
    /// and evolves freely (see [`Simulation::set_e`]).
    pub fn new(
        grid: &SimulationGrid,
        geometry: &Geometry,
        source: Option<&SourceSpec>,
    ) -> Result<Self, FdtdError> {
        let (nx, ny, nz) = (grid.nx, grid.ny, grid.nz);
        if geometry.nx != nx || geometry.ny != ny || geometry.layout.nz != nz {
            return Err(FdtdError::InvalidGrid("geometry does not match grid".into()));
        }
        let plane = nx * ny;
        let mats: Vec<MatCoef> = geometry.materials.iter().map(|m| MatCoef::new(m, grid.dt)).collect();
        let c_dt = grid.c_dt();
        let consts = Consts {
            nx,
            ny,
            cdx: c_dt / grid.dx,
            cdy: c_dt / grid.dy,
            cdz: c_dt / grid.dz,
        };

        let mut e = Vec::with_capacity(nz);
        let mut h = Vec::with_capacity(nz);
        for k in 0..nz {
            let r = k * plane..(k + 1) * plane;
            let (ix, iy, iz) = (&geometry.ex[r.clone()], &geometry.ey[r.clone()], &geometry.ez[r.clone()]);
            let eps_bg = geometry.materials[geometry.cells[k * plane] as usize].eps_inf;
            let pml_e = pml_depth(k as f64, nz, grid.pml_cells);
            let pml_h = pml_depth(k as f64 + 0.5, nz, grid.pml_cells);
            let pml_e = (pml_e > 0.0).then(|| cpml_coefficients(pml_e, grid.dz, eps_bg, grid.dt, grid.pml_kappa));
            let pml_h = (pml_h > 0.0).then(|| cpml_coefficients(pml_h, grid.dz, eps_bg, grid.dt, grid.pml_kappa));

            let mut disp = Vec::new();
            let mut base = 0u32;
            for (comp, ids) in [ix, iy, iz].into_iter().enumerate() {
                if k == 0 && comp < 2 {
                    continue;
                }
                for (idx, &m) in ids.iter().enumerate() {
                    let np = mats[m as usize].poles.len() as u32;
                    if np > 0 {
                        disp.push(DispPoint {
                            comp: comp as u8,
                            mat: m,
                            idx: idx as u32,
                            base,
                        });
                        base += 2 * np;
                    }
                }
            }
            let psi_len = |p: &Option<Cpml>| if p.is_some() { plane } else { 0 };
            e.push(ESlab {
                ex: vec![0.0; plane],
                ey: vec![0.0; plane],
                ez: vec![0.0; plane],
                cx: Coef::from_ids(ix, &mats),
                cy: Coef::from_ids(iy, &mats),
                cz: Coef::from_ids(iz, &mats),
                psi_x: vec![0.0; psi_len(&pml_e)],
                psi_y: vec![0.0; psi_len(&pml_e)],
                pml: pml_e,
                dp: vec![0.0; disp.len()],
                disp,
                pstate: vec![0.0; base as usize],
            });
            h.push(HSlab {
                hx: vec![0.0; plane],
                hy: vec![0.0; plane],
                hz: vec![0.0; plane],
                psi_x: vec![0.0; psi_len(&pml_h)],
                psi_y: vec![0.0; psi_len(&pml_h)],
                pml: pml_h,
            });
        }

        let injection = match source {
            None => None,
            Some(s) => {
                s.validate()?;
                let k = s.injection_plane.unwrap_or(geometry.layout.tfsf);
                if k <= grid.pml_cells || k + 1 >= nz - grid.pml_cells {
                    return Err(FdtdError::InvalidSource(format!(
                        "injection plane {k} lies in or next to the PML"
                    )));
                }
                Some(Injection {
                    line: IncidentLine::new(k, grid.dz, grid.dt),
                    waveform: s.waveform(),
                    pol: s.polarization_vector(),
                    k,
                })
            }
        };

        Ok(Self {
            grid: grid.clone(),
            consts,
            e,
            h,
            mats,
            zeros: vec![0.0; plane],
            injection,
            steps: 0,
        })
    }

    pub fn grid(&self) -> &SimulationGrid {
        &self.grid
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Time of the current E field, s.
    pub fn time_e(&self) -> f64 {
        self.steps as f64 * self.grid.dt
    }

    /// Time of the current H field, s.
    pub fn time_h(&self) -> f64 {
        (self.steps as f64 - 0.5) * self.grid.dt
    }

    /// Time after which the source no longer injects energy.
    pub fn source_end_time(&self) -> f64 {
        self.injection.as_ref().map_or(0.0, |s| s.waveform.end_time())
    }

    pub fn injection_plane(&self) -> Option<usize> {
        self.injection.as_ref().map(|s| s.k)
    }

    /// Incident (x-like) field at the injection plane at the current E time.
    pub fn incident_e(&self) -> f64 {
        self.injection.as_ref().map_or(0.0, |s| s.line.e_at(s.k))
    }

    /// `(Ex, Ey, Ez)` of slab `k`; `Ez` sits at `k + ½`.
    pub fn e_slab(&self, k: usize) -> (&[f64], &[f64], &[f64]) {
        let s = &self.e[k];
        (&s.ex, &s.ey, &s.ez)
    }

    /// `(Hx, Hy, Hz)` of slab `k`; `Hx`, `Hy` sit at `k + ½`. Scaled by the
    /// vacuum impedance.
    pub fn h_slab(&self, k: usize) -> (&[f64], &[f64], &[f64]) {
        let s = &self.h[k];
        (&s.hx, &s.hy, &s.hz)
    }

    /// Overwrites the E field of slab `k`, for initial-value problems.
    pub fn set_e(&mut self, k: usize, ex: &[f64], ey: &[f64], ez: &[f64]) {
        let s = &mut self.e[k];
        s.ex.copy_from_slice(ex);
        s.ey.copy_from_slice(ey);
        s.ez.copy_from_slice(ez);
    }

    /// Electromagnetic energy `Σ ε∞E² + H²` in grid units, summed slab by
    /// slab in a fixed order.
    pub fn energy(&self) -> f64 {
        let per: Vec<f64> = self
            .e
            .par_iter()
            .zip(self.h.par_iter())
            .map(|(e, h)| {
                let mut s = 0.0;
                for (idx, v) in e.ex.iter().enumerate() {
                    s += v * v / e.cx.at(idx);
                }
                for (idx, v) in e.ey.iter().enumerate() {
                    s += v * v / e.cy.at(idx);
                }
                for (idx, v) in e.ez.iter().enumerate() {
                    s += v * v / e.cz.at(idx);
                }
                for f in [&h.hx, &h.hy, &h.hz] {
                    s += f.iter().map(|v| v * v).sum::<f64>();
                }
                s
            })
            .collect();
        per.iter().sum()
    }

    /// Advances E and H by one time step.
    pub fn step(&mut self) {
        let c = self.consts;
        let nz = self.grid.nz;

        {
            let e = &self.e;
            let zeros = &self.zeros;
            self.h.par_iter_mut().enumerate().for_each(|(k, hs)| {
                let e1 = if k + 1 < nz { Some(&e[k + 1]) } else { None };
                update_h(hs, &e[k], e1, zeros, c);
            });
        }
        if let Some(inj) = &mut self.injection {
            let einc = inj.line.e_at(inj.k);
            let (cx, sy) = inj.pol;
            let hs = &mut self.h[inj.k];
            for v in hs.hy.iter_mut() {
                *v -= c.cdz * cx * einc;
            }
            for v in hs.hx.iter_mut() {
                *v += c.cdz * sy * einc;
            }
            inj.line.step_h();
        }

        {
            let h = &self.h;
            let mats = &self.mats;
            self.e.par_iter_mut().enumerate().for_each(|(k, es)| {
                let hm = if k > 0 { Some(&h[k - 1]) } else { None };
                update_e(es, &h[k], hm, mats, c);
            });
        }
        self.steps += 1;
        if let Some(inj) = &mut self.injection {
            let hinc = inj.line.h_at(inj.k);
            let (cx, sy) = inj.pol;
            let es = &mut self.e[inj.k];
            for (idx, v) in es.ex.iter_mut().enumerate() {
                *v -= es.cx.at(idx) * c.cdz * cx * hinc;
            }
            for (idx, v) in es.ey.iter_mut().enumerate() {
                *v -= es.cy.at(idx) * c.cdz * sy * hinc;
            }
            let t = self.steps as f64 * self.grid.dt;
            inj.line.step_e(t, &inj.waveform);
        }
    }
}

fn update_h(hs: &mut HSlab, e0: &ESlab, e1: Option<&ESlab>, zeros: &[f64], c: Consts) {
    let Consts { nx, ny, cdx, cdy, cdz } = c;
    let (ex1, ey1) = match e1 {
        Some(s) => (&s.ex[..], &s.ey[..]),
        None => (zeros, zeros),
    };
    let (ex0, ey0, ez0) = (&e0.ex[..], &e0.ey[..], &e0.ez[..]);
    for j in 0..ny {
        let jp = if j + 1 == ny { 0 } else { j + 1 };
        let r = j * nx..(j + 1) * nx;
        let rp = jp * nx..(jp + 1) * nx;

        // Hx: −∂y Ez + ∂z Ey
        {
            let hx = &mut hs.hx[r.clone()];
            let (ez_j, ez_jp) = (&ez0[r.clone()], &ez0[rp.clone()]);
            let (ey_0, ey_1) = (&ey0[r.clone()], &ey1[r.clone()]);
            match hs.pml {
                None => {
                    for i in 0..nx {
                        hx[i] += -cdy * (ez_jp[i] - ez_j[i]) + cdz * (ey_1[i] - ey_0[i]);
                    }
                }
                Some(Cpml { b, a, inv_kappa: ik }) => {
                    let psi = &mut hs.psi_x[r.clone()];
                    for i in 0..nx {
                        let d = ey_1[i] - ey_0[i];
                        psi[i] = b * psi[i] + a * d;
                        hx[i] += -cdy * (ez_jp[i] - ez_j[i]) + cdz * (d * ik + psi[i]);
                    }
                }
            }
        }
        // Hy: −∂z Ex + ∂x Ez
        {
            let hy = &mut hs.hy[r.clone()];
            let ez_j = &ez0[r.clone()];
            let (ex_0, ex_1) = (&ex0[r.clone()], &ex1[r.clone()]);
            let dz_ez = |i: usize| if i + 1 == nx { ez_j[0] - ez_j[i] } else { ez_j[i + 1] - ez_j[i] };
            match hs.pml {
                None => {
                    for i in 0..nx {
                        hy[i] += -cdz * (ex_1[i] - ex_0[i]) + cdx * dz_ez(i);
                    }
                }
                Some(Cpml { b, a, inv_kappa: ik }) => {
                    let psi = &mut hs.psi_y[r.clone()];
                    for i in 0..nx {
                        let d = ex_1[i] - ex_0[i];
                        psi[i] = b * psi[i] + a * d;
                        hy[i] += -cdz * (d * ik + psi[i]) + cdx * dz_ez(i);
                    }
                }
            }
        }
        // Hz: −∂x Ey + ∂y Ex
        {
            let hz = &mut hs.hz[r.clone()];
            let ey_j = &ey0[r.clone()];
            let (ex_j, ex_jp) = (&ex0[r.clone()], &ex0[rp]);
            for i in 0..nx - 1 {
                hz[i] += -cdx * (ey_j[i + 1] - ey_j[i]) + cdy * (ex_jp[i] - ex_j[i]);
            }
            let i = nx - 1;
            hz[i] += -cdx * (ey_j[0] - ey_j[i]) + cdy * (ex_jp[i] - ex_j[i]);
        }
    }
}

fn update_e(es: &mut ESlab, h0: &HSlab, hm: Option<&HSlab>, mats: &[MatCoef], c: Consts) {
    let Consts { nx, ny, cdx, cdy, .. } = c;

    // polarization update from the field before this step
    for (n, p) in es.disp.iter().enumerate() {
        let idx = p.idx as usize;
        let e_now = match p.comp {
            0 => es.ex[idx],
            1 => es.ey[idx],
            _ => es.ez[idx],
        };
        let m = &mats[p.mat as usize];
        let mut dp = 0.0;
        let mut s = p.base as usize;
        for q in &m.poles {
            let (pn, pp) = (es.pstate[s], es.pstate[s + 1]);
            let pnew = q[0] * pn + q[1] * pp + q[2] * e_now;
            es.pstate[s] = pnew;
            es.pstate[s + 1] = pn;
            dp += pnew - pn;
            s += 2;
        }
        es.dp[n] = dp;
    }

    let (hx0, hy0, hz0) = (&h0.hx[..], &h0.hy[..], &h0.hz[..]);
    if let Some(hm) = hm {
        let (hxm, hym) = (&hm.hx[..], &hm.hy[..]);
        let cx = std::mem::take(&mut es.cx);
        match &cx {
            Coef::Uniform(k) => {
                let k = *k;
                update_ex(es, hz0, hy0, hym, |_| k, c)
            }
            Coef::Map(m) => update_ex(es, hz0, hy0, hym, |i| m[i], c),
        }
        es.cx = cx;
        let cy = std::mem::take(&mut es.cy);
        match &cy {
            Coef::Uniform(k) => {
                let k = *k;
                update_ey(es, hz0, hx0, hxm, |_| k, c)
            }
            Coef::Map(m) => update_ey(es, hz0, hx0, hxm, |i| m[i], c),
        }
        es.cy = cy;
    }
    // Ez: ∂x Hy − ∂y Hx
    {
        let cz = std::mem::take(&mut es.cz);
        for j in 0..ny {
            let jm = if j == 0 { ny - 1 } else { j - 1 };
            let r = j * nx..(j + 1) * nx;
            let ez = &mut es.ez[r.clone()];
            let hy_j = &hy0[r.clone()];
            let (hx_j, hx_jm) = (&hx0[r.clone()], &hx0[jm * nx..(jm + 1) * nx]);
            match &cz {
                Coef::Uniform(k) => {
                    let i = 0;
                    ez[i] += k * (cdx * (hy_j[i] - hy_j[nx - 1]) - cdy * (hx_j[i] - hx_jm[i]));
                    for i in 1..nx {
                        ez[i] += k * (cdx * (hy_j[i] - hy_j[i - 1]) - cdy * (hx_j[i] - hx_jm[i]));
                    }
                }
                Coef::Map(m) => {
                    let m = &m[r.clone()];
                    let i = 0;
                    ez[i] += m[i] * (cdx * (hy_j[i] - hy_j[nx - 1]) - cdy * (hx_j[i] - hx_jm[i]));
                    for i in 1..nx {
                        ez[i] += m[i] * (cdx * (hy_j[i] - hy_j[i - 1]) - cdy * (hx_j[i] - hx_jm[i]));
                    }
                }
            }
        }
        es.cz = cz;
    }

    for (n, p) in es.disp.iter().enumerate() {
        let idx = p.idx as usize;
        let d = es.dp[n] * mats[p.mat as usize].inv_eps;
        match p.comp {
            0 => es.ex[idx] -= d,
            1 => es.ey[idx] -= d,
            _ => es.ez[idx] -= d,
        }
    }
}

impl Default for Coef {
    fn default() -> Self {
        Coef::Uniform(0.0)
    }
}

/// Ex: ∂y Hz − ∂z Hy.
fn update_ex<F: Fn(usize) -> f64>(es: &mut ESlab, hz0: &[f64], hy0: &[f64], hym: &[f64], coef: F, c: Consts) {
    let Consts { nx, ny, cdy, cdz, .. } = c;
    for j in 0..ny {
        let jm = if j == 0 { ny - 1 } else { j - 1 };
        let base = j * nx;
        let r = base..base + nx;
        let ex = &mut es.ex[r.clone()];
        let (hz_j, hz_jm) = (&hz0[r.clone()], &hz0[jm * nx..(jm + 1) * nx]);
        let (hy_0, hy_m) = (&hy0[r.clone()], &hym[r.clone()]);
        match es.pml {
            None => {
                for i in 0..nx {
                    ex[i] += coef(base + i) * (cdy * (hz_j[i] - hz_jm[i]) - cdz * (hy_0[i] - hy_m[i]));
                }
            }
            Some(Cpml { b, a, inv_kappa: ik }) => {
                let psi = &mut es.psi_x[r.clone()];
                for i in 0..nx {
                    let d = hy_0[i] - hy_m[i];
                    psi[i] = b * psi[i] + a * d;
                    ex[i] += coef(base + i) * (cdy * (hz_j[i] - hz_jm[i]) - cdz * (d * ik + psi[i]));
                }
            }
        }
    }
}

/// Ey: ∂z Hx − ∂x Hz.
fn update_ey<F: Fn(usize) -> f64>(es: &mut ESlab, hz0: &[f64], hx0: &[f64], hxm: &[f64], coef: F, c: Consts) {
    let Consts { nx, ny, cdx, cdz, .. } = c;
    for j in 0..ny {
        let base = j * nx;
        let r = base..base + nx;
        let ey = &mut es.ey[r.clone()];
        let hz_j = &hz0[r.clone()];
        let (hx_0, hx_m) = (&hx0[r.clone()], &hxm[r.clone()]);
        let dx_hz = |i: usize| if i == 0 { hz_j[0] - hz_j[nx - 1] } else { hz_j[i] - hz_j[i - 1] };
        match es.pml {
            None => {
                for i in 0..nx {
                    ey[i] += coef(base + i) * (cdz * (hx_0[i] - hx_m[i]) - cdx * dx_hz(i));
                }
            }
            Some(Cpml { b, a, inv_kappa: ik }) => {
                let psi = &mut es.psi_y[r.clone()];
                for i in 0..nx {
                    let d = hx_0[i] - hx_m[i];
                    psi[i] = b * psi[i] + a * d;
                    ey[i] += coef(base + i) * (cdz * (d * ik + psi[i]) - cdx * dx_hz(i));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdtd::geometry::{build_geometry, DeviceStack};
    use crate::fdtd::grid::GridSpec;

    fn vacuum_sim(nx: usize, nz: usize, pml: usize, source: Option<&SourceSpec>) -> Simulation {
        let mut stack = DeviceStack::slab(MaterialModel::vacuum(), MaterialModel::vacuum(), 20.0, MaterialModel::vacuum());
        stack.pitch = nx as f64 * 10.0;
        let grid = SimulationGrid::new(10.0, 10.0, 10.0, nx, nx, nz, 0.99, pml, false).unwrap();
        let geom = build_geometry(&stack, &grid).unwrap();
        Simulation::new(&grid, &geom, source).unwrap()
    }

    /// Discrete Yee energy `Σ E(n)² + H(n−½)·H(n+½)`, exactly conserved by
    /// the lossless leapfrog. `e_prev`, `h_prev` are the fields before the
    /// last step.
    fn yee_energy(sim: &Simulation, e_prev: &[ESlab], h_prev: &[HSlab]) -> f64 {
        let mut s = 0.0;
        for (k, e) in e_prev.iter().enumerate() {
            for f in [&e.ex, &e.ey, &e.ez] {
                s += f.iter().map(|v| v * v).sum::<f64>();
            }
            let (h, hp) = (&sim.h[k], &h_prev[k]);
            for (a, b) in [(&h.hx, &hp.hx), (&h.hy, &hp.hy), (&h.hz, &hp.hz)] {
                s += a.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>();
            }
        }
        s
    }

    #[test]
    fn closed_box_conserves_energy() {
        let (nx, nz) = (6, 60);
        let mut sim = vacuum_sim(nx, nz, 0, None);
        let plane = nx * nx;
        for k in 1..nz - 1 {
            let z = (k as f64 - 30.0) / 5.0;
            let amp = (-z * z).exp();
            let ex: Vec<f64> = (0..plane).map(|idx| amp * (1.0 + 0.3 * ((idx % nx) as f64).cos())).collect();
            let ey: Vec<f64> = (0..plane).map(|idx| 0.5 * amp * ((idx / nx) as f64 * 0.7).sin()).collect();
            sim.set_e(k, &ex, &ey, &vec![0.0; plane]);
        }
        let step = |sim: &mut Simulation| {
            let (e, h) = (sim.e.clone(), sim.h.clone());
            sim.step();
            yee_energy(sim, &e, &h)
        };
        let e0 = step(&mut sim);
        let mut e_last = e0;
        for _ in 0..10_000 {
            e_last = step(&mut sim);
        }
        assert!(e0 > 0.0);
        assert!(((e_last - e0) / e0).abs() < 1e-9, "energy drift {}", (e_last - e0) / e0);
    }

    #[test]
    fn pulse_travels_at_light_speed() {
        let src = SourceSpec::broadband(400.0, 1000.0, 0.0);
        let (nz, pml) = (400, 10);
        let mut sim = vacuum_sim(1, nz, pml, Some(&src));
        let ks = sim.injection_plane().unwrap();
        let (k_a, k_b) = (ks - 20, ks - 220);
        let mut env = [Vec::new(), Vec::new()];
        for _ in 0..6000 {
            sim.step();
            for (slot, k) in [k_a, k_b].into_iter().enumerate() {
                let v = sim.e_slab(k).0[0];
                env[slot].push(v * v);
            }
        }
        // energy-weighted arrival time at each plane
        let arrival = |w: &[f64]| {
            let s: f64 = w.iter().sum();
            w.iter().enumerate().map(|(n, v)| (n + 1) as f64 * v).sum::<f64>() / s * sim.grid().dt
        };
        let dt_travel = arrival(&env[1]) - arrival(&env[0]);
        let expected = 200.0 * 10.0 / crate::materials::C_NM_PER_S;
        assert!(((dt_travel - expected) / expected).abs() < 0.01, "{dt_travel} vs {expected}");
    }

    #[test]
    fn tfsf_keeps_scattered_region_dark() {
        let src = SourceSpec::broadband(400.0, 1000.0, 30.0);
        // thick absorbers: the check is for TFSF leakage, not CPML reflection
        let mut sim = vacuum_sim(2, 200, 40, Some(&src));
        let ks = sim.injection_plane().unwrap();
        let (mut inside, mut outside) = (0.0f64, 0.0f64);
        for _ in 0..3000 {
            sim.step();
            inside = inside.max(sim.e_slab(ks - 5).0[0].abs());
            for k in ks + 2..sim.grid().nz - 40 {
                outside = outside.max(sim.e_slab(k).0[0].abs()).max(sim.e_slab(k).1[0].abs());
            }
        }
        assert!(inside > 0.1);
        assert!(outside < 1e-6 * inside, "leakage {outside} vs {inside}");
    }

    /// A high-index layer guides modes whose evanescent tails reach the
    /// absorbers; with an unstretched CPML close to the layer these grow.
    #[test]
    fn guided_modes_do_not_grow_in_cpml() {
        let mut stack = DeviceStack::slab(MaterialModel::vacuum(), MaterialModel::constant_index("ito", 1.9), 20.0, MaterialModel::vacuum());
        stack.pitch = 200.0;
        let grid = SimulationGrid::for_stack(&GridSpec::uniform(10.0), &stack).unwrap();
        let geom = build_geometry(&stack, &grid).unwrap();
        let mut sim = Simulation::new(&grid, &geom, None).unwrap();
        let plane = grid.plane_cells();
        let mut seed = 0x9e37_79b9_7f4a_7c15u64;
        let mut rnd = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for k in 1..grid.nz - 1 {
            let f: Vec<Vec<f64>> = (0..3).map(|_| (0..plane).map(|_| rnd()).collect()).collect();
            sim.set_e(k, &f[0], &f[1], &f[2]);
        }
        for _ in 0..4000 {
            sim.step();
        }
        let settled = sim.energy();
        for _ in 0..30_000 {
            sim.step();
        }
        let late = sim.energy();
        assert!(late <= 1.01 * settled, "energy grew from {settled} to {late}");
    }

    #[test]
    fn unstable_courant_blows_up() {
        let stack = DeviceStack::slab(MaterialModel::vacuum(), MaterialModel::vacuum(), 20.0, MaterialModel::vacuum());
        let spec = GridSpec {
            // unstable even for the laterally uniform mode: c·dt/dz = 2/√3
            courant_factor: 2.0,
            allow_unstable: true,
            ..GridSpec::uniform(10.0)
        };
        let mut grid = SimulationGrid::for_stack(&spec, &stack).unwrap();
        grid.nx = 3;
        grid.ny = 3;
        let geom = build_geometry(&stack, &grid).unwrap();
        let mut sim = Simulation::new(&grid, &geom, Some(&SourceSpec::default())).unwrap();
        for _ in 0..500 {
            sim.step();
        }
        let e = sim.energy();
        assert!(!e.is_finite() || e > 1e30, "energy {e}");
    }
}
