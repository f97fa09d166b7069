//! Running DFT monitors on tangential-E planes.
//!
//! A monitor at plane `k` accumulates `Ex`, `Ey` at `k` and the average of
//! `Hx`, `Hy` (and optionally `Ez`) at `k ± ½`, each with its own sample
//! time, against `exp(−iωt)`. Because every quantity is linear in the
//! source, monitors from an x-polarized and a y-polarized run combine into
//! any linear polarization.

use num_complex::Complex64;
use rayon::prelude::*;

use super::solver::Simulation;
use crate::materials::wavelength_to_omega;

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneDft {
    pub k: usize,
    pub nx: usize,
    pub ny: usize,
    pub wavelengths_nm: Vec<f64>,
    omegas: Vec<f64>,
    /// `[w·plane + idx]` spectra of each component.
    pub ex: Vec<Complex64>,
    pub ey: Vec<Complex64>,
    pub hx: Vec<Complex64>,
    pub hy: Vec<Complex64>,
    /// Present on field-map monitors only.
    pub ez: Option<Vec<Complex64>>,
}

impl PlaneDft {
    pub fn new(k: usize, nx: usize, ny: usize, wavelengths_nm: &[f64], with_ez: bool) -> Self {
        let n = nx * ny * wavelengths_nm.len();
        Self {
            k,
            nx,
            ny,
            wavelengths_nm: wavelengths_nm.to_vec(),
            omegas: wavelengths_nm.iter().map(|&l| wavelength_to_omega(l)).collect(),
            ex: vec![Complex64::ZERO; n],
            ey: vec![Complex64::ZERO; n],
            hx: vec![Complex64::ZERO; n],
            hy: vec![Complex64::ZERO; n],
            ez: with_ez.then(|| vec![Complex64::ZERO; n]),
        }
    }

    fn plane(&self) -> usize {
        self.nx * self.ny
    }

    /// Adds the current fields with quadrature weight `weight` (s).
    pub fn accumulate(&mut self, sim: &Simulation, weight: f64) {
        let k = self.k;
        let plane = self.plane();
        let (ex, ey, _) = sim.e_slab(k);
        let (hx1, hy1, _) = sim.h_slab(k);
        let (hx0, hy0, _) = sim.h_slab(k - 1);
        let hx: Vec<f64> = hx0.iter().zip(hx1).map(|(a, b)| 0.5 * (a + b)).collect();
        let hy: Vec<f64> = hy0.iter().zip(hy1).map(|(a, b)| 0.5 * (a + b)).collect();
        let ez: Option<Vec<f64>> = self.ez.as_ref().map(|_| {
            let (_, _, ez1) = sim.e_slab(k);
            let (_, _, ez0) = sim.e_slab(k - 1);
            ez0.iter().zip(ez1).map(|(a, b)| 0.5 * (a + b)).collect()
        });
        let (te, th) = (sim.time_e(), sim.time_h());
        let add = |acc: &mut [Complex64], f: &[f64], ph: Complex64| {
            for (a, v) in acc.iter_mut().zip(f) {
                *a += ph * *v;
            }
        };
        let omegas = &self.omegas;
        let ez_chunks: Vec<Option<&mut [Complex64]>> = match self.ez.as_mut() {
            Some(v) => v.chunks_mut(plane).map(Some).collect(),
            None => (0..omegas.len()).map(|_| None).collect(),
        };
        self.ex
            .par_chunks_mut(plane)
            .zip(self.ey.par_chunks_mut(plane))
            .zip(self.hx.par_chunks_mut(plane))
            .zip(self.hy.par_chunks_mut(plane))
            .zip(ez_chunks.into_par_iter())
            .enumerate()
            .for_each(|(w, ((((aex, aey), ahx), ahy), aez))| {
                let pe = Complex64::from_polar(weight, -omegas[w] * te);
                let ph = Complex64::from_polar(weight, -omegas[w] * th);
                add(aex, ex, pe);
                add(aey, ey, pe);
                add(ahx, &hx, ph);
                add(ahy, &hy, ph);
                if let (Some(acc), Some(f)) = (aez, ez.as_deref()) {
                    add(acc, f, pe);
                }
            });
    }

    /// Plane-averaged `Re(E × H*)·ẑ` per wavelength (positive = upward).
    pub fn flux(&self) -> Vec<f64> {
        let plane = self.plane();
        (0..self.wavelengths_nm.len())
            .map(|w| {
                let r = w * plane..(w + 1) * plane;
                let s: f64 = self.ex[r.clone()]
                    .iter()
                    .zip(&self.hy[r.clone()])
                    .zip(self.ey[r.clone()].iter().zip(&self.hx[r]))
                    .map(|((ex, hy), (ey, hx))| (ex * hy.conj() - ey * hx.conj()).re)
                    .sum();
                s / plane as f64
            })
            .collect()
    }

    /// `a·self + b·other`, for monitors of identical shape.
    pub fn combine(&self, a: f64, other: &PlaneDft, b: f64) -> PlaneDft {
        assert_eq!((self.k, self.nx, self.ny), (other.k, other.nx, other.ny));
        assert_eq!(self.wavelengths_nm, other.wavelengths_nm);
        let lin = |x: &[Complex64], y: &[Complex64]| x.iter().zip(y).map(|(p, q)| p * a + q * b).collect();
        PlaneDft {
            k: self.k,
            nx: self.nx,
            ny: self.ny,
            wavelengths_nm: self.wavelengths_nm.clone(),
            omegas: self.omegas.clone(),
            ex: lin(&self.ex, &other.ex),
            ey: lin(&self.ey, &other.ey),
            hx: lin(&self.hx, &other.hx),
            hy: lin(&self.hy, &other.hy),
            ez: match (&self.ez, &other.ez) {
                (Some(x), Some(y)) => Some(lin(x, y)),
                _ => None,
            },
        }
    }
}

/// Complex E over one unit cell at a single wavelength, normalized to the
/// incident amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap {
    pub wavelength_nm: f64,
    pub polarization_deg: f64,
    /// Plane position relative to the film's bottom face, nm (negative = below).
    pub z_nm: f64,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    /// Components at their Yee positions, `j·nx + i`.
    pub ex: Vec<Complex64>,
    pub ey: Vec<Complex64>,
    pub ez: Vec<Complex64>,
}

impl FieldMap {
    /// `|E|` at cell centres, row-major in y then x.
    pub fn magnitude(&self) -> Vec<f64> {
        let (nx, ny) = (self.nx, self.ny);
        let at = |v: &[Complex64], i: usize, j: usize| v[(j % ny) * nx + (i % nx)];
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let ex = 0.5 * (at(&self.ex, i, j) + at(&self.ex, i, j + 1));
                let ey = 0.5 * (at(&self.ey, i, j) + at(&self.ey, i + 1, j));
                let ez = 0.25
                    * (at(&self.ez, i, j) + at(&self.ez, i + 1, j) + at(&self.ez, i, j + 1) + at(&self.ez, i + 1, j + 1));
                out.push((ex.norm_sqr() + ey.norm_sqr() + ez.norm_sqr()).sqrt());
            }
        }
        out
    }

    /// `|E|` over a centred square window of side `width_nm`; returns
    /// `(rows, cols, values)`.
    pub fn magnitude_window(&self, width_nm: f64) -> (usize, usize, Vec<f64>) {
        let full = self.magnitude();
        let cols = ((width_nm / self.dx).round() as usize).clamp(1, self.nx);
        let rows = ((width_nm / self.dy).round() as usize).clamp(1, self.ny);
        let (i0, j0) = ((self.nx - cols) / 2, (self.ny - rows) / 2);
        let mut out = Vec::with_capacity(rows * cols);
        for j in j0..j0 + rows {
            out.extend_from_slice(&full[j * self.nx + i0..j * self.nx + i0 + cols]);
        }
        (rows, cols, out)
    }

    /// Pearson correlation of the two `|E|` maps.
    pub fn correlation(&self, other: &FieldMap) -> f64 {
        pearson(&self.magnitude(), &other.magnitude())
    }
}

pub(crate) fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return if saa == sbb { 1.0 } else { 0.0 };
    }
    sab / (saa * sbb).sqrt()
}
