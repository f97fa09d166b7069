//! Closed-form normal-incidence transmission of planar stacks, the oracle
//! for the solver's laterally uniform cases.

use num_complex::Complex64;

use super::geometry::DeviceStack;
use crate::materials::MaterialError;

/// Power transmission and reflection `(T, R)` of the unholed `stack` for
/// light arriving from the superstrate, by characteristic matrices. `T` is
/// the power carried into the substrate.
pub fn planar_stack_tr(stack: &DeviceStack, wavelength_nm: f64) -> Result<(f64, f64), MaterialError> {
    // work in the exp(−iωt) convention: n + iκ with κ ≥ 0
    let index = |m: &crate::materials::MaterialModel| -> Result<Complex64, MaterialError> {
        Ok(m.permittivity(wavelength_nm)?.conj().sqrt())
    };
    let n0 = index(&stack.superstrate)?;
    let ns = index(&stack.substrate)?;
    let k0 = 2.0 * std::f64::consts::PI / wavelength_nm;
    let i = Complex64::i();
    let mut m = [[Complex64::ONE, Complex64::ZERO], [Complex64::ZERO, Complex64::ONE]];
    for layer in stack.layers.iter().rev() {
        let n = index(&layer.material)?;
        let d = k0 * n * layer.thickness;
        let (c, s) = (d.cos(), d.sin());
        let l = [[c, -i * s / n], [-i * n * s, c]];
        m = [
            [m[0][0] * l[0][0] + m[0][1] * l[1][0], m[0][0] * l[0][1] + m[0][1] * l[1][1]],
            [m[1][0] * l[0][0] + m[1][1] * l[1][0], m[1][0] * l[0][1] + m[1][1] * l[1][1]],
        ];
    }
    let b = m[0][0] + m[0][1] * ns;
    let c = m[1][0] + m[1][1] * ns;
    let den = n0 * b + c;
    let r = (n0 * b - c) / den;
    let t = 4.0 * n0.re * ns.re / den.norm_sqr();
    Ok((t, r.norm_sqr()))
}
