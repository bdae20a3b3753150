//! Closed-form spinor data for test surfaces.

use num_complex::Complex64 as C64;

use crate::error::Result;
use crate::spinfield::{Grid2D, Parity, SpinorField};

/// Enneper's surface in the chart `z`: `psi = (1, conj z)`, `H = 0`.
pub fn enneper(grid: Grid2D) -> Result<SpinorField> {
    SpinorField::from_fn(grid, |z| (C64::new(1.0, 0.0), z.conj(), 0.0))
}

/// Immersion of [`enneper`]:
/// `(-Im(z + z^3/3), Re(z^3/3 - z), Re z^2)`.
pub fn enneper_point(z: C64) -> [f64; 3] {
    let z3 = z * z * z / 3.0;
    [-(z + z3).im, (z3 - z).re, (z * z).re]
}

/// Enneper's surface in the logarithmic chart `z = e^w`:
/// `psi = (e^{w/2}, conj(e^{3w/2}))`.
///
/// In this chart the data are not polynomial, so difference stencils have a
/// genuine truncation error and convergence orders are measurable.
pub fn enneper_log(grid: Grid2D) -> Result<SpinorField> {
    SpinorField::from_fn(grid, |w| ((0.5 * w).exp(), (1.5 * w).exp().conj(), 0.0))
}

pub fn enneper_log_point(w: C64) -> [f64; 3] {
    enneper_point(w.exp())
}

/// Round sphere of radius `r` through inverse stereographic projection,
/// `psi = sqrt(2r) e^{i pi/4} (conj z, 1) / (1 + |z|^2)`, `H = 1/r`.
pub fn round_sphere(grid: Grid2D, r: f64) -> Result<SpinorField> {
    let c = C64::from_polar((2.0 * r).sqrt(), std::f64::consts::FRAC_PI_4);
    SpinorField::from_fn(grid, |z| {
        let d = 1.0 + z.norm_sqr();
        (c * z.conj() / d, c / d, 1.0 / r)
    })
}

/// `r (2 Re z, 2 Im z, |z|^2 - 1) / (1 + |z|^2)`.
pub fn round_sphere_point(z: C64, r: f64) -> [f64; 3] {
    let d = 1.0 + z.norm_sqr();
    [2.0 * r * z.re / d, 2.0 * r * z.im / d, r * (z.norm_sqr() - 1.0) / d]
}

/// Conformal factor `e^alpha = 2r / (1 + |z|^2)` of [`round_sphere`].
pub fn round_sphere_alpha(z: C64, r: f64) -> f64 {
    (2.0 * r / (1.0 + z.norm_sqr())).ln()
}

/// Circular cylinder `(r cos v, r sin v, r u)` with `H = 1/(2r)`:
/// `psi1 = psi2 = sqrt(r/2) e^{i pi/4} e^{-iv/2}`, antiperiodic in `v`.
pub fn cylinder(grid: Grid2D, r: f64) -> Result<SpinorField> {
    let c = C64::from_polar((0.5 * r).sqrt(), std::f64::consts::FRAC_PI_4);
    let f = SpinorField::from_fn(grid, |z| {
        let p = c * C64::from_polar(1.0, -0.5 * z.im);
        (p, p, 0.5 / r)
    })?;
    Ok(f.with_parity([Parity::Even, Parity::Odd]))
}

pub fn cylinder_point(z: C64, r: f64) -> [f64; 3] {
    [r * z.im.cos(), r * z.im.sin(), r * z.re]
}

/// Totally geodesic plane `span(e2, e3)` of `G_mu`, minimal for every `mu`:
/// `psi = (i, -1) / sqrt(2 y)` on the half plane `z = x + i y`, `y > 0`.
pub fn gmu_geodesic_plane(grid: Grid2D) -> Result<SpinorField> {
    SpinorField::from_fn(grid, |z| {
        let s = 1.0 / (2.0 * z.im).sqrt();
        (C64::new(0.0, s), C64::new(-s, 0.0), 0.0)
    })
}
