//! Hopf quadratic differentials and their generalizations for Nil and the
//! universal cover of SL(2,R), plus the Euclidean Gauss and Codazzi residuals.

use std::io::Write;

use ndarray::{Array2, Zip};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::liegeo::christoffel;
use crate::spinfield::io::fmt_f64;
use crate::spinfield::{factorize_z, normal_of, Geometry, Grid2D, SpinorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadKind {
    Hopf,
    TildeA,
    AbreschRosenberg,
}

/// Index reading of the spinor Hopf formula.
///
/// `Codazzi` is `conj(psi2) d psi1 - psi1 d conj(psi2)`, the reading for which
/// the Euclidean Codazzi equation holds and round spheres are umbilic.
/// `AsPrinted` is `conj(psi2) d psi1 - psi2 d conj(psi2)`, kept for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HopfVariant {
    #[default]
    Codazzi,
    AsPrinted,
}

/// Coefficient of `dz^2` of a quadratic differential, sampled on the grid.
#[derive(Debug, Clone)]
pub struct QuadDifferential {
    pub a: Array2<C64>,
    pub kind: QuadKind,
    pub valid: Array2<bool>,
}

impl QuadDifferential {
    /// CSV with columns `iu,iv,re_A,im_A,valid`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iu,iv,re_A,im_A,valid")?;
        for ((i, j), a) in self.a.indexed_iter() {
            writeln!(
                w,
                "{i},{j},{},{},{}",
                fmt_f64(a.re),
                fmt_f64(a.im),
                u8::from(self.valid[(i, j)])
            )?;
        }
        Ok(())
    }
}

/// Hopf differential of the flat connection, `<f_zz, N>` for immersions in R^3.
pub fn hopf_a(psi: &SpinorField, variant: HopfVariant) -> Result<QuadDifferential> {
    let g = &psi.grid;
    let d1 = g.d_z_with(&psi.psi1, psi.parity)?;
    let c2 = psi.psi2.mapv(|x| x.conj());
    let dc2 = g.d_z_with(&c2, psi.parity)?;
    let mut a = Array2::zeros(g.shape());
    Zip::from(&mut a)
        .and(&psi.psi1)
        .and(&psi.psi2)
        .and(&d1)
        .and(&dc2)
        .for_each(|a, &p1, &p2, &d1, &dc2| {
            let other = match variant {
                HopfVariant::Codazzi => p1,
                HopfVariant::AsPrinted => p2,
            };
            *a = p2.conj() * d1 - other * dc2;
        });
    Ok(QuadDifferential {
        a,
        kind: QuadKind::Hopf,
        valid: g.erode(&psi.valid),
    })
}

/// Covariant Hopf differential `<nabla_{f_z} f_z, N>` of an immersion into the
/// group of `geometry`: the flat part plus `<nabla_Psi Psi, N>`.
pub fn hopf_covariant(psi: &SpinorField, geometry: Geometry) -> Result<QuadDifferential> {
    let mut qd = hopf_a(psi, HopfVariant::Codazzi)?;
    let conn = christoffel(&geometry.algebra());
    let z = factorize_z(psi);
    for ((i, j), a) in qd.a.indexed_iter_mut() {
        let zz = [z[0][(i, j)], z[1][(i, j)], z[2][(i, j)]];
        let nab = conn.nabla_c(&zz, &zz);
        let n = normal_of(psi.psi1[(i, j)], psi.psi2[(i, j)]);
        if n.iter().all(|x| x.is_finite()) {
            *a += nab[0] * n[0] + nab[1] * n[1] + nab[2] * n[2];
        }
    }
    Ok(qd)
}

/// Generalized Hopf differential, holomorphic exactly on CMC surfaces:
/// Nil: `A + Z3^2 / (2H + i)`; SL(2,R): `A + 5 Z3^2 / (2(H - i))`, with `A`
/// covariant and `H` taken from `psi.h`.
pub fn tilde_a(psi: &SpinorField, geometry: Geometry) -> Result<QuadDifferential> {
    let coef: fn(f64) -> C64 = match geometry {
        Geometry::Nil => |h| 1.0 / C64::new(2.0 * h, 1.0),
        Geometry::Sl2r => |h| 5.0 / (2.0 * C64::new(h, -1.0)),
        other => {
            return Err(Error::Unsupported {
                op: "tilde_a",
                geometry: other.to_string(),
            })
        }
    };
    let mut qd = hopf_covariant(psi, geometry)?;
    Zip::from(&mut qd.a)
        .and(&psi.psi1)
        .and(&psi.psi2)
        .and(&psi.h)
        .for_each(|a, &p1, &p2, &h| {
            let z3 = p1 * p2.conj();
            *a += coef(h) * z3 * z3;
        });
    qd.kind = QuadKind::TildeA;
    Ok(qd)
}

/// `(H + i tau) A~`.
///
/// The ambient bundle curvature `tau` is left to the caller; 0.5 matches the
/// Nil normalization `[e1, e2] = e3` used by [`Geometry::Nil`].
pub fn abresch_rosenberg(ta: &QuadDifferential, h: &Array2<f64>, tau: f64) -> Result<QuadDifferential> {
    if ta.kind != QuadKind::TildeA {
        return Err(Error::Config("abresch_rosenberg expects a generalized Hopf differential".into()));
    }
    if ta.a.dim() != h.dim() {
        return Err(Error::ShapeMismatch {
            expected: ta.a.dim(),
            found: h.dim(),
        });
    }
    let a = Zip::from(&ta.a).and(h).map_collect(|a, &h| C64::new(h, tau) * a);
    Ok(QuadDifferential {
        a,
        kind: QuadKind::AbreschRosenberg,
        valid: ta.valid.clone(),
    })
}

pub const DEFAULT_TAU: f64 = 0.5;

/// `max |dbar A|` over valid samples whose stencils stay inside the grid.
pub fn holomorphicity_residual(qd: &QuadDifferential, grid: &Grid2D) -> Result<f64> {
    let d = grid.d_zbar(&qd.a)?;
    let valid = grid.erode(&qd.valid);
    let rings = grid.stencil_radius();
    let mut m: f64 = 0.0;
    for ((i, j), x) in d.indexed_iter() {
        if valid[(i, j)] && grid.is_interior(i, j, rings) {
            m = m.max(x.norm());
        }
    }
    Ok(m)
}

/// Euclidean Gauss and Codazzi residuals,
/// `alpha_{z zbar} + U^2 - |A|^2 e^{-2 alpha}` and `A_zbar - (U_z - alpha_z U) e^alpha`.
pub fn gauss_codazzi_residual(
    alpha: &Array2<f64>,
    u: &Array2<f64>,
    a: &Array2<C64>,
    grid: &Grid2D,
) -> Result<(Array2<f64>, Array2<C64>)> {
    grid.check(alpha)?;
    grid.check(u)?;
    grid.check(a)?;
    let az = grid.d_z_real(alpha)?;
    let azzb = grid.d_zbar(&az)?;
    let uz = grid.d_z_real(u)?;
    let a_zb = grid.d_zbar(a)?;
    let mut gauss = Array2::zeros(grid.shape());
    let mut codazzi = Array2::zeros(grid.shape());
    for ((i, j), g) in gauss.indexed_iter_mut() {
        let (al, uu, aa) = (alpha[(i, j)], u[(i, j)], a[(i, j)]);
        *g = azzb[(i, j)].re + uu * uu - aa.norm_sqr() * (-2.0 * al).exp();
        codazzi[(i, j)] = a_zb[(i, j)] - (uz[(i, j)] - az[(i, j)] * uu) * al.exp();
    }
    Ok((gauss, codazzi))
}
