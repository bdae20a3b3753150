//! Spinor energy, the geometric energy integrands of Nil and SL(2,R), the
//! Willmore functional and the Euclidean Gauss-Bonnet split.
//!
//! The spinor energy integrates `U V` against the coordinate measure
//! `du dv`, not against the induced area `e^{2 alpha} du dv`.

use ndarray::{Array2, Zip};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hopf::{hopf_a, HopfVariant};
use crate::liegeo::{curvature_tensor, sectional_curvature_normal, LieAlgebra3};
use crate::spinfield::{induced_metric, normal_of, Geometry, Grid2D, PotentialField, SpinorField};

/// Induced area element per sample, with the Euler characteristic when known.
#[derive(Debug, Clone)]
pub struct SurfaceMeasure {
    pub dmu: Array2<f64>,
    pub chi: Option<i32>,
}

/// Quadrature weights for `du dv`: trapezoid along open axes, uniform along
/// periodic ones.
pub fn coordinate_weights(grid: &Grid2D) -> Array2<f64> {
    let wu = axis_weights(grid.nu, grid.du, grid.periodic_u);
    let wv = axis_weights(grid.nv, grid.dv, grid.periodic_v);
    Array2::from_shape_fn(grid.shape(), |(i, j)| wu[i] * wv[j])
}

fn axis_weights(n: usize, d: f64, periodic: bool) -> Vec<f64> {
    let mut w = vec![d; n];
    if !periodic {
        w[0] = 0.5 * d;
        w[n - 1] = 0.5 * d;
    }
    w
}

impl SurfaceMeasure {
    /// `dmu = e^{2 alpha} du dv`, zero on invalid samples.
    pub fn from_spinor(psi: &SpinorField, chi: Option<i32>) -> Result<Self> {
        let ea = induced_metric(psi)?;
        let w = coordinate_weights(&psi.grid);
        let dmu = Zip::from(&ea)
            .and(&w)
            .and(&psi.valid)
            .map_collect(|e, w, ok| if *ok { e * e * w } else { 0.0 });
        Ok(SurfaceMeasure { dmu, chi })
    }

    pub fn area(&self) -> f64 {
        self.dmu.sum()
    }

    fn integrate(&self, f: impl Fn((usize, usize)) -> f64) -> f64 {
        self.dmu.indexed_iter().map(|(ix, d)| f(ix) * d).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpinorEnergy {
    pub re: f64,
    pub im: f64,
    /// The grid is not doubly periodic; the value is still returned.
    pub open_surface: bool,
}

impl SpinorEnergy {
    pub fn value(&self) -> C64 {
        C64::new(self.re, self.im)
    }
}

/// `E = integral of U V du dv` over valid samples.
pub fn spinor_energy(pot: &PotentialField, grid: &Grid2D) -> Result<SpinorEnergy> {
    grid.check(&pot.u)?;
    grid.check(&pot.v)?;
    let w = coordinate_weights(grid);
    let mut e = C64::new(0.0, 0.0);
    for ((i, j), ok) in pot.valid.indexed_iter() {
        if *ok {
            e += pot.u[(i, j)] * pot.v[(i, j)] * w[(i, j)];
        }
    }
    Ok(SpinorEnergy {
        re: e.re,
        im: e.im,
        open_surface: !(grid.periodic_u && grid.periodic_v),
    })
}

/// Ambient sectional curvature of every tangent plane.
pub fn ambient_curvature(psi: &SpinorField, alg: &LieAlgebra3) -> Result<Array2<f64>> {
    let curv = curvature_tensor(alg);
    let mut out = Array2::zeros(psi.grid.shape());
    for ((i, j), k) in out.indexed_iter_mut() {
        if psi.valid[(i, j)] {
            *k = sectional_curvature_normal(&curv, &normal_of(psi.psi1[(i, j)], psi.psi2[(i, j)]))?;
        }
    }
    Ok(out)
}

/// `1/4 integral of (H^2 + a Khat + b) dmu` with the group's constants:
/// R^3 `(0, 0)`, Nil `(1/4, -1/16)`, SL(2,R) `(5/16, -1/4)`.
pub fn energy_geometric(h: &Array2<f64>, khat: &Array2<f64>, meas: &SurfaceMeasure, geometry: Geometry) -> Result<f64> {
    let (a, b) = match geometry {
        Geometry::Euclidean => (0.0, 0.0),
        Geometry::Nil => (0.25, -1.0 / 16.0),
        Geometry::Sl2r => (5.0 / 16.0, -0.25),
        other => {
            return Err(Error::Unsupported {
                op: "energy_geometric",
                geometry: other.to_string(),
            })
        }
    };
    Ok(0.25 * meas.integrate(|ix| h[ix] * h[ix] + a * khat[ix] + b))
}

/// `W = integral of (H^2 + Khat) dmu`.
pub fn willmore(h: &Array2<f64>, khat: &Array2<f64>, meas: &SurfaceMeasure) -> f64 {
    meas.integrate(|ix| h[ix] * h[ix] + khat[ix])
}

/// Principal curvatures of Euclidean spinor data, `H +- 2 |A| e^{-2 alpha}`.
pub fn principal_curvatures(psi: &SpinorField) -> Result<(Array2<f64>, Array2<f64>)> {
    let a = hopf_a(psi, HopfVariant::Codazzi)?;
    let ea = induced_metric(psi)?;
    let split = Zip::from(&a.a).and(&ea).map_collect(|a, e| 2.0 * a.norm() / (e * e));
    let k1 = Zip::from(&psi.h).and(&split).map_collect(|h, s| h + s);
    let k2 = Zip::from(&psi.h).and(&split).map_collect(|h, s| h - s);
    Ok((k1, k2))
}

/// Umbilic defect `1/4 integral of ((k1 - k2)/2)^2 dmu` and topological term `pi chi / 2`.
pub fn gauss_bonnet_decomposition(k1: &Array2<f64>, k2: &Array2<f64>, meas: &SurfaceMeasure) -> Result<(f64, f64)> {
    let chi = meas
        .chi
        .ok_or_else(|| Error::Config("Euler characteristic unknown".into()))?;
    let defect = 0.25 * meas.integrate(|ix| (0.5 * (k1[ix] - k2[ix])).powi(2));
    Ok((defect, std::f64::consts::PI * chi as f64 / 2.0))
}
