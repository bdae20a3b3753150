//! Spinor fields on a conformal grid, the `Z` factorization, the induced
//! metric and the group-specific Dirac potentials.

pub mod grid;
pub mod io;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Zip};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use grid::{Grid2D, Parity, Stencil};

use crate::error::{Error, Result};
use crate::liegeo::{self, christoffel, gmu_algebra, BianchiTag, CVec3, LieAlgebra3};

/// Ambient geometry for which potentials and differentials are known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    Euclidean,
    /// Unit three-sphere.
    Su2,
    Nil,
    Sl2r,
    Sol,
    Gmu(f64),
}

impl Geometry {
    /// Lie algebra in the basis used by the potentials.
    pub fn algebra(&self) -> LieAlgebra3 {
        match *self {
            Geometry::Euclidean => LieAlgebra3::abelian(),
            Geometry::Su2 => liegeo::bundle_algebra(2.0, 2.0),
            Geometry::Nil => liegeo::to_weierstrass_basis(
                &liegeo::bianchi_algebra(BianchiTag::II, 0.0).expect("table type"),
            ),
            // kappa = -1, tau = -1: the normalization behind the SL(2,R) potentials
            Geometry::Sl2r => liegeo::bundle_algebra(0.5, -2.0),
            Geometry::Sol => gmu_algebra(-1.0),
            Geometry::Gmu(mu) => gmu_algebra(mu),
        }
    }

    /// Whether the potentials are singular where `psi1 psi2 = 0`.
    pub fn has_pole_terms(&self) -> bool {
        match *self {
            Geometry::Sol => true,
            Geometry::Gmu(mu) => (mu - 1.0).abs() > 0.0,
            _ => false,
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::Euclidean => write!(f, "r3"),
            Geometry::Su2 => write!(f, "su2"),
            Geometry::Nil => write!(f, "nil"),
            Geometry::Sl2r => write!(f, "sl2r"),
            Geometry::Sol => write!(f, "sol"),
            Geometry::Gmu(mu) => write!(f, "gmu:{mu}"),
        }
    }
}

impl FromStr for Geometry {
    type Err = Error;

    /// Accepts `r3`, `su2`, `nil`, `sl2r`, `sol` and `gmu:<mu>`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if let Some(mu) = t.strip_prefix("gmu:").or_else(|| t.strip_prefix("gmu=")) {
            let mu: f64 = mu.parse().map_err(|_| Error::UnknownTag(s.to_string()))?;
            return Ok(Geometry::Gmu(mu));
        }
        Ok(match t.as_str() {
            "r3" | "e3" | "euclidean" => Geometry::Euclidean,
            "su2" | "s3" => Geometry::Su2,
            "nil" => Geometry::Nil,
            "sl2r" | "sl2" => Geometry::Sl2r,
            "sol" => Geometry::Sol,
            _ => return Err(Error::UnknownTag(s.to_string())),
        })
    }
}

/// The pair `(psi1, psi2)` with per-sample mean curvature and validity.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    pub grid: Grid2D,
    pub psi1: Array2<C64>,
    pub psi2: Array2<C64>,
    pub h: Array2<f64>,
    pub valid: Array2<bool>,
    /// Sign behaviour across periodic seams, per axis.
    pub parity: [Parity; 2],
}

impl SpinorField {
    pub fn new(grid: Grid2D, psi1: Array2<C64>, psi2: Array2<C64>, h: Array2<f64>) -> Result<Self> {
        grid.validate()?;
        grid.check(&psi1)?;
        grid.check(&psi2)?;
        grid.check(&h)?;
        Ok(SpinorField {
            grid,
            valid: Array2::from_elem(grid.shape(), true),
            psi1,
            psi2,
            h,
            parity: [Parity::Even; 2],
        })
    }

    /// Samples `psi(z)` and `H(z)`.
    pub fn from_fn(grid: Grid2D, f: impl Fn(C64) -> (C64, C64, f64)) -> Result<Self> {
        let vals = grid.sample(f);
        Self::new(
            grid,
            vals.mapv(|x| x.0),
            vals.mapv(|x| x.1),
            vals.mapv(|x| x.2),
        )
    }

    pub fn constant(grid: Grid2D, psi: (C64, C64), h: f64) -> Result<Self> {
        Self::from_fn(grid, |_| (psi.0, psi.1, h))
    }

    pub fn with_parity(mut self, parity: [Parity; 2]) -> Self {
        self.parity = parity;
        self
    }

    pub fn with_h(mut self, h: Array2<f64>) -> Result<Self> {
        self.grid.check(&h)?;
        self.h = h;
        Ok(self)
    }

    /// Recovers `psi` from tangent data `Z` by a continuous choice of square roots.
    ///
    /// `psi` is fixed by `Z` up to a global sign; the sign is propagated along
    /// the first column and then along each row. Across a periodic seam the
    /// result may change sign, which is recorded in [`SpinorField::parity`].
    pub fn from_z(grid: Grid2D, z: &[Array2<C64>; 3], h: Array2<f64>) -> Result<Self> {
        for c in z {
            grid.check(c)?;
        }
        let (nu, nv) = grid.shape();
        let mut a = Array2::zeros((nu, nv));
        let mut b = Array2::zeros((nu, nv));
        let candidate = |i: usize, j: usize| -> (C64, C64) {
            let (z1, z2, z3) = (z[0][(i, j)], z[1][(i, j)], z[2][(i, j)]);
            let s1 = (-C64::i() * z1 - z2).sqrt();
            let s2 = (-C64::i() * z1 + z2).sqrt();
            if s1.norm() >= s2.norm() {
                (s1, if s1.norm() > 0.0 { z3 / s1 } else { s2 })
            } else {
                (z3 / s2, s2)
            }
        };
        let pick = |c: (C64, C64), prev: (C64, C64)| -> (C64, C64) {
            let d_plus = (c.0 - prev.0).norm_sqr() + (c.1 - prev.1).norm_sqr();
            let d_minus = (c.0 + prev.0).norm_sqr() + (c.1 + prev.1).norm_sqr();
            if d_plus <= d_minus {
                c
            } else {
                (-c.0, -c.1)
            }
        };
        let c0 = candidate(0, 0);
        a[(0, 0)] = c0.0;
        b[(0, 0)] = c0.1;
        for i in 1..nu {
            let p = pick(candidate(i, 0), (a[(i - 1, 0)], b[(i - 1, 0)]));
            a[(i, 0)] = p.0;
            b[(i, 0)] = p.1;
        }
        for i in 0..nu {
            for j in 1..nv {
                let p = pick(candidate(i, j), (a[(i, j - 1)], b[(i, j - 1)]));
                a[(i, j)] = p.0;
                b[(i, j)] = p.1;
            }
        }
        let seam = |last: (C64, C64), first: (C64, C64)| -> Parity {
            let same = (last.0 - first.0).norm_sqr() + (last.1 - first.1).norm_sqr();
            let flip = (last.0 + first.0).norm_sqr() + (last.1 + first.1).norm_sqr();
            if flip < same {
                Parity::Odd
            } else {
                Parity::Even
            }
        };
        let mut parity = [Parity::Even; 2];
        if grid.periodic_u {
            parity[0] = seam((a[(nu - 1, 0)], b[(nu - 1, 0)]), (a[(0, 0)], b[(0, 0)]));
        }
        if grid.periodic_v {
            parity[1] = seam((a[(0, nv - 1)], b[(0, nv - 1)]), (a[(0, 0)], b[(0, 0)]));
        }
        let psi2 = b.mapv(|x: C64| x.conj());
        Ok(Self::new(grid, a, psi2, h)?.with_parity(parity))
    }
}

/// Dirac potentials with the geometry they were evaluated for.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    pub u: Array2<C64>,
    pub v: Array2<C64>,
    pub geometry: Geometry,
    pub valid: Array2<bool>,
}

/// Residual pair with the mask of samples on which it is meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual2 {
    pub r1: Array2<C64>,
    pub r2: Array2<C64>,
    pub valid: Array2<bool>,
}

impl Residual2 {
    /// Largest `max(|r1|, |r2|)` over valid samples at least `rings` away from open edges.
    pub fn max_norm(&self, grid: &Grid2D, rings: usize) -> f64 {
        let mut m: f64 = 0.0;
        for ((i, j), ok) in self.valid.indexed_iter() {
            if *ok && grid.is_interior(i, j, rings) {
                m = m.max(self.r1[(i, j)].norm()).max(self.r2[(i, j)].norm());
            }
        }
        m
    }
}

/// `Z1 = (i/2)(conj(psi2)^2 + psi1^2)`, `Z2 = (conj(psi2)^2 - psi1^2)/2`, `Z3 = psi1 conj(psi2)`.
pub fn factorize_z(psi: &SpinorField) -> [Array2<C64>; 3] {
    let half_i = C64::new(0.0, 0.5);
    let z1 = Zip::from(&psi.psi1)
        .and(&psi.psi2)
        .map_collect(|a, b| half_i * (b.conj() * b.conj() + a * a));
    let z2 = Zip::from(&psi.psi1)
        .and(&psi.psi2)
        .map_collect(|a, b| 0.5 * (b.conj() * b.conj() - a * a));
    let z3 = Zip::from(&psi.psi1)
        .and(&psi.psi2)
        .map_collect(|a, b| a * b.conj());
    [z1, z2, z3]
}

/// Pointwise version of [`factorize_z`].
pub fn z_of(psi1: C64, psi2: C64) -> CVec3 {
    let b = psi2.conj();
    [
        C64::new(0.0, 0.5) * (b * b + psi1 * psi1),
        0.5 * (b * b - psi1 * psi1),
        psi1 * b,
    ]
}

/// Samples with `e^alpha` below this value count as degenerate.
pub const DEGENERATE_METRIC: f64 = 1e-12;

/// `e^alpha = |psi1|^2 + |psi2|^2` without the degeneracy check.
pub fn metric_factor(psi: &SpinorField) -> Array2<f64> {
    Zip::from(&psi.psi1)
        .and(&psi.psi2)
        .map_collect(|a, b| a.norm_sqr() + b.norm_sqr())
}

/// `e^alpha = |psi1|^2 + |psi2|^2`; fails if a valid sample is degenerate.
pub fn induced_metric(psi: &SpinorField) -> Result<Array2<f64>> {
    let ea = metric_factor(psi);
    let count = Zip::from(&ea)
        .and(&psi.valid)
        .fold(0, |n, e, ok| n + usize::from(*ok && *e < DEGENERATE_METRIC));
    if count > 0 {
        return Err(Error::DegenerateMetric { count });
    }
    Ok(ea)
}

/// Unit normal in the orthonormal frame,
/// `n = (-2 Im(psi1 psi2), -2 Re(psi1 psi2), |psi2|^2 - |psi1|^2) / e^alpha`.
pub fn normal_of(psi1: C64, psi2: C64) -> [f64; 3] {
    let p = psi1 * psi2;
    let ea = psi1.norm_sqr() + psi2.norm_sqr();
    [-2.0 * p.im / ea, -2.0 * p.re / ea, (psi2.norm_sqr() - psi1.norm_sqr()) / ea]
}

/// Dirac potentials `(U, V)` at one sample.
///
/// Returns `None` where a pole term of Sol or `G_mu` is undefined.
pub fn potentials_at(geometry: Geometry, psi1: C64, psi2: C64, h: f64) -> Option<(C64, C64)> {
    let (a1, a2) = (psi1.norm_sqr(), psi2.norm_sqr());
    let base = C64::new(0.5 * h * (a1 + a2), 0.0);
    let i = C64::i();
    match geometry {
        Geometry::Euclidean => Some((base, base)),
        Geometry::Su2 => {
            let u = 0.5 * C64::new(h, -1.0) * (a1 + a2);
            Some((u, u.conj()))
        }
        Geometry::Nil => {
            let u = base + i * 0.25 * (a2 - a1);
            Some((u, u))
        }
        Geometry::Sl2r => Some((
            base + i * (0.5 * a1 - 0.75 * a2),
            base + i * (0.75 * a1 - 0.5 * a2),
        )),
        Geometry::Sol => gmu_potentials(-1.0, psi1, psi2, base),
        Geometry::Gmu(mu) => gmu_potentials(mu, psi1, psi2, base),
    }
}

fn gmu_potentials(mu: f64, psi1: C64, psi2: C64, base: C64) -> Option<(C64, C64)> {
    let p = 0.25 * (mu + 1.0);
    let m = 0.25 * (mu - 1.0);
    let (a1, a2) = (psi1.norm_sqr(), psi2.norm_sqr());
    if m == 0.0 {
        return Some((base + p * a1, base - p * a2));
    }
    let scale = (a1 + a2).max(f64::MIN_POSITIVE);
    if a1 <= 1e-24 * scale || a2 <= 1e-24 * scale || a1 + a2 < DEGENERATE_METRIC {
        return None;
    }
    let (c1, c2) = (psi1.conj(), psi2.conj());
    Some((
        base + p * a1 + m * c2 * c2 * c1 / psi1,
        base - p * a2 - m * c1 * c1 * c2 / psi2,
    ))
}

/// Group-specific Dirac potentials on every sample.
///
/// Where Sol or `G_mu` (`mu != 1`) pole terms are undefined (`psi1 psi2 = 0`)
/// `U = V = 0` and the sample is masked.
pub fn potentials(psi: &SpinorField, geometry: Geometry) -> PotentialField {
    let shape = psi.grid.shape();
    let mut u = Array2::zeros(shape);
    let mut v = Array2::zeros(shape);
    let mut valid = psi.valid.clone();
    for ((i, j), ok) in valid.indexed_iter_mut() {
        match potentials_at(geometry, psi.psi1[(i, j)], psi.psi2[(i, j)], psi.h[(i, j)]) {
            Some((a, b)) => {
                u[(i, j)] = a;
                v[(i, j)] = b;
            }
            None => *ok = false,
        }
    }
    PotentialField {
        u,
        v,
        geometry,
        valid,
    }
}

/// Potentials derived from the frame equations of an arbitrary left-invariant
/// metric (structure constants in the Weierstrass basis).
///
/// With `W = e^{2 alpha} H n / 2 - nabla_{conj Psi} Psi` the Dirac equation
/// turns `dbar Z = W` into three linear equations for `(V, conj U)`, which are
/// solved in the least-squares sense (they are consistent for every `psi`).
pub fn potentials_from_frame(alg: &LieAlgebra3, psi1: C64, psi2: C64, h: f64) -> Option<(C64, C64)> {
    let conn = christoffel(alg);
    let z = z_of(psi1, psi2);
    let zb = [z[0].conj(), z[1].conj(), z[2].conj()];
    let nab = conn.nabla_c(&zb, &z);
    let n = normal_of(psi1, psi2);
    let ea = psi1.norm_sqr() + psi2.norm_sqr();
    if ea < DEGENERATE_METRIC {
        return None;
    }
    let w: [C64; 3] = std::array::from_fn(|k| 0.5 * ea * ea * h * n[k] - nab[k]);
    let p = psi1 * psi2;
    let q = p.conj();
    let i = C64::i();
    let a = [
        [i * p, -i * q],
        [-p, -q],
        [C64::new(psi2.norm_sqr(), 0.0), C64::new(-psi1.norm_sqr(), 0.0)],
    ];
    // normal equations of the 3x2 system
    let mut m = [[C64::new(0.0, 0.0); 2]; 2];
    let mut r = [C64::new(0.0, 0.0); 2];
    for row in 0..3 {
        for c in 0..2 {
            r[c] += a[row][c].conj() * w[row];
            for d in 0..2 {
                m[c][d] += a[row][c].conj() * a[row][d];
            }
        }
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.norm() < 1e-30 {
        return None;
    }
    let vv = (r[0] * m[1][1] - m[0][1] * r[1]) / det;
    let ub = (m[0][0] * r[1] - m[1][0] * r[0]) / det;
    Some((ub.conj(), vv))
}

/// Rows of the Dirac operator: `r1 = d psi2 + U psi1`, `r2 = -dbar psi1 + V psi2`.
pub fn dirac_residual(psi: &SpinorField, pot: &PotentialField) -> Result<Residual2> {
    let g = &psi.grid;
    g.check(&pot.u)?;
    let d_psi2 = g.d_z_with(&psi.psi2, psi.parity)?;
    let db_psi1 = g.d_zbar_with(&psi.psi1, psi.parity)?;
    let mut r1 = Array2::zeros(g.shape());
    let mut r2 = Array2::zeros(g.shape());
    Zip::from(&mut r1)
        .and(&d_psi2)
        .and(&pot.u)
        .and(&psi.psi1)
        .for_each(|r, d, u, p| *r = d + u * p);
    Zip::from(&mut r2)
        .and(&db_psi1)
        .and(&pot.v)
        .and(&psi.psi2)
        .for_each(|r, d, v, p| *r = -d + v * p);
    let mask = Zip::from(&pot.valid).and(&psi.valid).map_collect(|a, b| *a && *b);
    Ok(Residual2 {
        r1,
        r2,
        valid: g.erode(&mask),
    })
}

/// `psi* = (-conj psi2, conj psi1)`; applying it twice gives `-psi`.
pub fn quaternion_flip(psi: &SpinorField) -> SpinorField {
    SpinorField {
        psi1: psi.psi2.mapv(|x| -x.conj()),
        psi2: psi.psi1.mapv(|x| x.conj()),
        ..psi.clone()
    }
}
