//! Three-dimensional real Lie algebras with a left-invariant metric.
//!
//! Every algebra is stored through its structure constants in an orthonormal
//! frame, `c[k][i][j] = c^k_{ij}` with `[e_i, e_j] = c^k_{ij} e_k`. From them we
//! derive the Levi-Civita connection, the curvature tensor and the sectional
//! curvature of tangent planes, and a faithful matrix model used to integrate
//! `f_z = f Psi`.
//!
//! Two bases matter. The *table* basis is the one of the Bianchi list, where
//! the distinguished direction of types II, VI0 and VII0 is `e1`. The
//! *Weierstrass* basis is the one in which the Dirac potentials are written: for
//! Nil and the universal cover of SL(2,R) the axis of the rotational isometry
//! is `e3`, for Sol `e3` is normal to the minimal leaves.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2, Matrix3, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::Deserialize;

use crate::error::{Error, Result};

/// Structure constants, `c[k][i][j] = c^k_{ij}`.
pub type StructureConstants = [[[f64; 3]; 3]; 3];
/// Real frame vector in the orthonormal basis.
pub type Vec3 = [f64; 3];
/// Complexified frame vector.
pub type CVec3 = [C64; 3];

const ZERO_TOL: f64 = 1e-10;

/// Isomorphism classes of real three-dimensional Lie algebras.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BianchiType {
    I,
    II,
    III,
    IV,
    V,
    VI0,
    /// `VI_a`, `0 < a < inf`, `a != 1`.
    VIa(f64),
    VII0,
    /// `VII_a`, `a > 0`.
    VIIa(f64),
    VIII,
    IX,
}

impl BianchiType {
    /// Row `(a, b1, b2, b3)` of the classification table.
    pub fn table_row(self) -> (f64, f64, f64, f64) {
        match self {
            BianchiType::I => (0.0, 0.0, 0.0, 0.0),
            BianchiType::II => (0.0, 1.0, 0.0, 0.0),
            BianchiType::III => (1.0, 0.0, 1.0, -1.0),
            BianchiType::IV => (1.0, 0.0, 0.0, 1.0),
            BianchiType::V => (1.0, 0.0, 0.0, 0.0),
            BianchiType::VI0 => (0.0, 1.0, -1.0, 0.0),
            BianchiType::VIa(a) => (a, 0.0, 1.0, -1.0),
            BianchiType::VII0 => (0.0, 1.0, 1.0, 0.0),
            BianchiType::VIIa(a) => (a, 0.0, 1.0, 1.0),
            BianchiType::VIII => (0.0, 1.0, 1.0, -1.0),
            BianchiType::IX => (0.0, 1.0, 1.0, 1.0),
        }
    }

    /// Same class, ignoring the parameter of `VI_a` / `VII_a` up to `tol`.
    pub fn same_class(self, other: BianchiType, tol: f64) -> bool {
        match (self, other) {
            (BianchiType::VIa(a), BianchiType::VIa(b)) | (BianchiType::VIIa(a), BianchiType::VIIa(b)) => {
                (a - b).abs() <= tol * a.abs().max(1.0)
            }
            (x, y) => std::mem::discriminant(&x) == std::mem::discriminant(&y),
        }
    }
}

impl fmt::Display for BianchiType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BianchiType::I => write!(f, "I"),
            BianchiType::II => write!(f, "II"),
            BianchiType::III => write!(f, "III"),
            BianchiType::IV => write!(f, "IV"),
            BianchiType::V => write!(f, "V"),
            BianchiType::VI0 => write!(f, "VI0"),
            BianchiType::VIa(a) => write!(f, "VI_a(a={a})"),
            BianchiType::VII0 => write!(f, "VII0"),
            BianchiType::VIIa(a) => write!(f, "VII_a(a={a})"),
            BianchiType::VIII => write!(f, "VIII"),
            BianchiType::IX => write!(f, "IX"),
        }
    }
}

/// Tag accepted on the command line and in configuration files. Parameterized
/// types carry no parameter yet; pass it to [`bianchi_algebra`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BianchiTag {
    I,
    II,
    III,
    IV,
    V,
    VI0,
    VIa,
    VII0,
    VIIa,
    VIII,
    IX,
}

impl FromStr for BianchiTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase().replace(['_', '-', ' '], "");
        Ok(match t.as_str() {
            "i" | "1" | "r3" | "euclidean" => BianchiTag::I,
            "ii" | "2" | "nil" => BianchiTag::II,
            "iii" | "3" => BianchiTag::III,
            "iv" | "4" => BianchiTag::IV,
            "v" | "5" => BianchiTag::V,
            "vi0" | "sol" => BianchiTag::VI0,
            "via" => BianchiTag::VIa,
            "vii0" | "e2" => BianchiTag::VII0,
            "viia" => BianchiTag::VIIa,
            "viii" | "8" | "sl2r" => BianchiTag::VIII,
            "ix" | "9" | "su2" => BianchiTag::IX,
            _ => return Err(Error::UnknownTag(s.to_string())),
        })
    }
}

/// Which orthonormal basis the constants are written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    #[default]
    Table,
    Weierstrass,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlgebraLabel {
    Bianchi(BianchiType),
    /// The solvable family with `[e1,e2]=0, [e3,e1]=mu e1, [e3,e2]=e2`.
    Gmu(f64),
    /// Semidirect product built from `ad_eta xi = A xi`.
    Extension([[f64; 2]; 2]),
    Custom,
}

impl fmt::Display for AlgebraLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgebraLabel::Bianchi(t) => write!(f, "{t}"),
            AlgebraLabel::Gmu(mu) => write!(f, "G_mu(mu={mu})"),
            AlgebraLabel::Extension(a) => write!(f, "extension(A={a:?})"),
            AlgebraLabel::Custom => write!(f, "custom"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebra3 {
    pub c: StructureConstants,
    pub label: AlgebraLabel,
    /// Factor the bracket has been multiplied by.
    pub scale: f64,
    pub basis: Basis,
    /// Set when a parameter lies outside its documented range but was accepted.
    pub warning: Option<String>,
}

impl LieAlgebra3 {
    /// Builds an algebra from raw constants, checking antisymmetry and Jacobi.
    pub fn from_constants(c: StructureConstants, label: AlgebraLabel) -> Result<Self> {
        let alg = LieAlgebra3 {
            c,
            label,
            scale: 1.0,
            basis: Basis::Table,
            warning: None,
        };
        let norm = alg.norm().max(1.0);
        if alg.antisymmetry_residual() > 1e-12 * norm {
            return Err(Error::Config("structure constants are not antisymmetric".into()));
        }
        if alg.jacobi_residual() > 1e-10 * norm * norm {
            return Err(Error::Config("structure constants violate the Jacobi identity".into()));
        }
        Ok(alg)
    }

    pub fn abelian() -> Self {
        LieAlgebra3 {
            c: [[[0.0; 3]; 3]; 3],
            label: AlgebraLabel::Bianchi(BianchiType::I),
            scale: 1.0,
            basis: Basis::Table,
            warning: None,
        }
    }

    fn norm(&self) -> f64 {
        self.c.iter().flatten().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn bracket(&self, x: &Vec3, y: &Vec3) -> Vec3 {
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            for i in 0..3 {
                for j in 0..3 {
                    *o += self.c[k][i][j] * x[i] * y[j];
                }
            }
        }
        out
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    r = r.max((self.c[k][i][j] + self.c[k][j][i]).abs());
                }
            }
        }
        r
    }

    /// Largest component of `[[x,y],z] + [[y,z],x] + [[z,x],y]` over basis triples.
    pub fn jacobi_residual(&self) -> f64 {
        let e = basis_vectors();
        let mut r: f64 = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                for d in 0..3 {
                    let t1 = self.bracket(&self.bracket(&e[a], &e[b]), &e[d]);
                    let t2 = self.bracket(&self.bracket(&e[b], &e[d]), &e[a]);
                    let t3 = self.bracket(&self.bracket(&e[d], &e[a]), &e[b]);
                    for k in 0..3 {
                        r = r.max((t1[k] + t2[k] + t3[k]).abs());
                    }
                }
            }
        }
        r
    }

    /// Multiplies the bracket by `s` (a homothety of the metric by `1/s`).
    pub fn scaled(mut self, s: f64) -> Self {
        for v in self.c.iter_mut().flatten().flatten() {
            *v *= s;
        }
        self.scale *= s;
        self
    }

    /// Re-expresses the algebra in the orthonormal basis `e'_a = sum_i R[(i, a)] e_i`.
    /// `r` must be orthogonal.
    pub fn transformed(&self, r: &Matrix3<f64>) -> Self {
        let mut c = [[[0.0; 3]; 3]; 3];
        for (cc, a, b) in triples() {
            let mut s = 0.0;
            for (k, i, j) in triples() {
                s += r[(i, a)] * r[(j, b)] * r[(k, cc)] * self.c[k][i][j];
            }
            c[cc][a][b] = s;
        }
        LieAlgebra3 { c, ..self.clone() }
    }

    /// Trace form `a_i = tr ad_{e_i}`; zero exactly for unimodular algebras.
    pub fn trace_form(&self) -> Vec3 {
        let mut a = [0.0; 3];
        for (i, ai) in a.iter_mut().enumerate() {
            *ai = (0..3).map(|k| self.c[k][i][k]).sum();
        }
        a
    }

    /// Isomorphism class read off the structure constants.
    pub fn classify(&self) -> BianchiType {
        let a = self.trace_form();
        let an = norm3(&a);
        let scale = self.norm().max(1e-300);
        if an <= ZERO_TOL * scale {
            return self.classify_unimodular();
        }
        // Class B: ker(a) is an abelian ideal, eta is dual to a.
        let eta = [a[0] / (an * an), a[1] / (an * an), a[2] / (an * an)];
        let (u1, u2) = complement_basis(&[a[0] / an, a[1] / an, a[2] / an]);
        let ad = |x: &Vec3| self.bracket(&eta, x);
        let m = Matrix2::new(
            dot3(&u1, &ad(&u1)),
            dot3(&u1, &ad(&u2)),
            dot3(&u2, &ad(&u1)),
            dot3(&u2, &ad(&u2)),
        );
        classify_extension_matrix(&m)
    }

    fn classify_unimodular(&self) -> BianchiType {
        // [e_i, e_j] = eps_{ijl} N^{lk} e_k
        let mut n = Matrix3::zeros();
        for l in 0..3 {
            for k in 0..3 {
                let mut s = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        s += levi_civita(i, j, l) * self.c[k][i][j];
                    }
                }
                n[(l, k)] = 0.5 * s;
            }
        }
        let sym = 0.5 * (n + n.transpose());
        let eig = SymmetricEigen::new(sym).eigenvalues;
        let big = eig.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let tol = ZERO_TOL * big.max(1e-300);
        let pos = eig.iter().filter(|x| **x > tol).count();
        let neg = eig.iter().filter(|x| **x < -tol).count();
        let (p, q) = if pos >= neg { (pos, neg) } else { (neg, pos) };
        match (p, q) {
            (0, 0) => BianchiType::I,
            (1, 0) => BianchiType::II,
            (1, 1) => BianchiType::VI0,
            (2, 0) => BianchiType::VII0,
            (2, 1) => BianchiType::VIII,
            _ => BianchiType::IX,
        }
    }
}

fn classify_extension_matrix(m: &Matrix2<f64>) -> BianchiType {
    let scale = m.abs().max().max(1e-300);
    let tol = 1e-9 * scale;
    if m.abs().max() <= tol {
        return BianchiType::I;
    }
    let tr = m.trace();
    let det = m.determinant();
    let disc = tr * tr - 4.0 * det;
    if tr.abs() <= tol {
        if det.abs() <= tol * scale {
            return BianchiType::II;
        }
        return if det < 0.0 {
            BianchiType::VI0
        } else {
            BianchiType::VII0
        };
    }
    if disc.abs() <= tol * scale {
        let half = 0.5 * tr;
        let off = (m - Matrix2::identity() * half).abs().max();
        return if off <= tol {
            BianchiType::V
        } else {
            BianchiType::IV
        };
    }
    if disc > 0.0 {
        let s = disc.sqrt();
        let (l1, l2) = (0.5 * (tr + s), 0.5 * (tr - s));
        if l1.abs() <= tol || l2.abs() <= tol {
            return BianchiType::III;
        }
        let a = (l1 + l2).abs() / (l1 - l2).abs();
        if (a - 1.0).abs() <= 1e-9 {
            BianchiType::III
        } else {
            BianchiType::VIa(a)
        }
    } else {
        BianchiType::VIIa((0.5 * tr).abs() / (0.5 * (-disc).sqrt()))
    }
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

fn triples() -> impl Iterator<Item = (usize, usize, usize)> {
    (0..3).flat_map(|a| (0..3).flat_map(move |b| (0..3).map(move |c| (a, b, c))))
}

fn basis_vectors() -> [Vec3; 3] {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

pub fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm3(a: &Vec3) -> f64 {
    dot3(a, a).sqrt()
}

pub fn cross3(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Orthonormal pair spanning the plane orthogonal to the unit vector `n`,
/// oriented so that `(u1, u2, n)` is positive.
fn complement_basis(n: &Vec3) -> (Vec3, Vec3) {
    let pick = if n[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let d = dot3(&pick, n);
    let mut u1 = [pick[0] - d * n[0], pick[1] - d * n[1], pick[2] - d * n[2]];
    let l = norm3(&u1);
    u1.iter_mut().for_each(|x| *x /= l);
    let u2 = cross3(n, &u1);
    (u1, u2)
}

/// Algebra of the given Bianchi type in the table basis.
///
/// `a` is only read for `VI_a` (`0 < a`, `a != 1`) and `VII_a` (`a > 0`).
pub fn bianchi_algebra(tag: BianchiTag, a: f64) -> Result<LieAlgebra3> {
    let ty = match tag {
        BianchiTag::I => BianchiType::I,
        BianchiTag::II => BianchiType::II,
        BianchiTag::III => BianchiType::III,
        BianchiTag::IV => BianchiType::IV,
        BianchiTag::V => BianchiType::V,
        BianchiTag::VI0 => BianchiType::VI0,
        BianchiTag::VIa => {
            if !(a > 0.0 && a.is_finite()) || (a - 1.0).abs() < 1e-12 {
                return Err(Error::OutOfRange {
                    name: "a",
                    value: a,
                    reason: "VI_a needs 0 < a < inf and a != 1",
                });
            }
            BianchiType::VIa(a)
        }
        BianchiTag::VII0 => BianchiType::VII0,
        BianchiTag::VIIa => {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::OutOfRange {
                    name: "a",
                    value: a,
                    reason: "VII_a needs a > 0",
                });
            }
            BianchiType::VIIa(a)
        }
        BianchiTag::VIII => BianchiType::VIII,
        BianchiTag::IX => BianchiType::IX,
    };
    Ok(bianchi_from_type(ty))
}

/// Algebra of a classified type in the table basis.
pub fn bianchi_from_type(ty: BianchiType) -> LieAlgebra3 {
    let (a, b1, b2, b3) = ty.table_row();
    let mut c = [[[0.0; 3]; 3]; 3];
    let mut set = |i: usize, j: usize, v: Vec3| {
        for k in 0..3 {
            c[k][i][j] = v[k];
            c[k][j][i] = -v[k];
        }
    };
    // [e1,e2] = a e2 + b3 e3, [e1,e3] = a e3 - b2 e2, [e2,e3] = b1 e1
    set(0, 1, [0.0, a, b3]);
    set(0, 2, [0.0, -b2, a]);
    set(1, 2, [b1, 0.0, 0.0]);
    LieAlgebra3 {
        c,
        label: AlgebraLabel::Bianchi(ty),
        scale: 1.0,
        basis: Basis::Table,
        warning: None,
    }
}

/// The algebra of `G_mu`: `[e1,e2] = 0`, `[e3,e1] = mu e1`, `[e3,e2] = e2`.
///
/// The family is nondegenerate for `-1 <= mu <= 1`; other values are accepted
/// and flagged through [`LieAlgebra3::warning`].
pub fn gmu_algebra(mu: f64) -> LieAlgebra3 {
    let mut alg = adjoint_extension([[mu, 0.0], [0.0, 1.0]]);
    alg.label = AlgebraLabel::Gmu(mu);
    alg.basis = Basis::Weierstrass;
    if !(-1.0..=1.0).contains(&mu) {
        alg.warning = Some(format!("mu = {mu} lies outside [-1, 1]"));
    }
    alg
}

/// Semidirect product `R^2 x| R` with `[e3, xi] = A xi` on the abelian ideal
/// `span(e1, e2)`.
pub fn adjoint_extension(a: [[f64; 2]; 2]) -> LieAlgebra3 {
    let mut c = [[[0.0; 3]; 3]; 3];
    for n in 0..2 {
        for m in 0..2 {
            // [e3, e_n] = sum_m A[m][n] e_m
            c[m][2][n] = a[m][n];
            c[m][n][2] = -a[m][n];
        }
    }
    LieAlgebra3 {
        c,
        label: AlgebraLabel::Extension(a),
        scale: 1.0,
        basis: Basis::Table,
        warning: None,
    }
}

/// Algebra of a homogeneous bundle metric: `[e2,e3] = b e1`, `[e3,e1] = b e2`,
/// `[e1,e2] = c e3`. Base curvature `kappa = b c`, bundle curvature `tau = c/2`.
///
/// `(b, c) = (0, 1)` is Nil, `(2, 2)` the unit three-sphere and `(1/2, -2)`
/// the metric on the universal cover of SL(2,R) used by the Dirac potentials.
pub fn bundle_algebra(b: f64, c: f64) -> LieAlgebra3 {
    let mut k = [[[0.0; 3]; 3]; 3];
    let mut set = |i: usize, j: usize, l: usize, v: f64| {
        k[l][i][j] = v;
        k[l][j][i] = -v;
    };
    set(1, 2, 0, b);
    set(2, 0, 1, b);
    set(0, 1, 2, c);
    let ty = match (b.abs() > ZERO_TOL, c.abs() > ZERO_TOL) {
        (false, false) => BianchiType::I,
        (false, true) | (true, false) => BianchiType::II,
        _ if b * c > 0.0 => BianchiType::IX,
        _ => BianchiType::VIII,
    };
    let mut alg = LieAlgebra3 {
        c: k,
        label: AlgebraLabel::Bianchi(ty),
        scale: 1.0,
        basis: Basis::Weierstrass,
        warning: None,
    };
    if b.abs() > ZERO_TOL && c.abs() <= ZERO_TOL {
        alg.label = AlgebraLabel::Custom;
    }
    alg
}

/// Table-basis algebra re-expressed in the basis used by the Dirac potentials.
pub fn to_weierstrass_basis(alg: &LieAlgebra3) -> LieAlgebra3 {
    let ty = match alg.label {
        AlgebraLabel::Bianchi(t) => t,
        _ => return LieAlgebra3 { basis: Basis::Weierstrass, ..alg.clone() },
    };
    let r = match ty {
        // e1' = e2, e2' = e3, e3' = e1: [e1', e2'] = e3'.
        BianchiType::II => Matrix3::new(0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0),
        // Diagonalize ad_{e3} with e3 kept: e1' = (e1+e2)/sqrt2, e2' = (e2-e1)/sqrt2.
        BianchiType::VI0 => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            Matrix3::new(s, -s, 0.0, s, s, 0.0, 0.0, 0.0, 1.0)
        }
        _ => Matrix3::identity(),
    };
    let mut out = alg.transformed(&r);
    out.basis = Basis::Weierstrass;
    out
}

/// Levi-Civita connection of a left-invariant metric in an orthonormal frame,
/// `gamma[i][j][k] = Gamma^i_{jk}` with `nabla_{e_k} e_j = Gamma^i_{jk} e_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection3 {
    pub gamma: [[[f64; 3]; 3]; 3],
}

impl Connection3 {
    /// `nabla_X Y` for left-invariant fields with constant frame components.
    pub fn nabla(&self, x: &Vec3, y: &Vec3) -> Vec3 {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            for j in 0..3 {
                for k in 0..3 {
                    *o += self.gamma[i][j][k] * x[k] * y[j];
                }
            }
        }
        out
    }

    /// Complex-linear extension of [`Connection3::nabla`].
    pub fn nabla_c(&self, x: &CVec3, y: &CVec3) -> CVec3 {
        let mut out = [C64::new(0.0, 0.0); 3];
        for (i, o) in out.iter_mut().enumerate() {
            for j in 0..3 {
                for k in 0..3 {
                    let g = self.gamma[i][j][k];
                    if g != 0.0 {
                        *o += x[k] * y[j] * g;
                    }
                }
            }
        }
        out
    }

    /// Largest `|Gamma^i_{jk} + Gamma^j_{ik}|`; zero for a metric connection.
    pub fn metric_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for (i, j, k) in triples() {
            r = r.max((self.gamma[i][j][k] + self.gamma[j][i][k]).abs());
        }
        r
    }
}

pub fn christoffel(alg: &LieAlgebra3) -> Connection3 {
    let c = &alg.c;
    let mut gamma = [[[0.0; 3]; 3]; 3];
    for (i, j, k) in triples() {
        gamma[i][j][k] = 0.5 * (c[i][k][j] + c[j][i][k] + c[k][i][j]);
    }
    Connection3 { gamma }
}

/// `r[i][j][k][l] = <R(e_i, e_j) e_k, e_l>` with
/// `R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curvature {
    pub r: [[[[f64; 3]; 3]; 3]; 3],
}

impl Curvature {
    /// Largest violation of the algebraic curvature symmetries.
    pub fn symmetry_residual(&self) -> f64 {
        let r = &self.r;
        let mut m: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        m = m.max((r[i][j][k][l] + r[j][i][k][l]).abs());
                        m = m.max((r[i][j][k][l] + r[i][j][l][k]).abs());
                        m = m.max((r[i][j][k][l] - r[k][l][i][j]).abs());
                        m = m.max((r[i][j][k][l] + r[j][k][i][l] + r[k][i][j][l]).abs());
                    }
                }
            }
        }
        m
    }

    /// `<R(X,Y)Y, X>`.
    pub fn contract(&self, x: &Vec3, y: &Vec3) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        s += self.r[i][j][k][l] * x[i] * y[j] * y[k] * x[l];
                    }
                }
            }
        }
        s
    }
}

pub fn curvature_tensor(alg: &LieAlgebra3) -> Curvature {
    let g = christoffel(alg).gamma;
    let c = &alg.c;
    let mut r = [[[[0.0; 3]; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for n in 0..3 {
                    let mut s = 0.0;
                    for m in 0..3 {
                        s += g[m][k][j] * g[n][m][i] - g[m][k][i] * g[n][m][j];
                    }
                    for l in 0..3 {
                        s -= c[l][i][j] * g[n][k][l];
                    }
                    r[i][j][k][n] = s;
                }
            }
        }
    }
    Curvature { r }
}

/// Sectional curvature of the plane spanned by `x` and `y`.
pub fn sectional_curvature(alg: &LieAlgebra3, x: &Vec3, y: &Vec3) -> Result<f64> {
    sectional_curvature_with(&curvature_tensor(alg), x, y)
}

/// Same as [`sectional_curvature`] with a precomputed tensor.
pub fn sectional_curvature_with(curv: &Curvature, x: &Vec3, y: &Vec3) -> Result<f64> {
    let den = dot3(x, x) * dot3(y, y) - dot3(x, y).powi(2);
    if den < 1e-14 {
        return Err(Error::DegeneratePlane);
    }
    Ok(curv.contract(x, y) / den)
}

/// Sectional curvature of the plane with unit normal `n`.
pub fn sectional_curvature_normal(curv: &Curvature, n: &Vec3) -> Result<f64> {
    let l = norm3(n);
    if l < 1e-12 {
        return Err(Error::DegeneratePlane);
    }
    let (u1, u2) = complement_basis(&[n[0] / l, n[1] / l, n[2] / l]);
    sectional_curvature_with(curv, &u1, &u2)
}

/// Faithful matrix realizations of the simply connected groups.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    /// Unipotent 3x3 matrices; `[e_a, e_b] = lambda e_c`.
    Heisenberg { a: usize, b: usize, c: usize, lambda: f64 },
    /// 4x4 matrices `[[exp(tA), 0, s], [0, 1, t], [0, 0, 1]]` of a semidirect
    /// product with generator `e_g` and abelian ideal `span(e_p, e_q)`.
    Affine { g: usize, p: usize, q: usize, a: [[f64; 2]; 2] },
    /// 2x2 unitary; `e1, e2` map to `horizontal * E1, E2` and `e3` to
    /// `vertical * E3` for the standard basis `E_k = -(i/2) sigma_k`.
    Su2 { horizontal: f64, vertical: f64 },
    /// 2x2 real unimodular, scaled the same way from `E1 = diag(1,-1)/2`,
    /// `E2 = [[0,1],[1,0]]/2`, `E3 = [[0,-1],[1,0]]/2`.
    /// Elements carry a winding counter for the universal cover.
    Sl2 { horizontal: f64, vertical: f64 },
}

/// Element of a matrix model.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    pub m: DMatrix<C64>,
    /// Number of full turns of the SL(2,R) rotation angle (zero elsewhere).
    pub winding: i64,
}

/// Coordinate map read off group matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Chart {
    /// Per-model coordinates: exponential coordinates for Nil, `(s, t)` for
    /// affine models, stereographic projection for SU(2), matrix entries for SL(2,R).
    #[default]
    Native,
    /// Real parts of three matrix entries.
    Entries([(usize, usize); 3]),
}

#[derive(Debug, Clone)]
pub struct MatrixModel {
    pub kind: ModelKind,
    pub basis: [DMatrix<C64>; 3],
    gram_inv: Matrix3<f64>,
}

fn cm(n: usize, entries: &[(usize, usize, C64)]) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(n, n);
    for &(i, j, v) in entries {
        m[(i, j)] = v;
    }
    m
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

impl MatrixModel {
    /// Finds a model for `alg`, verifying every commutator against `alg.c`.
    pub fn for_algebra(alg: &LieAlgebra3) -> Result<Self> {
        let candidates = [
            Self::try_heisenberg(alg),
            Self::try_affine(alg),
            Self::try_su2(alg),
            Self::try_sl2(alg),
        ];
        for cand in candidates.into_iter().flatten() {
            if cand.bracket_residual(alg) < 1e-10 * alg.norm().max(1.0) {
                return Ok(cand);
            }
        }
        Err(Error::NoModel(alg.label.to_string()))
    }

    fn build(kind: ModelKind, basis: [DMatrix<C64>; 3]) -> Self {
        let mut gram = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                gram[(i, j)] = basis[i].dotc(&basis[j]).re;
            }
        }
        let gram_inv = gram.try_inverse().expect("model basis is linearly independent");
        MatrixModel {
            kind,
            basis,
            gram_inv,
        }
    }

    fn try_heisenberg(alg: &LieAlgebra3) -> Option<Self> {
        if alg.classify() != BianchiType::II {
            return None;
        }
        for (a, b, c) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let lambda = alg.c[c][a][b];
            if lambda.abs() > ZERO_TOL {
                let mut basis = [cm(3, &[]), cm(3, &[]), cm(3, &[])];
                basis[a] = cm(3, &[(0, 1, re(1.0))]);
                basis[b] = cm(3, &[(1, 2, re(1.0))]);
                basis[c] = cm(3, &[(0, 2, re(1.0 / lambda))]);
                return Some(Self::build(ModelKind::Heisenberg { a, b, c, lambda }, basis));
            }
        }
        None
    }

    fn try_affine(alg: &LieAlgebra3) -> Option<Self> {
        for (g, p, q) in [(2, 0, 1), (0, 1, 2), (1, 2, 0)] {
            let c = &alg.c;
            let ideal_abelian = (0..3).all(|k| c[k][p][q].abs() <= ZERO_TOL);
            let invariant = c[g][g][p].abs() <= ZERO_TOL && c[g][g][q].abs() <= ZERO_TOL;
            if !(ideal_abelian && invariant) {
                continue;
            }
            let idx = [p, q];
            let mut a = [[0.0; 2]; 2];
            for m in 0..2 {
                for n in 0..2 {
                    a[m][n] = c[idx[m]][g][idx[n]];
                }
            }
            let mut basis = [cm(4, &[]), cm(4, &[]), cm(4, &[])];
            basis[p] = cm(4, &[(0, 3, re(1.0))]);
            basis[q] = cm(4, &[(1, 3, re(1.0))]);
            basis[g] = cm(
                4,
                &[
                    (0, 0, re(a[0][0])),
                    (0, 1, re(a[0][1])),
                    (1, 0, re(a[1][0])),
                    (1, 1, re(a[1][1])),
                    (2, 3, re(1.0)),
                ],
            );
            return Some(Self::build(ModelKind::Affine { g, p, q, a }, basis));
        }
        None
    }

    /// `[e2,e3] = b e1, [e3,e1] = b e2, [e1,e2] = c e3` with `b > 0` and `c != 0`:
    /// SU(2) for `c > 0`, SL(2,R) for `c < 0`.
    fn bundle_constants(alg: &LieAlgebra3) -> Option<(f64, f64)> {
        let b = alg.c[0][1][2];
        let c = alg.c[2][0][1];
        ((b - alg.c[1][2][0]).abs() <= ZERO_TOL && b > ZERO_TOL && c.abs() > ZERO_TOL).then_some((b, c))
    }

    fn try_su2(alg: &LieAlgebra3) -> Option<Self> {
        let (b, c) = Self::bundle_constants(alg)?;
        if c < 0.0 {
            return None;
        }
        // B1 = a E1, B2 = a E2, B3 = b E3 with E_k = -(i/2) sigma_k and a^2 = b c
        let a = (b * c).sqrt();
        let i = C64::new(0.0, 1.0);
        let e = |x: f64| -i * (x / 2.0);
        let basis = [
            cm(2, &[(0, 1, e(a)), (1, 0, e(a))]),
            cm(2, &[(0, 1, -e(a) * i), (1, 0, e(a) * i)]),
            cm(2, &[(0, 0, e(b)), (1, 1, -e(b))]),
        ];
        Some(Self::build(ModelKind::Su2 { horizontal: a, vertical: b }, basis))
    }

    fn try_sl2(alg: &LieAlgebra3) -> Option<Self> {
        let (b, c) = Self::bundle_constants(alg)?;
        if c > 0.0 {
            return None;
        }
        // E1 = diag(1,-1)/2, E2 = [[0,1],[1,0]]/2, E3 = [[0,-1],[1,0]]/2;
        // B1 = a E1, B2 = a E2, B3 = b E3 with a^2 = -b c
        let a = (-b * c).sqrt();
        let basis = [
            cm(2, &[(0, 0, re(a / 2.0)), (1, 1, re(-a / 2.0))]),
            cm(2, &[(0, 1, re(a / 2.0)), (1, 0, re(a / 2.0))]),
            cm(2, &[(0, 1, re(-b / 2.0)), (1, 0, re(b / 2.0))]),
        ];
        Some(Self::build(ModelKind::Sl2 { horizontal: a, vertical: b }, basis))
    }

    /// Largest deviation of the model commutators from the structure constants.
    pub fn bracket_residual(&self, alg: &LieAlgebra3) -> f64 {
        let mut r: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let comm = &self.basis[i] * &self.basis[j] - &self.basis[j] * &self.basis[i];
                let mut expect = DMatrix::zeros(self.dim(), self.dim());
                for k in 0..3 {
                    expect += &self.basis[k] * re(alg.c[k][i][j]);
                }
                r = r.max((comm - expect).camax());
            }
        }
        r
    }

    pub fn dim(&self) -> usize {
        self.basis[0].nrows()
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement {
            m: DMatrix::identity(self.dim(), self.dim()),
            winding: 0,
        }
    }

    /// Matrix of a complexified frame vector.
    pub fn algebra_matrix(&self, xi: &CVec3) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for k in 0..3 {
            m += &self.basis[k] * xi[k];
        }
        m
    }

    /// Frame components of a (complexified) algebra matrix, by projection.
    pub fn to_algebra(&self, m: &DMatrix<C64>) -> CVec3 {
        let mut b = [C64::new(0.0, 0.0); 3];
        for (k, bk) in b.iter_mut().enumerate() {
            *bk = self.basis[k].dotc(m);
        }
        let mut out = [C64::new(0.0, 0.0); 3];
        for (i, o) in out.iter_mut().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                *o += *bj * self.gram_inv[(i, j)];
            }
        }
        out
    }

    /// `exp(h xi)` in the model.
    pub fn exp(&self, xi: &Vec3, h: f64) -> GroupElement {
        let x = [re(h * xi[0]), re(h * xi[1]), re(h * xi[2])];
        GroupElement {
            m: matrix_exp(&self.algebra_matrix(&x)),
            winding: 0,
        }
    }

    /// `g * exp(h xi)`, tracking the SL(2,R) winding.
    pub fn step(&self, g: &GroupElement, xi: &Vec3, h: f64) -> GroupElement {
        let m = &g.m * self.exp(xi, h).m;
        let mut winding = g.winding;
        if let ModelKind::Sl2 { .. } = self.kind {
            let before = sl2_angle(&g.m);
            let after = sl2_angle(&m);
            let jump = after - before;
            if jump < -std::f64::consts::PI {
                winding += 1;
            } else if jump > std::f64::consts::PI {
                winding -= 1;
            }
        }
        GroupElement { m, winding }
    }

    /// Distance of `g` from the model subgroup (zero for exact elements).
    pub fn subgroup_residual(&self, g: &GroupElement) -> f64 {
        let m = &g.m;
        match self.kind {
            ModelKind::Heisenberg { .. } => {
                let mut r: f64 = 0.0;
                for i in 0..3 {
                    r = r.max((m[(i, i)] - re(1.0)).norm());
                    for j in 0..i {
                        r = r.max(m[(i, j)].norm());
                    }
                }
                r.max(m.iter().map(|z| z.im.abs()).fold(0.0, f64::max))
            }
            ModelKind::Affine { .. } => {
                let mut r: f64 = m.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
                for j in 0..4 {
                    let want = if j == 3 { 1.0 } else { 0.0 };
                    r = r.max((m[(3, j)] - re(want)).norm());
                    if j < 2 {
                        r = r.max(m[(2, j)].norm()).max(m[(j, 2)].norm());
                    }
                }
                r.max((m[(2, 2)] - re(1.0)).norm())
            }
            ModelKind::Su2 { .. } => {
                let u = m.adjoint() * m - DMatrix::identity(2, 2);
                let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
                u.camax().max((det - re(1.0)).norm())
            }
            ModelKind::Sl2 { .. } => {
                let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
                let imag = m.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
                imag.max((det - re(1.0)).norm())
            }
        }
    }

    /// Inverse of the native chart for Heisenberg and affine models.
    pub fn from_chart(&self, p: &Vec3) -> Result<GroupElement> {
        match self.kind {
            ModelKind::Heisenberg { a, b, c, lambda } => {
                let (x, y) = (p[a], p[b]);
                let m = cm(
                    3,
                    &[
                        (0, 0, re(1.0)),
                        (1, 1, re(1.0)),
                        (2, 2, re(1.0)),
                        (0, 1, re(x)),
                        (1, 2, re(y)),
                        (0, 2, re(p[c] / lambda + 0.5 * x * y)),
                    ],
                );
                Ok(GroupElement { m, winding: 0 })
            }
            ModelKind::Affine { g, p: ip, q, a } => {
                let t = p[g];
                let gen = cm(
                    2,
                    &[
                        (0, 0, re(t * a[0][0])),
                        (0, 1, re(t * a[0][1])),
                        (1, 0, re(t * a[1][0])),
                        (1, 1, re(t * a[1][1])),
                    ],
                );
                let e = matrix_exp(&gen);
                let mut m = DMatrix::identity(4, 4);
                m.view_mut((0, 0), (2, 2)).copy_from(&e);
                m[(0, 3)] = re(p[ip]);
                m[(1, 3)] = re(p[q]);
                m[(2, 3)] = re(t);
                Ok(GroupElement { m, winding: 0 })
            }
            _ => Err(Error::Unsupported {
                op: "from_chart",
                geometry: format!("{:?}", self.kind),
            }),
        }
    }

    /// Coordinates of `g` in the chosen chart.
    pub fn chart(&self, g: &GroupElement, chart: Chart) -> Vec3 {
        let m = &g.m;
        if let Chart::Entries(e) = chart {
            return [m[e[0]].re, m[e[1]].re, m[e[2]].re];
        }
        match self.kind {
            ModelKind::Heisenberg { a, b, c, lambda } => {
                let x = m[(0, 1)].re;
                let y = m[(1, 2)].re;
                let mut out = [0.0; 3];
                out[a] = x;
                out[b] = y;
                out[c] = lambda * (m[(0, 2)].re - 0.5 * x * y);
                out
            }
            ModelKind::Affine { g: gi, p, q, .. } => {
                let mut out = [0.0; 3];
                out[gi] = m[(2, 3)].re;
                out[p] = m[(0, 3)].re;
                out[q] = m[(1, 3)].re;
                out
            }
            ModelKind::Su2 { .. } => {
                // m = [[a, -conj b], [b, conj a]]; project S^3 from -1.
                let a = m[(0, 0)];
                let b = m[(1, 0)];
                let d = 1.0 + a.re;
                [a.im / d, b.re / d, b.im / d]
            }
            ModelKind::Sl2 { .. } => {
                let turn = 2.0 * std::f64::consts::PI * g.winding as f64;
                [
                    0.5 * (m[(0, 0)].re - m[(1, 1)].re),
                    0.5 * (m[(0, 1)].re + m[(1, 0)].re),
                    sl2_angle(m) + turn,
                ]
            }
        }
    }
}

fn sl2_angle(m: &DMatrix<C64>) -> f64 {
    m[(1, 0)].re.atan2(m[(0, 0)].re)
}

/// Exponential of a small square matrix by scaling and squaring with a Taylor core.
pub fn matrix_exp(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let norm = a.iter().map(|z| z.norm()).sum::<f64>();
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a * re(scale);
    let mut term = DMatrix::<C64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=18 {
        term = &term * &x * re(1.0 / k as f64);
        sum += &term;
        if term.camax() < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(xi) in model`; fails when no model is registered for the algebra.
pub fn model_exp(alg: &LieAlgebra3, xi: &Vec3, h: f64) -> Result<GroupElement> {
    Ok(MatrixModel::for_algebra(alg)?.exp(xi, h))
}

/// Algebra description read from a key-value configuration file.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AlgebraConfig {
    #[serde(rename = "type")]
    pub ty: Option<String>,
    pub a: Option<f64>,
    pub mu: Option<f64>,
    pub scale: Option<f64>,
    #[serde(default)]
    pub basis: Basis,
}

impl AlgebraConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn build(&self) -> Result<LieAlgebra3> {
        let mut alg = match (&self.ty, self.mu) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either `type` or `mu`, not both".into()))
            }
            (None, Some(mu)) => gmu_algebra(mu),
            (Some(t), None) => {
                let tag: BianchiTag = t.parse()?;
                let alg = bianchi_algebra(tag, self.a.unwrap_or(0.0))?;
                match self.basis {
                    Basis::Table => alg,
                    Basis::Weierstrass => to_weierstrass_basis(&alg),
                }
            }
            (None, None) => return Err(Error::Config("missing `type` or `mu`".into())),
        };
        if let Some(s) = self.scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::OutOfRange {
                    name: "scale",
                    value: s,
                    reason: "scale must be positive",
                });
            }
            alg = alg.scaled(s);
        }
        Ok(alg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn all_tables() -> Vec<LieAlgebra3> {
        use BianchiTag::*;
        let mut v: Vec<_> = [I, II, III, IV, V, VI0, VII0, VIII, IX]
            .iter()
            .map(|t| bianchi_algebra(*t, 0.0).unwrap())
            .collect();
        v.push(bianchi_algebra(VIa, 0.5).unwrap());
        v.push(bianchi_algebra(VIa, 3.0).unwrap());
        v.push(bianchi_algebra(VIIa, 0.7).unwrap());
        v
    }

    #[test]
    fn table_rows() {
        let i = bianchi_algebra(BianchiTag::I, 0.0).unwrap();
        assert!(i.c.iter().flatten().flatten().all(|x| *x == 0.0));

        let ii = bianchi_algebra(BianchiTag::II, 0.0).unwrap();
        let e = basis_vectors();
        assert_eq!(ii.bracket(&e[1], &e[2]), [1.0, 0.0, 0.0]);
        assert_eq!(ii.bracket(&e[0], &e[1]), [0.0, 0.0, 0.0]);
        assert_eq!(ii.bracket(&e[0], &e[2]), [0.0, 0.0, 0.0]);

        let ix = bianchi_algebra(BianchiTag::IX, 0.0).unwrap();
        assert_eq!(ix.bracket(&e[0], &e[1]), [0.0, 0.0, 1.0]);
        assert_eq!(ix.bracket(&e[1], &e[2]), [1.0, 0.0, 0.0]);
        assert_eq!(ix.bracket(&e[2], &e[0]), [0.0, 1.0, 0.0]);
    }

    #[test]
    fn parameter_ranges() {
        assert!(bianchi_algebra(BianchiTag::VIa, 1.0).is_err());
        assert!(bianchi_algebra(BianchiTag::VIa, -0.5).is_err());
        assert!(bianchi_algebra(BianchiTag::VIIa, 0.0).is_err());
        assert!("XI".parse::<BianchiTag>().is_err());
        // a is ignored for the unparameterized types
        assert_eq!(
            bianchi_algebra(BianchiTag::V, 42.0).unwrap(),
            bianchi_algebra(BianchiTag::V, 0.0).unwrap()
        );
    }

    #[test]
    fn jacobi_and_antisymmetry() {
        for alg in all_tables() {
            assert!(alg.jacobi_residual() < 1e-12, "{}", alg.label);
            assert_eq!(alg.antisymmetry_residual(), 0.0);
        }
        for mu in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            assert!(gmu_algebra(mu).jacobi_residual() < 1e-12);
        }
        let mut bad = [[[0.0; 3]; 3]; 3];
        bad[2][0][1] = 1.0;
        assert!(LieAlgebra3::from_constants(bad, AlgebraLabel::Custom).is_err());
    }

    #[test]
    fn classification_recovers_table() {
        for alg in all_tables() {
            let AlgebraLabel::Bianchi(t) = alg.label else { unreachable!() };
            assert!(alg.classify().same_class(t, 1e-9), "{t} -> {}", alg.classify());
        }
    }

    #[test]
    fn gmu_family_types() {
        assert_eq!(gmu_algebra(0.0).classify(), BianchiType::III);
        assert_eq!(gmu_algebra(1.0).classify(), BianchiType::V);
        assert_eq!(gmu_algebra(-1.0).classify(), BianchiType::VI0);
        // mu = (a-1)/(a+1)  <=>  a = (1+mu)/(1-mu)
        for mu in [-0.6, -0.2, 0.3, 0.8] {
            let a = (1.0 + mu) / (1.0 - mu);
            assert!(gmu_algebra(mu).classify().same_class(BianchiType::VIa(a), 1e-9));
        }
        assert!(gmu_algebra(0.5).warning.is_none());
        assert!(gmu_algebra(2.0).warning.is_some());
    }

    #[test]
    fn sol_weierstrass_basis_is_g_minus_one() {
        let sol = to_weierstrass_basis(&bianchi_algebra(BianchiTag::VI0, 0.0).unwrap());
        let g = gmu_algebra(-1.0);
        for (k, i, j) in triples() {
            assert_abs_diff_eq!(sol.c[k][i][j], g.c[k][i][j], epsilon = 1e-15);
        }
        let nil = to_weierstrass_basis(&bianchi_algebra(BianchiTag::II, 0.0).unwrap());
        assert_eq!(nil.bracket(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn extensions() {
        assert_eq!(adjoint_extension([[0.0; 2]; 2]).classify(), BianchiType::I);
        assert_eq!(adjoint_extension([[0.0, 1.0], [0.0, 0.0]]).classify(), BianchiType::II);
        assert_eq!(adjoint_extension([[1.0, 1.0], [0.0, 1.0]]).classify(), BianchiType::IV);
        assert_eq!(adjoint_extension([[0.0, -1.0], [1.0, 0.0]]).classify(), BianchiType::VII0);
        // lambda B A B^-1 gives the same class
        let a = adjoint_extension([[2.0, 0.0], [0.0, 2.0]]);
        assert_eq!(a.classify(), BianchiType::V);
        let mu = 0.4;
        let ext = adjoint_extension([[mu, 0.0], [0.0, 1.0]]);
        assert_eq!(ext.c, gmu_algebra(mu).c);
    }

    #[test]
    fn connection_examples() {
        let flat = christoffel(&LieAlgebra3::abelian());
        assert!(flat.gamma.iter().flatten().flatten().all(|x| *x == 0.0));

        let nil = to_weierstrass_basis(&bianchi_algebra(BianchiTag::II, 0.0).unwrap());
        let g = christoffel(&nil).gamma;
        assert_abs_diff_eq!(g[2][0][1], -0.5);
        assert_abs_diff_eq!(g[2][1][0], 0.5);

        for alg in all_tables() {
            assert!(christoffel(&alg).metric_residual() < 1e-15);
        }
    }

    #[test]
    fn curvature_examples() {
        let mut algs = all_tables();
        for mu in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            algs.push(gmu_algebra(mu));
        }
        for alg in &algs {
            assert!(curvature_tensor(alg).symmetry_residual() < 1e-12, "{}", alg.label);
        }
        let e = basis_vectors();
        let flat = LieAlgebra3::abelian();
        assert_eq!(sectional_curvature(&flat, &e[0], &e[2]).unwrap(), 0.0);

        // bi-invariant: K = |[X,Y]|^2 / 4 on orthonormal pairs
        let ix = bianchi_algebra(BianchiTag::IX, 0.0).unwrap();
        for (a, b) in [(0, 1), (1, 2), (0, 2)] {
            let k = sectional_curvature(&ix, &e[a], &e[b]).unwrap();
            let br = ix.bracket(&e[a], &e[b]);
            assert_abs_diff_eq!(k, 0.25 * dot3(&br, &br), epsilon = 1e-14);
            assert_abs_diff_eq!(k, 0.25, epsilon = 1e-14);
        }
        let unit_sphere = ix.scaled(2.0);
        assert_abs_diff_eq!(sectional_curvature(&unit_sphere, &e[0], &e[1]).unwrap(), 1.0, epsilon = 1e-14);

        let h3 = gmu_algebra(1.0);
        for (a, b) in [(0, 1), (1, 2), (0, 2)] {
            assert_abs_diff_eq!(sectional_curvature(&h3, &e[a], &e[b]).unwrap(), -1.0, epsilon = 1e-14);
        }
        let x = [0.3, -1.2, 0.5];
        let y = [1.0, 0.4, -0.7];
        assert_abs_diff_eq!(sectional_curvature(&h3, &x, &y).unwrap(), -1.0, epsilon = 1e-13);

        let nil = to_weierstrass_basis(&bianchi_algebra(BianchiTag::II, 0.0).unwrap());
        assert_abs_diff_eq!(sectional_curvature(&nil, &e[0], &e[1]).unwrap(), -0.75, epsilon = 1e-14);
        assert_abs_diff_eq!(sectional_curvature(&nil, &e[1], &e[2]).unwrap(), 0.25, epsilon = 1e-14);
        assert!(matches!(sectional_curvature(&nil, &e[0], &[2.0, 0.0, 0.0]), Err(Error::DegeneratePlane)));
    }

    #[test]
    fn models_exist_for_all_types() {
        for alg in all_tables() {
            let m = MatrixModel::for_algebra(&alg).unwrap();
            assert!(m.bracket_residual(&alg) < 1e-12);
            let id = m.exp(&[0.3, -0.2, 0.1], 0.0);
            assert!((id.m - m.identity().m).camax() < 1e-15);
        }
        let nil = MatrixModel::for_algebra(&bianchi_algebra(BianchiTag::II, 0.0).unwrap()).unwrap();
        assert!(matches!(nil.kind, ModelKind::Heisenberg { .. }));
        assert!(matches!(
            MatrixModel::for_algebra(&gmu_algebra(0.3)).unwrap().kind,
            ModelKind::Affine { g: 2, .. }
        ));
        let alg = LieAlgebra3 {
            label: AlgebraLabel::Custom,
            ..bianchi_algebra(BianchiTag::IX, 0.0).unwrap().transformed(&Matrix3::new(
                0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0,
            ))
        };
        let _ = MatrixModel::for_algebra(&alg);
        for (b, c) in [(0.5, -2.0), (2.0, 2.0), (1.0, 3.0)] {
            let alg = bundle_algebra(b, c);
            let m = MatrixModel::for_algebra(&alg).unwrap();
            assert!(m.bracket_residual(&alg) < 1e-14);
        }
    }

    #[test]
    fn abelian_exponential_is_additive() {
        let m = MatrixModel::for_algebra(&LieAlgebra3::abelian()).unwrap();
        let x = [0.3, -0.1, 0.8];
        let y = [-0.5, 0.2, 0.4];
        let lhs = &m.exp(&x, 1.0).m * &m.exp(&y, 1.0).m;
        let sum = [x[0] + y[0], x[1] + y[1], x[2] + y[2]];
        assert!((lhs - m.exp(&sum, 1.0).m).camax() < 1e-14);
    }

    #[test]
    fn group_commutator_reproduces_bracket() {
        // (exp(hX) exp(hY) exp(-hX) exp(-hY) - I) / h^2 -> [X, Y] with O(h) error
        let mut algs = all_tables();
        algs.push(gmu_algebra(-0.3));
        for alg in algs {
            let m = MatrixModel::for_algebra(&alg).unwrap();
            for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                let e = basis_vectors();
                let want = alg.bracket(&e[a], &e[b]);
                let mut errs = vec![];
                for h in [1e-2, 5e-3] {
                    let neg = |v: &Vec3| [-v[0], -v[1], -v[2]];
                    let g = &m.exp(&e[a], h).m * &m.exp(&e[b], h).m * &m.exp(&neg(&e[a]), h).m * &m.exp(&neg(&e[b]), h).m;
                    let d = (g - DMatrix::identity(m.dim(), m.dim())) * re(1.0 / (h * h));
                    let got = m.to_algebra(&d);
                    let err = (0..3).map(|k| (got[k].re - want[k]).abs() + got[k].im.abs()).fold(0.0, f64::max);
                    errs.push(err);
                }
                assert!(errs[1] < 0.1, "{} {:?}", alg.label, errs);
                if errs[0] > 1e-10 {
                    let ratio = errs[0] / errs[1];
                    assert!(ratio > 1.8, "{} ratio {ratio}", alg.label);
                }
            }
        }
    }

    #[test]
    fn left_translation_derivative_gives_structure_constants() {
        // d/dt at 0 of Ad_{exp(t e_i)} e_j = [e_i, e_j]; central difference is O(h^2).
        for alg in [
            to_weierstrass_basis(&bianchi_algebra(BianchiTag::II, 0.0).unwrap()),
            gmu_algebra(-1.0),
            gmu_algebra(0.5),
            bianchi_algebra(BianchiTag::VIII, 0.0).unwrap(),
            bianchi_algebra(BianchiTag::IX, 0.0).unwrap().scaled(2.0),
            bianchi_algebra(BianchiTag::IV, 0.0).unwrap(),
        ] {
            let m = MatrixModel::for_algebra(&alg).unwrap();
            let e = basis_vectors();
            let mut errs = [0.0_f64; 2];
            for (slot, h) in [1e-2, 5e-3].into_iter().enumerate() {
                for i in 0..3 {
                    for j in 0..3 {
                        let ad = |t: f64| {
                            let g = m.exp(&e[i], t).m;
                            let gi = m.exp(&e[i], -t).m;
                            m.to_algebra(&(&g * &m.basis[j] * &gi))
                        };
                        let (p, q) = (ad(h), ad(-h));
                        for k in 0..3 {
                            let d = (p[k] - q[k]) / (2.0 * h);
                            errs[slot] = errs[slot].max((d.re - alg.c[k][i][j]).abs());
                        }
                    }
                }
            }
            assert!(errs[0] < 1e-3, "{}", alg.label);
            if errs[0] > 1e-11 {
                assert!(errs[0] / errs[1] > 3.5, "{} {:?}", alg.label, errs);
            }
        }
    }

    #[test]
    fn nil_chart_matches_group_law() {
        let nil = to_weierstrass_basis(&bianchi_algebra(BianchiTag::II, 0.0).unwrap());
        let m = MatrixModel::for_algebra(&nil).unwrap();
        let g = m.exp(&[0.7, -0.3, 0.2], 1.0);
        let x = m.chart(&g, Chart::Native);
        // exponential coordinates of exp(xi) are xi itself
        assert_abs_diff_eq!(x[0], 0.7, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], -0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(x[2], 0.2, epsilon = 1e-14);
        assert!(m.subgroup_residual(&g) < 1e-14);
    }

    #[test]
    fn from_chart_inverts_chart() {
        let p = [0.4, -1.1, 0.7];
        for alg in [
            to_weierstrass_basis(&bianchi_algebra(BianchiTag::II, 0.0).unwrap()),
            gmu_algebra(0.3),
            LieAlgebra3::abelian(),
        ] {
            let m = MatrixModel::for_algebra(&alg).unwrap();
            let g = m.from_chart(&p).unwrap();
            let q = m.chart(&g, Chart::Native);
            for k in 0..3 {
                assert_abs_diff_eq!(p[k], q[k], epsilon = 1e-14);
            }
            assert!(m.subgroup_residual(&g) < 1e-14);
        }
    }

    #[test]
    fn sl2_winding_counts_turns() {
        let alg = bianchi_algebra(BianchiTag::VIII, 0.0).unwrap();
        let m = MatrixModel::for_algebra(&alg).unwrap();
        let mut g = m.identity();
        // e3 generates the compact rotation subgroup; its period is 4 pi at s = 1
        let steps = 400;
        let h = 4.0 * std::f64::consts::PI / steps as f64;
        for _ in 0..(2 * steps) {
            g = m.step(&g, &[0.0, 0.0, 1.0], h);
        }
        assert!((g.m.clone() - DMatrix::identity(2, 2)).camax() < 1e-10);
        assert_eq!(g.winding.abs(), 2);
        assert!(m.subgroup_residual(&g) < 1e-12);
    }

    #[test]
    fn config_loading() {
        let cfg = AlgebraConfig::from_toml_str("type = \"nil\"\nbasis = \"weierstrass\"\n").unwrap();
        let alg = cfg.build().unwrap();
        assert_eq!(alg.c[2][0][1], 1.0);
        let cfg = AlgebraConfig::from_toml_str("mu = 0.25\nscale = 2.0").unwrap();
        let alg = cfg.build().unwrap();
        assert_eq!(alg.c[1][2][1], 2.0);
        assert_eq!(alg.scale, 2.0);
        assert!(AlgebraConfig::from_toml_str("type = \"VI_a\"\na = 1.0").unwrap().build().is_err());
        assert!(AlgebraConfig::from_toml_str("colour = 3").is_err());
        assert!(AlgebraConfig::from_toml_str("").unwrap().build().is_err());
    }
}
