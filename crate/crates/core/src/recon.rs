//! Reconstruction of the immersion from its tangent data `Psi = f^{-1} f_z`,
//! derivational-equation residuals, mean curvature and unit normal.

use std::io::Write;
use std::path::Path;

use ndarray::{Array2, Zip};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::liegeo::{christoffel, cross3, dot3, norm3, CVec3, Chart, GroupElement, LieAlgebra3, MatrixModel, Vec3};
use crate::spinfield::io::{fmt_f64, MatrixBlock};
use crate::spinfield::{factorize_z, Grid2D, SpinorField};

/// Group-valued samples of an immersion together with its tangent data.
#[derive(Debug, Clone)]
pub struct FrameField {
    pub grid: Grid2D,
    pub model: MatrixModel,
    pub f: Array2<GroupElement>,
    /// Frame components of `Psi = Z1 e1 + Z2 e2 + Z3 e3`.
    pub psi: [Array2<C64>; 3],
    /// Mean curvature carried over from the source data (used by the residuals).
    pub h: Array2<f64>,
    pub valid: Array2<bool>,
}

impl FrameField {
    /// `Psi* = conj(Psi)` componentwise in the orthonormal frame.
    pub fn psi_star(&self) -> [Array2<C64>; 3] {
        std::array::from_fn(|k| self.psi[k].mapv(|z| z.conj()))
    }

    pub fn psi_at(&self, i: usize, j: usize) -> CVec3 {
        [self.psi[0][(i, j)], self.psi[1][(i, j)], self.psi[2][(i, j)]]
    }

    /// Chart coordinates of every sample.
    pub fn points(&self, chart: Chart) -> Array2<Vec3> {
        self.f.mapv(|g| self.model.chart(&g, chart))
    }

    /// Matrices of every sample in row-major order, for the binary dump.
    pub fn matrix_block(&self) -> MatrixBlock {
        let dim = self.model.dim();
        let mut entries = Vec::with_capacity(self.f.len() * dim * dim);
        let mut winding = Vec::with_capacity(self.f.len());
        for g in self.f.iter() {
            for r in 0..dim {
                for c in 0..dim {
                    entries.push(g.m[(r, c)]);
                }
            }
            winding.push(g.winding);
        }
        MatrixBlock { dim, entries, winding }
    }
}

fn real_step(z_a: &CVec3, z_b: &CVec3, along_v: bool) -> Vec3 {
    // f_u = f (Psi + conj Psi) = f 2 Re Psi,  f_v = f i (Psi - conj Psi) = -f 2 Im Psi
    std::array::from_fn(|k| {
        if along_v {
            -(z_a[k].im + z_b[k].im)
        } else {
            z_a[k].re + z_b[k].re
        }
    })
}

fn z_at(z: &[Array2<C64>; 3], i: usize, j: usize) -> CVec3 {
    [z[0][(i, j)], z[1][(i, j)], z[2][(i, j)]]
}

/// Integrates `f_u = f (Psi + conj Psi)`, `f_v = f i (Psi - conj Psi)` from
/// `f(0, 0) = f0` along the first row in `u`, then along every column in `v`.
///
/// Each edge is one exponential step with the algebra element averaged over
/// its endpoints (second order).
pub fn frame_integrate(
    z: &[Array2<C64>; 3],
    valid: &Array2<bool>,
    alg: &LieAlgebra3,
    f0: &GroupElement,
    grid: &Grid2D,
) -> Result<FrameField> {
    for c in z {
        grid.check(c)?;
    }
    grid.check(valid)?;
    let model = MatrixModel::for_algebra(alg)?;
    let (nu, nv) = grid.shape();
    for i in 0..nu {
        if !valid[(i, 0)] {
            return Err(Error::MaskedTree(i, 0));
        }
    }
    let mut f = Array2::from_elem((nu, nv), f0.clone());
    for i in 1..nu {
        let xi = real_step(&z_at(z, i - 1, 0), &z_at(z, i, 0), false);
        f[(i, 0)] = model.step(&f[(i - 1, 0)], &xi, grid.du);
    }
    for i in 0..nu {
        for j in 1..nv {
            if !valid[(i, j)] {
                // the rest of this column is unreachable
                for k in j..nv {
                    if valid[(i, k)] {
                        return Err(Error::MaskedTree(i, j));
                    }
                }
                break;
            }
            let xi = real_step(&z_at(z, i, j - 1), &z_at(z, i, j), true);
            f[(i, j)] = model.step(&f[(i, j - 1)], &xi, grid.dv);
        }
    }
    Ok(FrameField {
        grid: *grid,
        model,
        f,
        psi: z.clone(),
        h: Array2::zeros((nu, nv)),
        valid: valid.clone(),
    })
}

/// Reconstructs the immersion of a spinor field with `f(origin) = identity`.
pub fn reconstruct(psi: &SpinorField, alg: &LieAlgebra3) -> Result<FrameField> {
    let model = MatrixModel::for_algebra(alg)?;
    let z = factorize_z(psi);
    let mut ff = frame_integrate(&z, &psi.valid, alg, &model.identity(), &psi.grid)?;
    ff.h = psi.h.clone();
    Ok(ff)
}

/// Norm of `(product of edge steps around each cell) - I`, one value per cell.
///
/// Vanishes to `O(h^3)` per cell on integrable data.
pub fn plaquette_holonomy(z: &[Array2<C64>; 3], alg: &LieAlgebra3, grid: &Grid2D) -> Result<Array2<f64>> {
    let model = MatrixModel::for_algebra(alg)?;
    let (nu, nv) = grid.shape();
    let id = model.identity();
    let mut out = Array2::zeros((nu - 1, nv - 1));
    for i in 0..nu - 1 {
        for j in 0..nv - 1 {
            let a = z_at(z, i, j);
            let b = z_at(z, i + 1, j);
            let c = z_at(z, i + 1, j + 1);
            let d = z_at(z, i, j + 1);
            let mut g = model.step(&id, &real_step(&a, &b, false), grid.du);
            g = model.step(&g, &real_step(&b, &c, true), grid.dv);
            g = model.step(&g, &real_step(&c, &d, false), -grid.du);
            g = model.step(&g, &real_step(&d, &a, true), -grid.dv);
            out[(i, j)] = (g.m - &id.m).iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        }
    }
    Ok(out)
}

/// Unit normal `n = (2 Re Psi) x (-2 Im Psi) / |...|` in the orthonormal frame.
pub fn unit_normal(ff: &FrameField) -> Result<Array2<Vec3>> {
    normals_of(&ff.psi, &ff.valid)
}

pub(crate) fn normal_from_z(z: &CVec3) -> Option<Vec3> {
    let a: Vec3 = std::array::from_fn(|k| 2.0 * z[k].re);
    let b: Vec3 = std::array::from_fn(|k| -2.0 * z[k].im);
    let n = cross3(&a, &b);
    let l = norm3(&n);
    let scale = dot3(&a, &a).max(dot3(&b, &b));
    if l <= 1e-14 * scale.max(f64::MIN_POSITIVE) || l == 0.0 {
        return None;
    }
    Some([n[0] / l, n[1] / l, n[2] / l])
}

fn normals_of(z: &[Array2<C64>; 3], valid: &Array2<bool>) -> Result<Array2<Vec3>> {
    let mut out = Array2::from_elem(valid.dim(), [0.0; 3]);
    for ((i, j), ok) in valid.indexed_iter() {
        if *ok {
            out[(i, j)] = normal_from_z(&z_at(z, i, j)).ok_or(Error::DegeneratePlane)?;
        }
    }
    Ok(out)
}

/// `dbar Psi + nabla_{conj Psi} Psi` at every sample: half the left side of
/// the second derivational equation, whose normal part is `e^{2 alpha} H / 2`.
fn normal_operator(ff: &FrameField, alg: &LieAlgebra3) -> Result<[Array2<C64>; 3]> {
    let conn = christoffel(alg);
    let g = &ff.grid;
    let dbar: Vec<Array2<C64>> = ff.psi.iter().map(|c| g.d_zbar(c)).collect::<Result<_>>()?;
    let mut out: [Array2<C64>; 3] = std::array::from_fn(|_| Array2::zeros(g.shape()));
    for i in 0..g.nu {
        for j in 0..g.nv {
            let z = ff.psi_at(i, j);
            let zb = [z[0].conj(), z[1].conj(), z[2].conj()];
            let nab = conn.nabla_c(&zb, &z);
            for k in 0..3 {
                out[k][(i, j)] = dbar[k][(i, j)] + nab[k];
            }
        }
    }
    Ok(out)
}

/// Residuals of the derivational equations,
/// `r_minus = d Psi* - dbar Psi + nabla_Psi Psi* - nabla_{Psi*} Psi` and
/// `r_plus = d Psi* + dbar Psi + nabla_Psi Psi* + nabla_{Psi*} Psi - e^{2 alpha} H n`,
/// with `H` taken from `ff.h`.
pub fn derivational_residual(ff: &FrameField, alg: &LieAlgebra3) -> Result<([Array2<C64>; 3], [Array2<C64>; 3])> {
    let conn = christoffel(alg);
    let g = &ff.grid;
    let star = ff.psi_star();
    let d_star: Vec<Array2<C64>> = star.iter().map(|c| g.d_z(c)).collect::<Result<_>>()?;
    let dbar: Vec<Array2<C64>> = ff.psi.iter().map(|c| g.d_zbar(c)).collect::<Result<_>>()?;
    let normals = normals_of(&ff.psi, &ff.valid)?;
    let mut rm: [Array2<C64>; 3] = std::array::from_fn(|_| Array2::zeros(g.shape()));
    let mut rp: [Array2<C64>; 3] = std::array::from_fn(|_| Array2::zeros(g.shape()));
    for i in 0..g.nu {
        for j in 0..g.nv {
            let z = ff.psi_at(i, j);
            let zb = [z[0].conj(), z[1].conj(), z[2].conj()];
            let a = conn.nabla_c(&z, &zb);
            let b = conn.nabla_c(&zb, &z);
            let e2a = 2.0 * z.iter().map(|x| x.norm_sqr()).sum::<f64>();
            let n = normals[(i, j)];
            for k in 0..3 {
                rm[k][(i, j)] = d_star[k][(i, j)] - dbar[k][(i, j)] + a[k] - b[k];
                rp[k][(i, j)] = d_star[k][(i, j)] + dbar[k][(i, j)] + a[k] + b[k] - e2a * ff.h[(i, j)] * n[k];
            }
        }
    }
    Ok((rm, rp))
}

/// Mean curvature read off the second derivational equation.
#[derive(Debug, Clone)]
pub struct CurvatureExtraction {
    pub h: Array2<f64>,
    /// Size of the discarded tangential part, relative to `e^{2 alpha}`.
    pub tangential: Array2<f64>,
    pub valid: Array2<bool>,
}

/// `H = <d Psi* + dbar Psi + nabla_Psi Psi* + nabla_{Psi*} Psi, n> / e^{2 alpha}`.
pub fn mean_curvature(ff: &FrameField, alg: &LieAlgebra3) -> Result<CurvatureExtraction> {
    let g = &ff.grid;
    let op = normal_operator(ff, alg)?;
    let normals = normals_of(&ff.psi, &ff.valid)?;
    let mut h = Array2::zeros(g.shape());
    let mut tang = Array2::zeros(g.shape());
    let mut degenerate = 0;
    for ((i, j), ok) in ff.valid.indexed_iter() {
        if !*ok {
            continue;
        }
        let e2a = 2.0 * ff.psi.iter().map(|c| c[(i, j)].norm_sqr()).sum::<f64>();
        if e2a < 1e-12 {
            degenerate += 1;
            continue;
        }
        // the full left side is 2 Re(op)
        let lhs: Vec3 = std::array::from_fn(|k| 2.0 * op[k][(i, j)].re);
        let n = normals[(i, j)];
        let hn = dot3(&lhs, &n);
        h[(i, j)] = hn / e2a;
        let t: Vec3 = std::array::from_fn(|k| lhs[k] - hn * n[k]);
        tang[(i, j)] = norm3(&t) / e2a;
    }
    if degenerate > 0 {
        return Err(Error::DegenerateMetric { count: degenerate });
    }
    Ok(CurvatureExtraction {
        h,
        tangential: tang,
        valid: g.erode(&ff.valid),
    })
}

/// Tangent data `f^{-1} f_z` recomputed from the group samples by finite differences.
pub fn tangent_from_frames(ff: &FrameField) -> Result<[Array2<C64>; 3]> {
    let g = &ff.grid;
    let dim = ff.model.dim();
    let mut dz = vec![vec![Array2::<C64>::zeros(g.shape()); dim]; dim];
    for r in 0..dim {
        for c in 0..dim {
            let entry = ff.f.mapv(|m| m.m[(r, c)]);
            dz[r][c] = g.d_z(&entry)?;
        }
    }
    let mut out: [Array2<C64>; 3] = std::array::from_fn(|_| Array2::zeros(g.shape()));
    for ((i, j), gij) in ff.f.indexed_iter() {
        let inv = gij.m.clone().try_inverse().ok_or(Error::DegeneratePlane)?;
        let d = nalgebra::DMatrix::from_fn(dim, dim, |r, c| dz[r][c][(i, j)]);
        let xi = ff.model.to_algebra(&(inv * d));
        for k in 0..3 {
            out[k][(i, j)] = xi[k];
        }
    }
    Ok(out)
}

/// Writes the sampled immersion as a triangulated Wavefront OBJ file.
///
/// Vertices follow row-major `(iu, iv)` order; faces touching an invalid
/// sample are omitted.
pub fn export_mesh(ff: &FrameField, chart: Chart, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_obj(ff, chart, std::io::BufWriter::new(file))
}

pub fn write_obj<W: Write>(ff: &FrameField, chart: Chart, mut w: W) -> Result<()> {
    let (nu, nv) = ff.grid.shape();
    let pts = ff.points(chart);
    for p in pts.iter() {
        writeln!(w, "v {} {} {}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(p[2]))?;
    }
    let id = |i: usize, j: usize| i * nv + j + 1;
    for i in 0..nu - 1 {
        for j in 0..nv - 1 {
            let ok = |a: usize, b: usize| ff.valid[(a, b)];
            if ok(i, j) && ok(i + 1, j) && ok(i + 1, j + 1) {
                writeln!(w, "f {} {} {}", id(i, j), id(i + 1, j), id(i + 1, j + 1))?;
            }
            if ok(i, j) && ok(i + 1, j + 1) && ok(i, j + 1) {
                writeln!(w, "f {} {} {}", id(i, j), id(i + 1, j + 1), id(i, j + 1))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Largest value of `a` over valid samples at least `rings` away from open edges.
pub fn masked_max(a: &Array2<f64>, valid: &Array2<bool>, grid: &Grid2D, rings: usize) -> f64 {
    let mut m: f64 = 0.0;
    Zip::indexed(a).and(valid).for_each(|(i, j), x, ok| {
        if *ok && grid.is_interior(i, j, rings) {
            m = m.max(x.abs());
        }
    });
    m
}
