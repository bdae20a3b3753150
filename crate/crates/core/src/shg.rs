//! Elliptic sinh-Gordon equations on doubly periodic grids and the linear
//! system whose compatibility condition they are.
//!
//! With `v_{z zbar} = Lap v / 4` the solvers handle
//!
//! ```text
//! u_{z zbar} + sinh u = 0
//! v_{z zbar} + e^{2v} - |B|^2 e^{-2v} = 0
//! ```
//!
//! The Laplacian is the 5-point stencil unless the grid asks for
//! [`Stencil::Spectral`], in which case it is the Fourier Laplacian and the
//! Newton steps are solved by GMRES preconditioned with the 5-point Jacobian.

use std::sync::Arc;

use nalgebra::Matrix2;
use ndarray::{Array2, Axis, Zip};
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{ConvergenceFailure, Error, Result};
use crate::linsolve::{gmres, BlockTridiag};
use crate::spinfield::{Grid2D, SpinorField, Stencil};

/// Complex samples on a doubly periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid2D,
    pub vals: Array2<C64>,
}

impl ScalarField {
    pub fn new(grid: Grid2D, vals: Array2<C64>) -> Result<Self> {
        if !(grid.periodic_u && grid.periodic_v) {
            return Err(Error::InvalidGrid("scalar fields live on doubly periodic grids".into()));
        }
        grid.check(&vals)?;
        Ok(ScalarField { grid, vals })
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(C64) -> C64) -> Result<Self> {
        Self::new(grid, grid.sample(f))
    }

    pub fn constant(grid: Grid2D, c: C64) -> Result<Self> {
        Self::new(grid, Array2::from_elem(grid.shape(), c))
    }

    pub fn max_imag(&self) -> f64 {
        self.vals.iter().fold(0.0, |m: f64, z| m.max(z.im.abs()))
    }
}

/// Residual history of a Newton run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonReport {
    pub iterations: usize,
    /// Max-norm of the full residual before each step and after the last.
    pub residuals: Vec<f64>,
    pub re_residuals: Vec<f64>,
    pub im_residuals: Vec<f64>,
    pub linear_iterations: Vec<usize>,
}

impl NewtonReport {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::NAN)
    }
}

/// `Lap f` with the grid's stencil choice (5-point or Fourier).
pub fn laplacian(grid: &Grid2D, f: &Array2<C64>) -> Result<Array2<C64>> {
    grid.check(f)?;
    if grid.stencil == Stencil::Spectral {
        Ok(SpectralLap::new(grid).apply(f))
    } else {
        Ok(fd_laplacian(grid, f))
    }
}

fn fd_laplacian(g: &Grid2D, f: &Array2<C64>) -> Array2<C64> {
    let (nu, nv) = (g.nu, g.nv);
    let (cu, cv) = (1.0 / (g.du * g.du), 1.0 / (g.dv * g.dv));
    Array2::from_shape_fn((nu, nv), |(i, j)| {
        let c = f[(i, j)];
        cu * (f[((i + 1) % nu, j)] + f[((i + nu - 1) % nu, j)] - 2.0 * c)
            + cv * (f[(i, (j + 1) % nv)] + f[(i, (j + nv - 1) % nv)] - 2.0 * c)
    })
}

struct SpectralLap {
    fwd: [Arc<dyn Fft<f64>>; 2],
    inv: [Arc<dyn Fft<f64>>; 2],
    k2: [Vec<f64>; 2],
}

impl SpectralLap {
    fn new(g: &Grid2D) -> Self {
        let mut planner = FftPlanner::new();
        let wave = |n: usize, h: f64| -> Vec<f64> {
            let l = n as f64 * h;
            (0..n)
                .map(|k| {
                    let m = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                    let w = 2.0 * std::f64::consts::PI * m / l;
                    w * w
                })
                .collect()
        };
        SpectralLap {
            fwd: [planner.plan_fft_forward(g.nu), planner.plan_fft_forward(g.nv)],
            inv: [planner.plan_fft_inverse(g.nu), planner.plan_fft_inverse(g.nv)],
            k2: [wave(g.nu, g.du), wave(g.nv, g.dv)],
        }
    }

    fn apply(&self, f: &Array2<C64>) -> Array2<C64> {
        let mut hat = f.clone();
        self.transform(&mut hat, true);
        let (nu, nv) = hat.dim();
        let scale = 1.0 / (nu * nv) as f64;
        for ((i, j), x) in hat.indexed_iter_mut() {
            *x *= -(self.k2[0][i] + self.k2[1][j]) * scale;
        }
        self.transform(&mut hat, false);
        hat
    }

    fn transform(&self, a: &mut Array2<C64>, forward: bool) {
        for (ax, plan) in [(0, if forward { &self.fwd[0] } else { &self.inv[0] }), (1, if forward { &self.fwd[1] } else { &self.inv[1] })] {
            for mut lane in a.lanes_mut(Axis(ax)) {
                let mut buf: Vec<C64> = lane.iter().copied().collect();
                plan.process(&mut buf);
                lane.iter_mut().zip(buf).for_each(|(x, b)| *x = b);
            }
        }
    }
}

/// 5-point operator `Lap / 4 + diag(d)` as a cyclic block system.
fn fd_jacobian(g: &Grid2D, d: &Array2<C64>) -> BlockTridiag {
    let (nu, nv) = (g.nu, g.nv);
    let (cu, cv) = (0.25 / (g.du * g.du), 0.25 / (g.dv * g.dv));
    let mut a = BlockTridiag::zeros(nu, nv, true);
    for i in 0..nu {
        for j in 0..nv {
            a.diag[i][(j, j)] += d[(i, j)] - 2.0 * (cu + cv);
            a.diag[i][(j, (j + 1) % nv)] += cv;
            a.diag[i][(j, (j + nv - 1) % nv)] += cv;
            a.lower[i][(j, j)] = C64::new(cu, 0.0);
            a.upper[i][(j, j)] = C64::new(cu, 0.0);
        }
    }
    a
}

fn flat(a: &Array2<C64>) -> Vec<C64> {
    a.iter().copied().collect()
}

fn unflat(g: &Grid2D, v: Vec<C64>) -> Array2<C64> {
    Array2::from_shape_vec(g.shape(), v).expect("grid-sized vector")
}

/// Newton on `Lap v / 4 + N(v) = 0` where `nl(v, ix)` returns `(N, dN/dv)`.
fn newton(
    solver: &'static str,
    seed: &ScalarField,
    tol: f64,
    max_iter: usize,
    nl: impl Fn(C64, (usize, usize)) -> (C64, C64),
) -> Result<(ScalarField, NewtonReport)> {
    if !(tol > 0.0) {
        return Err(Error::OutOfRange {
            name: "tol",
            value: tol,
            reason: "must be positive",
        });
    }
    let g = seed.grid;
    let spectral = g.stencil == Stencil::Spectral;
    let slap = spectral.then(|| SpectralLap::new(&g));
    let lap = |f: &Array2<C64>| match &slap {
        Some(s) => s.apply(f),
        None => fd_laplacian(&g, f),
    };
    let residual = |v: &Array2<C64>| {
        let l = lap(v);
        Array2::from_shape_fn(g.shape(), |ix| 0.25 * l[ix] + nl(v[ix], ix).0)
    };
    let norms = |r: &Array2<C64>| {
        r.iter().fold((0.0f64, 0.0f64, 0.0f64), |(a, b, c), z| {
            (a.max(z.norm()), b.max(z.re.abs()), c.max(z.im.abs()))
        })
    };
    let mut v = seed.vals.clone();
    let mut report = NewtonReport {
        iterations: 0,
        residuals: vec![],
        re_residuals: vec![],
        im_residuals: vec![],
        linear_iterations: vec![],
    };
    loop {
        let r = residual(&v);
        let (n, nr, ni) = norms(&r);
        report.residuals.push(n);
        report.re_residuals.push(nr);
        report.im_residuals.push(ni);
        if n < tol {
            return Ok((ScalarField { grid: g, vals: v }, report));
        }
        let diverged = !n.is_finite() || n > 1e10;
        if diverged || report.iterations >= max_iter {
            return Err(Error::NonConvergence(ConvergenceFailure {
                solver,
                iterations: report.iterations,
                residuals: report.residuals,
            }));
        }
        let d = Array2::from_shape_fn(g.shape(), |ix| nl(v[ix], ix).1);
        let fac = fd_jacobian(&g, &d).factor()?;
        let rhs: Vec<C64> = r.iter().map(|x| -x).collect();
        let step = if spectral {
            let apply = |x: &[C64]| {
                let xa = unflat(&g, x.to_vec());
                let l = lap(&xa);
                flat(&Array2::from_shape_fn(g.shape(), |ix| 0.25 * l[ix] + d[ix] * xa[ix]))
            };
            let pre = |x: &[C64]| fac.solve(x).expect("factored Jacobian");
            let (x, hist) = gmres(apply, pre, &rhs, None, 1e-9, 60, 600)?;
            report.linear_iterations.push(hist.len());
            x
        } else {
            report.linear_iterations.push(1);
            fac.solve(&rhs)?
        };
        Zip::from(&mut v).and(&unflat(&g, step)).for_each(|a, s| *a += s);
        report.iterations += 1;
    }
}

const MAX_NEWTON: usize = 50;

/// Newton solve of `u_{z zbar} + sinh u = 0`.
pub fn sinh_gordon_solve(seed: &ScalarField, tol: f64) -> Result<(ScalarField, NewtonReport)> {
    newton("sinh-Gordon Newton", seed, tol, MAX_NEWTON, |u, _| (u.sinh(), u.cosh()))
}

/// Pointwise `|u_{z zbar} + sinh u|`.
pub fn sinh_gordon_residual(u: &ScalarField) -> Result<Array2<f64>> {
    let l = laplacian(&u.grid, &u.vals)?;
    Ok(Zip::from(&l).and(&u.vals).map_collect(|l, u| (0.25 * l + u.sinh()).norm()))
}

fn check_b(b: &ScalarField, grid: &Grid2D) -> Result<Array2<f64>> {
    grid.check(&b.vals)?;
    let b2 = b.vals.mapv(|z| z.norm_sqr());
    if b2.iter().any(|x| *x < 1e-300) {
        return Err(Error::OutOfRange {
            name: "|B|",
            value: 0.0,
            reason: "B must not vanish",
        });
    }
    Ok(b2)
}

/// Newton solve of `v_{z zbar} + e^{2v} - |B|^2 e^{-2v} = 0` for complex `v`.
///
/// The equation is holomorphic in `v`, so real and complex branches use the
/// same iteration; the report carries both residual parts.
pub fn berdinsky_solve(seed: &ScalarField, b: &ScalarField, tol: f64) -> Result<(ScalarField, NewtonReport)> {
    let b2 = check_b(b, &seed.grid)?;
    newton("Berdinsky Newton", seed, tol, MAX_NEWTON, |v, ix| {
        let (p, m) = ((2.0 * v).exp(), b2[ix] * (-2.0 * v).exp());
        (p - m, 2.0 * (p + m))
    })
}

/// Pointwise `|v_{z zbar} + e^{2v} - |B|^2 e^{-2v}|`.
pub fn compatibility_residual(v: &ScalarField, b: &ScalarField) -> Result<Array2<f64>> {
    let b2 = check_b(b, &v.grid)?;
    let l = laplacian(&v.grid, &v.vals)?;
    Ok(Array2::from_shape_fn(v.grid.shape(), |ix| {
        let x = v.vals[ix];
        (0.25 * l[ix] + (2.0 * x).exp() - b2[ix] * (-2.0 * x).exp()).norm()
    }))
}

type M2 = Matrix2<C64>;

/// Coefficient matrices of `psi_z = M1 psi`, `psi_zbar = M2 psi` at every sample.
struct LaxCoefficients {
    m1: Array2<M2>,
    m2: Array2<M2>,
}

fn lax_coefficients(v: &ScalarField, b: &ScalarField) -> Result<LaxCoefficients> {
    let g = v.grid;
    g.check(&b.vals)?;
    let vz = g.d_z(&v.vals)?;
    let vzb = g.d_zbar(&v.vals)?;
    let zero = C64::new(0.0, 0.0);
    let m1 = Array2::from_shape_fn(g.shape(), |ix| {
        let (e, bb) = (v.vals[ix].exp(), b.vals[ix]);
        M2::new(vz[ix], bb / e, -e, zero)
    });
    let m2 = Array2::from_shape_fn(g.shape(), |ix| {
        let (e, bb) = (v.vals[ix].exp(), b.vals[ix]);
        M2::new(zero, e, -bb.conj() / e, vzb[ix])
    });
    Ok(LaxCoefficients { m1, m2 })
}

impl LaxCoefficients {
    /// Propagator along one edge: `exp` of the midpoint generator.
    /// `dir` is 0 for a `+u` step and 1 for a `+v` step.
    fn edge(&self, g: &Grid2D, (i, j): (usize, usize), dir: usize) -> M2 {
        let (a, b) = if dir == 0 {
            ((i, j), ((i + 1) % g.nu, j))
        } else {
            ((i, j), (i, (j + 1) % g.nv))
        };
        let m1 = (self.m1[a] + self.m1[b]) * C64::new(0.5, 0.0);
        let m2 = (self.m2[a] + self.m2[b]) * C64::new(0.5, 0.0);
        let gen = if dir == 0 {
            (m1 + m2) * C64::new(g.du, 0.0)
        } else {
            (m1 - m2) * C64::new(0.0, g.dv)
        };
        gen.exp()
    }
}

/// Integrates `psi_z = M1 psi`, `psi_zbar = M2 psi` with
///
/// ```text
/// M1 = [[v_z, B e^{-v}], [-e^v, 0]],   M2 = [[0, e^v], [-conj(B) e^{-v}, v_zbar]]
/// ```
///
/// (constant `H`) from `psi0` at sample `(0, 0)`: first along `v = 0`, then up
/// every column. The result is not periodic in general, so it lives on the
/// same samples with both axes open; `h` records `H`.
pub fn nil_lax_integrate(v: &ScalarField, b: &ScalarField, h: f64, psi0: (C64, C64)) -> Result<SpinorField> {
    let g = v.grid;
    let lax = lax_coefficients(v, b)?;
    let mut p1 = Array2::zeros(g.shape());
    let mut p2 = Array2::zeros(g.shape());
    p1[(0, 0)] = psi0.0;
    p2[(0, 0)] = psi0.1;
    let mut step = |from: (usize, usize), to: (usize, usize), dir: usize| -> Result<()> {
        let x = lax.edge(&g, from, dir) * nalgebra::Vector2::new(p1[from], p2[from]);
        if !(x.norm() < 1e12) {
            return Err(Error::BlowUp(format!("Lax transport reached |psi| = {:e} at {to:?}", x.norm())));
        }
        p1[to] = x[0];
        p2[to] = x[1];
        Ok(())
    };
    for i in 0..g.nu - 1 {
        step((i, 0), (i + 1, 0), 0)?;
    }
    for i in 0..g.nu {
        for j in 0..g.nv - 1 {
            step((i, j), (i, j + 1), 1)?;
        }
    }
    let open = g.periodic(false, false).with_stencil(Stencil::Central2);
    SpinorField::new(open, p1, p2, Array2::from_elem(g.shape(), h))
}

/// `|| P_{-v} P_{-u} P_{+v} P_{+u} - I ||` around every cell of the Lax system.
pub fn lax_holonomy(v: &ScalarField, b: &ScalarField) -> Result<Array2<f64>> {
    let g = v.grid;
    let lax = lax_coefficients(v, b)?;
    let mut out = Array2::zeros((g.nu - 1, g.nv - 1));
    for ((i, j), o) in out.indexed_iter_mut() {
        let up = lax.edge(&g, (i, j), 0);
        let right = lax.edge(&g, (i + 1, j), 1);
        let down = lax.edge(&g, (i, j + 1), 0);
        let left = lax.edge(&g, (i, j), 1);
        let inv = |m: M2| m.try_inverse().expect("propagators are invertible");
        let loop_ = inv(left) * inv(down) * right * up;
        *o = (loop_ - M2::identity()).norm();
    }
    Ok(out)
}
