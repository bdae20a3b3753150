//! Linear algebra for the grid solvers: a block (cyclic) tridiagonal direct
//! solver and restarted GMRES.

use nalgebra::{DMatrix, DVector, LU};
use num_complex::Complex64 as C64;

use crate::error::{ConvergenceFailure, Error, Result};

type Mat = DMatrix<C64>;
type Vector = DVector<C64>;

/// `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = b[i]`, with indices
/// taken modulo `n` when `cyclic`.
#[derive(Debug, Clone)]
pub struct BlockTridiag {
    pub lower: Vec<Mat>,
    pub diag: Vec<Mat>,
    pub upper: Vec<Mat>,
    pub cyclic: bool,
}

/// Factored form of a [`BlockTridiag`], reusable for many right-hand sides.
pub struct BlockFactor {
    a: Vec<LU<C64, nalgebra::Dyn, nalgebra::Dyn>>,
    upper: Vec<Mat>,
    corner: Vec<Mat>,
    g: Vec<Mat>,
    h: Vec<Mat>,
    s: LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
    m: usize,
}

impl BlockTridiag {
    pub fn zeros(n: usize, m: usize, cyclic: bool) -> Self {
        BlockTridiag {
            lower: vec![Mat::zeros(m, m); n],
            diag: vec![Mat::zeros(m, m); n],
            upper: vec![Mat::zeros(m, m); n],
            cyclic,
        }
    }

    pub fn nblocks(&self) -> usize {
        self.diag.len()
    }

    /// Dense matrix-vector product (used for verification and GMRES).
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let n = self.nblocks();
        let m = self.diag[0].nrows();
        let blk = |i: usize| Vector::from_column_slice(&x[i * m..(i + 1) * m]);
        let mut out = vec![C64::new(0.0, 0.0); n * m];
        for i in 0..n {
            let mut y = &self.diag[i] * blk(i);
            if i > 0 {
                y += &self.lower[i] * blk(i - 1);
            } else if self.cyclic {
                y += &self.lower[0] * blk(n - 1);
            }
            if i + 1 < n {
                y += &self.upper[i] * blk(i + 1);
            } else if self.cyclic {
                y += &self.upper[n - 1] * blk(0);
            }
            out[i * m..(i + 1) * m].copy_from_slice(y.as_slice());
        }
        out
    }

    /// Block Gaussian elimination carrying the cyclic corner as a dense column.
    pub fn factor(&self) -> Result<BlockFactor> {
        let n = self.nblocks();
        if n < 3 {
            return Err(Error::InvalidGrid("block solver needs at least 3 blocks".into()));
        }
        let m = self.diag[0].nrows();
        let zero = Mat::zeros(m, m);
        let singular = || Error::NonConvergence(ConvergenceFailure {
            solver: "block-tridiagonal",
            iterations: 0,
            residuals: vec![f64::INFINITY],
        });
        let mut a = Vec::with_capacity(n - 1);
        let mut corner = Vec::with_capacity(n - 1);
        let mut g = Vec::with_capacity(n - 1);
        let mut h = Vec::with_capacity(n - 1);
        let mut upper = Vec::with_capacity(n - 1);

        let mut a_cur = self.diag[0].clone();
        let mut c_cur = if self.cyclic { self.lower[0].clone() } else { zero.clone() };
        // coefficient of x[i] in the last row while x[0..i] are eliminated
        let mut p = if self.cyclic { self.upper[n - 1].clone() } else { zero.clone() };
        let mut s = self.diag[n - 1].clone();
        for i in 0..n - 1 {
            let lu = a_cur.clone().lu();
            if !lu.is_invertible() {
                return Err(singular());
            }
            let last = i == n - 2;
            let c_eff = if last { &self.upper[i] + &c_cur } else { c_cur.clone() };
            if last {
                p += &self.lower[n - 1];
            }
            // H = p A^-1 via the transposed system
            let hi = a_cur
                .transpose()
                .lu()
                .solve(&p.transpose())
                .ok_or_else(singular)?
                .transpose();
            s -= &hi * &c_eff;
            if !last {
                let ainv = lu.solve(&Mat::identity(m, m)).ok_or_else(singular)?;
                let gi = &self.lower[i + 1] * &ainv;
                a_cur = &self.diag[i + 1] - &gi * &self.upper[i];
                c_cur = -(&gi * &c_cur);
                p = -(&hi * &self.upper[i]);
                g.push(gi);
            }
            a.push(lu);
            h.push(hi);
            upper.push(if last { zero.clone() } else { self.upper[i].clone() });
            corner.push(c_eff);
        }
        let s = s.lu();
        if !s.is_invertible() {
            return Err(singular());
        }
        Ok(BlockFactor {
            a,
            upper,
            corner,
            g,
            h,
            s,
            m,
        })
    }

    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        self.factor()?.solve(b)
    }
}

impl BlockFactor {
    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        let m = self.m;
        let n = self.a.len() + 1;
        if b.len() != n * m {
            return Err(Error::ShapeMismatch {
                expected: (n * m, 1),
                found: (b.len(), 1),
            });
        }
        let blk = |i: usize| Vector::from_column_slice(&b[i * m..(i + 1) * m]);
        let mut r: Vec<Vector> = Vec::with_capacity(n - 1);
        let mut rl = blk(n - 1);
        let mut cur = blk(0);
        for i in 0..n - 1 {
            rl -= &self.h[i] * &cur;
            r.push(cur.clone());
            if i < n - 2 {
                cur = blk(i + 1) - &self.g[i] * &cur;
            }
        }
        let fail = || Error::NonConvergence(ConvergenceFailure {
            solver: "block-tridiagonal",
            iterations: 0,
            residuals: vec![f64::INFINITY],
        });
        let x_last = self.s.solve(&rl).ok_or_else(fail)?;
        let mut x = vec![Vector::zeros(m); n];
        x[n - 1] = x_last.clone();
        for i in (0..n - 1).rev() {
            let mut rhs = r[i].clone() - &self.corner[i] * &x_last;
            if i < n - 2 {
                rhs -= &self.upper[i] * &x[i + 1];
            }
            x[i] = self.a[i].solve(&rhs).ok_or_else(fail)?;
        }
        Ok(x.into_iter().flat_map(|v| v.as_slice().to_vec()).collect())
    }
}

/// Restarted GMRES with right preconditioning.
///
/// Returns the solution and the history of relative residual norms.
pub fn gmres(
    apply: impl Fn(&[C64]) -> Vec<C64>,
    precond: impl Fn(&[C64]) -> Vec<C64>,
    b: &[C64],
    x0: Option<&[C64]>,
    rtol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<(Vec<C64>, Vec<f64>)> {
    let n = b.len();
    let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let mut x: Vec<C64> = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![C64::new(0.0, 0.0); n]);
    let mut history = Vec::new();
    let mut total = 0;
    loop {
        let ax = apply(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(a, c)| a - c).collect();
        let beta = norm(&r);
        history.push(beta / bnorm);
        if beta / bnorm <= rtol {
            return Ok((x, history));
        }
        if total >= max_iter {
            return Err(Error::NonConvergence(ConvergenceFailure {
                solver: "gmres",
                iterations: total,
                residuals: history,
            }));
        }
        let mut v: Vec<Vec<C64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut z_basis: Vec<Vec<C64>> = Vec::new();
        let mut hmat = vec![vec![C64::new(0.0, 0.0); restart]; restart + 1];
        let mut cs = vec![C64::new(0.0, 0.0); restart];
        let mut sn = vec![C64::new(0.0, 0.0); restart];
        let mut g = vec![C64::new(0.0, 0.0); restart + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..restart {
            total += 1;
            let zk = precond(&v[k]);
            let mut w = apply(&zk);
            z_basis.push(zk);
            for (j, vj) in v.iter().enumerate() {
                let hij: C64 = vj.iter().zip(&w).map(|(a, c)| a.conj() * c).sum();
                hmat[j][k] = hij;
                w.iter_mut().zip(vj).for_each(|(wi, vi)| *wi -= hij * vi);
            }
            let hn = norm(&w);
            hmat[k + 1][k] = C64::new(hn, 0.0);
            for j in 0..k {
                let t = cs[j].conj() * hmat[j][k] + sn[j].conj() * hmat[j + 1][k];
                hmat[j + 1][k] = -sn[j] * hmat[j][k] + cs[j] * hmat[j + 1][k];
                hmat[j][k] = t;
            }
            let (a, bb) = (hmat[k][k], hmat[k + 1][k]);
            let d = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if d == 0.0 {
                cs[k] = C64::new(1.0, 0.0);
                sn[k] = C64::new(0.0, 0.0);
            } else {
                cs[k] = a / d;
                sn[k] = bb / d;
            }
            hmat[k][k] = cs[k].conj() * a + sn[k].conj() * bb;
            hmat[k + 1][k] = C64::new(0.0, 0.0);
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k].conj() * g[k];
            k_used = k + 1;
            let res = g[k + 1].norm() / bnorm;
            if res <= rtol || hn < 1e-300 || total >= max_iter {
                break;
            }
            v.push(w.iter().map(|z| z / hn).collect());
        }
        let mut y = vec![C64::new(0.0, 0.0); k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= hmat[i][j] * y[j];
            }
            y[i] = s / hmat[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            x.iter_mut().zip(&z_basis[j]).for_each(|(xi, zi)| *xi += yj * zi);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_system(n: usize, m: usize, cyclic: bool, seed: u64) -> BlockTridiag {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rnd = |scale: f64| {
            Mat::from_fn(m, m, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale)
        };
        let mut t = BlockTridiag::zeros(n, m, cyclic);
        for i in 0..n {
            t.lower[i] = rnd(0.5);
            t.upper[i] = rnd(0.5);
            t.diag[i] = rnd(0.5) + Mat::identity(m, m) * C64::new(4.0 * m as f64, 0.0);
        }
        if !cyclic {
            t.lower[0] = Mat::zeros(m, m);
            t.upper[n - 1] = Mat::zeros(m, m);
        }
        t
    }

    #[test]
    fn direct_solver_inverts_apply() {
        for (n, m, cyclic) in [(3, 2, true), (5, 3, false), (8, 4, true), (4, 1, true)] {
            let t = random_system(n, m, cyclic, n as u64 * 10 + m as u64);
            let x: Vec<C64> = (0..n * m).map(|k| C64::new((k as f64).sin(), (k as f64 * 0.3).cos())).collect();
            let b = t.apply(&x);
            let y = t.solve(&b).unwrap();
            let err = x.iter().zip(&y).map(|(a, c)| (a - c).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "{n} {m} {cyclic}: {err}");
        }
    }

    #[test]
    fn gmres_solves_with_and_without_preconditioner() {
        let t = random_system(6, 3, true, 3);
        let x: Vec<C64> = (0..18).map(|k| C64::new(k as f64, 1.0)).collect();
        let b = t.apply(&x);
        let (y, hist) = gmres(|v| t.apply(v), |v| v.to_vec(), &b, None, 1e-12, 30, 200).unwrap();
        assert!(*hist.last().unwrap() < 1e-12);
        let err = x.iter().zip(&y).map(|(a, c)| (a - c).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9);
        let f = t.factor().unwrap();
        let (_, hist) = gmres(|v| t.apply(v), |v| f.solve(v).unwrap(), &b, None, 1e-12, 30, 200).unwrap();
        assert!(hist.len() <= 3);
    }
}
