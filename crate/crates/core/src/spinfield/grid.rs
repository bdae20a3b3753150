use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1, ArrayViewMut1, Axis, Zip};
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Difference scheme for first derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stencil {
    /// Second-order central differences, one-sided at open edges.
    #[default]
    Central2,
    /// Fourth-order central differences, one-sided at open edges.
    Central4,
    /// Fourier differentiation on periodic axes, `Central4` on open ones.
    Spectral,
}

/// Behaviour of a field across a periodic seam.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Parity {
    #[default]
    Even,
    /// The field changes sign after one period (spinors on a circle of revolution).
    Odd,
}

/// Rectangular sample lattice `z = origin + iu du + i iv dv`.
///
/// On a periodic axis the `n` samples cover exactly one period `n d`; on an
/// open axis the first and last samples are the edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub nu: usize,
    pub nv: usize,
    pub du: f64,
    pub dv: f64,
    pub origin: C64,
    pub periodic_u: bool,
    pub periodic_v: bool,
    #[serde(default)]
    pub stencil: Stencil,
}

impl Grid2D {
    pub fn new(nu: usize, nv: usize, du: f64, dv: f64) -> Result<Self> {
        let g = Grid2D {
            nu,
            nv,
            du,
            dv,
            origin: C64::new(0.0, 0.0),
            periodic_u: false,
            periodic_v: false,
            stencil: Stencil::Central2,
        };
        g.validate()?;
        Ok(g)
    }

    /// Open grid covering `[u0, u1] x [v0, v1]` with `nu x nv` samples.
    pub fn rect(nu: usize, nv: usize, u: (f64, f64), v: (f64, f64)) -> Result<Self> {
        if nu < 2 || nv < 2 {
            return Err(Error::InvalidGrid(format!("need nu, nv >= 4, got {nu} x {nv}")));
        }
        let mut g = Self::new(nu, nv, (u.1 - u.0) / (nu - 1) as f64, (v.1 - v.0) / (nv - 1) as f64)?;
        g.origin = C64::new(u.0, v.0);
        Ok(g)
    }

    /// Doubly periodic grid on `[0, lu) x [0, lv)`.
    pub fn torus(nu: usize, nv: usize, lu: f64, lv: f64) -> Result<Self> {
        Ok(Self::new(nu, nv, lu / nu as f64, lv / nv as f64)?.periodic(true, true))
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu < 4 || self.nv < 4 {
            return Err(Error::InvalidGrid(format!(
                "need nu, nv >= 4, got {} x {}",
                self.nu, self.nv
            )));
        }
        if !(self.du > 0.0 && self.dv > 0.0 && self.du.is_finite() && self.dv.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "spacings must be positive, got du = {}, dv = {}",
                self.du, self.dv
            )));
        }
        Ok(())
    }

    pub fn periodic(mut self, pu: bool, pv: bool) -> Self {
        self.periodic_u = pu;
        self.periodic_v = pv;
        self
    }

    pub fn with_origin(mut self, origin: C64) -> Self {
        self.origin = origin;
        self
    }

    pub fn with_stencil(mut self, stencil: Stencil) -> Self {
        self.stencil = stencil;
        self
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nu, self.nv)
    }

    pub fn z(&self, iu: usize, iv: usize) -> C64 {
        self.origin + C64::new(iu as f64 * self.du, iv as f64 * self.dv)
    }

    /// Samples of `f(z)`.
    pub fn sample<T, F: Fn(C64) -> T>(&self, f: F) -> Array2<T> {
        Array2::from_shape_fn((self.nu, self.nv), |(i, j)| f(self.z(i, j)))
    }

    pub fn check<T>(&self, a: &Array2<T>) -> Result<()> {
        if a.dim() != self.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                found: a.dim(),
            });
        }
        Ok(())
    }

    /// Coordinate cell area `du dv`.
    pub fn cell_area(&self) -> f64 {
        self.du * self.dv
    }

    /// Samples at least `rings` steps away from every open edge.
    pub fn is_interior(&self, iu: usize, iv: usize, rings: usize) -> bool {
        let ok_u = self.periodic_u || (iu >= rings && iu + rings < self.nu);
        let ok_v = self.periodic_v || (iv >= rings && iv + rings < self.nv);
        ok_u && ok_v
    }

    /// Same grid with spacings halved (twice as many cells on each axis).
    pub fn refined(&self) -> Self {
        let mut g = *self;
        if self.periodic_u {
            g.nu *= 2;
        } else {
            g.nu = 2 * (self.nu - 1) + 1;
        }
        if self.periodic_v {
            g.nv *= 2;
        } else {
            g.nv = 2 * (self.nv - 1) + 1;
        }
        g.du /= 2.0;
        g.dv /= 2.0;
        g
    }

    pub fn d_u(&self, f: &Array2<C64>) -> Result<Array2<C64>> {
        self.d_u_with(f, Parity::Even)
    }

    pub fn d_v(&self, f: &Array2<C64>) -> Result<Array2<C64>> {
        self.d_v_with(f, Parity::Even)
    }

    pub fn d_u_with(&self, f: &Array2<C64>, parity: Parity) -> Result<Array2<C64>> {
        self.check(f)?;
        Ok(derive_axis(f, Axis(0), self.du, self.periodic_u, parity, self.stencil))
    }

    pub fn d_v_with(&self, f: &Array2<C64>, parity: Parity) -> Result<Array2<C64>> {
        self.check(f)?;
        Ok(derive_axis(f, Axis(1), self.dv, self.periodic_v, parity, self.stencil))
    }

    /// `d = (d_u - i d_v) / 2`.
    pub fn d_z(&self, f: &Array2<C64>) -> Result<Array2<C64>> {
        self.d_z_with(f, [Parity::Even; 2])
    }

    /// `dbar = (d_u + i d_v) / 2`.
    pub fn d_zbar(&self, f: &Array2<C64>) -> Result<Array2<C64>> {
        self.d_zbar_with(f, [Parity::Even; 2])
    }

    pub fn d_z_with(&self, f: &Array2<C64>, parity: [Parity; 2]) -> Result<Array2<C64>> {
        let fu = self.d_u_with(f, parity[0])?;
        let fv = self.d_v_with(f, parity[1])?;
        Ok(Zip::from(&fu).and(&fv).map_collect(|a, b| 0.5 * (a - C64::i() * b)))
    }

    pub fn d_zbar_with(&self, f: &Array2<C64>, parity: [Parity; 2]) -> Result<Array2<C64>> {
        let fu = self.d_u_with(f, parity[0])?;
        let fv = self.d_v_with(f, parity[1])?;
        Ok(Zip::from(&fu).and(&fv).map_collect(|a, b| 0.5 * (a + C64::i() * b)))
    }

    /// Real-field convenience wrappers.
    pub fn d_z_real(&self, f: &Array2<f64>) -> Result<Array2<C64>> {
        self.d_z(&to_complex(f))
    }

    pub fn d_zbar_real(&self, f: &Array2<f64>) -> Result<Array2<C64>> {
        self.d_zbar(&to_complex(f))
    }

    /// Largest number of samples a derivative stencil reaches along one axis.
    pub fn stencil_radius(&self) -> usize {
        match self.stencil {
            Stencil::Central2 => 1,
            Stencil::Central4 => 2,
            Stencil::Spectral => 2,
        }
    }

    /// Mask of samples whose derivative stencil touches only valid samples.
    pub fn erode(&self, mask: &Array2<bool>) -> Array2<bool> {
        let r = self.stencil_radius() as isize;
        let (nu, nv) = (self.nu as isize, self.nv as isize);
        let spectral_u = self.stencil == Stencil::Spectral && self.periodic_u;
        let spectral_v = self.stencil == Stencil::Spectral && self.periodic_v;
        let any_invalid = mask.iter().any(|m| !m);
        Array2::from_shape_fn((self.nu, self.nv), |(i, j)| {
            if !mask[(i, j)] {
                return false;
            }
            if !any_invalid {
                return true;
            }
            // a global transform sees every sample on its line
            if spectral_u && (0..self.nu).any(|k| !mask[(k, j)]) {
                return false;
            }
            if spectral_v && (0..self.nv).any(|k| !mask[(i, k)]) {
                return false;
            }
            for d in -r..=r {
                let a = idx(i as isize + d, nu, self.periodic_u);
                let b = idx(j as isize + d, nv, self.periodic_v);
                if let Some(a) = a {
                    if !mask[(a, j)] {
                        return false;
                    }
                }
                if let Some(b) = b {
                    if !mask[(i, b)] {
                        return false;
                    }
                }
            }
            true
        })
    }
}

fn idx(k: isize, n: isize, periodic: bool) -> Option<usize> {
    if periodic {
        Some(k.rem_euclid(n) as usize)
    } else if k >= 0 && k < n {
        Some(k as usize)
    } else {
        None
    }
}

pub fn to_complex(f: &Array2<f64>) -> Array2<C64> {
    f.mapv(|x| C64::new(x, 0.0))
}

fn derive_axis(
    f: &Array2<C64>,
    axis: Axis,
    h: f64,
    periodic: bool,
    parity: Parity,
    stencil: Stencil,
) -> Array2<C64> {
    let mut out = Array2::zeros(f.dim());
    let n = f.len_of(axis);
    let spectral = if stencil == Stencil::Spectral && periodic {
        Some(SpectralDiff::new(n, h, parity))
    } else {
        None
    };
    for (lane, mut o) in f.lanes(axis).into_iter().zip(out.lanes_mut(axis)) {
        match &spectral {
            Some(sd) => sd.apply(lane, &mut o),
            None => {
                let order4 = stencil != Stencil::Central2 && n >= 5;
                if periodic {
                    periodic_fd(lane, &mut o, h, parity, order4);
                } else {
                    open_fd(lane, &mut o, h, order4);
                }
            }
        }
    }
    out
}

fn periodic_fd(f: ArrayView1<C64>, out: &mut ArrayViewMut1<C64>, h: f64, parity: Parity, order4: bool) {
    let n = f.len() as isize;
    let sign = if parity == Parity::Odd { -1.0 } else { 1.0 };
    let at = |k: isize| -> C64 {
        let wraps = k.div_euclid(n);
        let v = f[k.rem_euclid(n) as usize];
        if wraps % 2 != 0 {
            v * sign
        } else {
            v
        }
    };
    for i in 0..n {
        out[i as usize] = if order4 {
            (-at(i + 2) + at(i + 1) * 8.0 - at(i - 1) * 8.0 + at(i - 2)) / (12.0 * h)
        } else {
            (at(i + 1) - at(i - 1)) / (2.0 * h)
        };
    }
}

fn open_fd(f: ArrayView1<C64>, out: &mut ArrayViewMut1<C64>, h: f64, order4: bool) {
    let n = f.len();
    if order4 {
        let c = 1.0 / (12.0 * h);
        for i in 2..n - 2 {
            out[i] = (-f[i + 2] + f[i + 1] * 8.0 - f[i - 1] * 8.0 + f[i - 2]) * c;
        }
        out[0] = (f[0] * -25.0 + f[1] * 48.0 - f[2] * 36.0 + f[3] * 16.0 - f[4] * 3.0) * c;
        out[1] = (f[0] * -3.0 - f[1] * 10.0 + f[2] * 18.0 - f[3] * 6.0 + f[4]) * c;
        let m = n - 1;
        out[m] = (f[m] * 25.0 - f[m - 1] * 48.0 + f[m - 2] * 36.0 - f[m - 3] * 16.0 + f[m - 4] * 3.0) * c;
        out[m - 1] = (f[m] * 3.0 + f[m - 1] * 10.0 - f[m - 2] * 18.0 + f[m - 3] * 6.0 - f[m - 4]) * c;
    } else {
        let c = 1.0 / (2.0 * h);
        for i in 1..n - 1 {
            out[i] = (f[i + 1] - f[i - 1]) * c;
        }
        out[0] = (f[0] * -3.0 + f[1] * 4.0 - f[2]) * c;
        out[n - 1] = (f[n - 1] * 3.0 - f[n - 2] * 4.0 + f[n - 3]) * c;
    }
}

/// Fourier differentiation along one periodic axis.
pub(crate) struct SpectralDiff {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Multiplier per Fourier mode.
    mult: Vec<C64>,
    /// Phase twist that turns an antiperiodic sample into a periodic one.
    twist: Option<Vec<C64>>,
}

impl SpectralDiff {
    pub(crate) fn new(n: usize, h: f64, parity: Parity) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let period = n as f64 * h;
        let shift = if parity == Parity::Odd { 0.5 } else { 0.0 };
        let mult = (0..n)
            .map(|j| {
                let k = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                // the unpaired Nyquist mode of an even-length periodic signal has no derivative
                if parity == Parity::Even && n % 2 == 0 && j == n / 2 {
                    C64::new(0.0, 0.0)
                } else {
                    C64::new(0.0, 2.0 * std::f64::consts::PI * (k - shift) / period)
                }
            })
            .collect();
        // f = g e^{-i pi x / L} with g periodic; differentiate g's modes shifted by -1/2
        let twist = (parity == Parity::Odd).then(|| {
            (0..n)
                .map(|j| C64::from_polar(1.0, std::f64::consts::PI * j as f64 / n as f64))
                .collect()
        });
        SpectralDiff {
            n,
            fwd,
            inv,
            mult,
            twist,
        }
    }

    pub(crate) fn apply(&self, f: ArrayView1<C64>, out: &mut ArrayViewMut1<C64>) {
        let mut buf: Vec<C64> = f.iter().copied().collect();
        if let Some(t) = &self.twist {
            buf.iter_mut().zip(t).for_each(|(b, t)| *b *= t);
        }
        self.fwd.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().zip(&self.mult).for_each(|(b, m)| *b *= m * scale);
        self.inv.process(&mut buf);
        if let Some(t) = &self.twist {
            buf.iter_mut().zip(t).for_each(|(b, t)| *b *= t.conj());
        }
        for (o, b) in out.iter_mut().zip(buf) {
            *o = b;
        }
    }
}

/// Spectral differentiation of a single periodic sequence (used by the profile code).
pub fn spectral_derivative(f: &[C64], h: f64, parity: Parity) -> Vec<C64> {
    let sd = SpectralDiff::new(f.len(), h, parity);
    let a = Array1::from(f.to_vec());
    let mut out = Array1::zeros(f.len());
    sd.apply(a.view(), &mut out.view_mut());
    out.to_vec()
}
