//! Surfaces of revolution in Nil.
//!
//! Rotations about the vertical axis act isometrically on Nil with orbit
//! space the half plane `u >= 0` carrying the metric `du^2 + dv^2/(1 + tau^2 u^2)`,
//! `tau = 1/2` (written `du^2 + 4 dv^2/(4 + u^2)`). A unit-speed profile is
//! described by its turning angle `sigma` against `d/du`:
//!
//! ```text
//! u' = cos sigma,   v' = sqrt(1 + tau^2 u^2) sin sigma
//! ```
//!
//! and the surface is CMC with `H = k` exactly when `sigma' = sin sigma / u`
//! with pole slope `sigma / u -> k`. Setting `tau = 0` gives Euclidean
//! surfaces of revolution, used here as a sanity check.
//!
//! Revolved surfaces are sampled in the conformal parameter `t`,
//! `ds/dt = rho = u sqrt(1 + tau^2 u^2)` (the orbit radius), times the
//! rotation angle.

use std::f64::consts::PI;
use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::functionals::{self, SurfaceMeasure};
use crate::liegeo::{bundle_algebra, LieAlgebra3, MatrixModel};
use crate::recon::{mean_curvature, unit_normal, FrameField};
use crate::spinfield::io::fmt_f64;
use crate::spinfield::{Grid2D, SpinorField, Stencil};

/// Bundle curvature of Nil with `[e1, e2] = e3`.
pub const NIL_TAU: f64 = 0.5;

/// Rule for the turning angle along a profile.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileLaw {
    /// `sigma' = sin sigma / u`, pole slope `k`.
    Cmc { k: f64 },
    /// `sigma' = sin sigma / u + amp sin(2 pi s / period)`: not CMC.
    Forced { k: f64, amp: f64, period: f64 },
    /// `sigma = pi s / L + sum a_n sin(n pi s / L)` on `[0, L]`. Even `n`
    /// keep the profile symmetric, so it closes at `s = L`.
    Fourier { length: f64, coeffs: Vec<(u32, f64)> },
    /// Euclidean ellipse with semi-axes `a` (radial) and `c` (axial):
    /// `sigma' = (c^2 cos^2 sigma + a^2 sin^2 sigma)^{3/2} / (a c)^2`.
    Ellipse { a: f64, c: f64 },
    /// Samples without a generating rule.
    Sampled,
}

impl ProfileLaw {
    fn pole_slope(&self) -> Result<f64> {
        Ok(match self {
            ProfileLaw::Cmc { k } | ProfileLaw::Forced { k, .. } => *k,
            ProfileLaw::Fourier { length, coeffs } => {
                PI / length + coeffs.iter().map(|(n, a)| a * *n as f64 * PI / length).sum::<f64>()
            }
            ProfileLaw::Ellipse { a, c } => c / (a * a),
            ProfileLaw::Sampled => return Err(Error::Profile("sampled profile has no generating law".into())),
        })
    }

    /// `d sigma / ds`; `None` for [`ProfileLaw::Sampled`].
    pub fn sigma_dot(&self, s: f64, u: f64, sigma: f64) -> Option<f64> {
        Some(match self {
            ProfileLaw::Cmc { .. } => sigma.sin() / u,
            ProfileLaw::Forced { amp, period, .. } => sigma.sin() / u + amp * (2.0 * PI * s / period).sin(),
            ProfileLaw::Fourier { length, coeffs } => {
                let w = PI / length;
                w + coeffs
                    .iter()
                    .map(|(n, a)| a * *n as f64 * w * (*n as f64 * w * s).cos())
                    .sum::<f64>()
            }
            ProfileLaw::Ellipse { a, c } => {
                let q = c * c * sigma.cos().powi(2) + a * a * sigma.sin().powi(2);
                q.powf(1.5) / (a * a * c * c)
            }
            ProfileLaw::Sampled => return None,
        })
    }

    /// `rho * d sigma / ds`, regular at the axis for the CMC law.
    fn sigma_t(&self, s: f64, u: f64, sigma: f64, tau: f64) -> f64 {
        let g = (1.0 + tau * tau * u * u).sqrt();
        match self {
            ProfileLaw::Cmc { .. } => g * sigma.sin(),
            _ => u * g * self.sigma_dot(s, u, sigma).unwrap_or(0.0),
        }
    }
}

/// Sampled profile curve in the orbit half plane.
#[derive(Debug, Clone)]
pub struct ProfileCurve {
    pub tau: f64,
    pub law: ProfileLaw,
    pub s: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub sigma: Vec<f64>,
    pub sigma_dot: Vec<f64>,
    /// Quadrature weights for `ds`.
    pub weights: Vec<f64>,
    pub closed_pole_to_pole: bool,
    pub periodic: bool,
}

impl ProfileCurve {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Orbit radius `rho = u sqrt(1 + tau^2 u^2)` at sample `i`.
    pub fn rho(&self, i: usize) -> f64 {
        let u = self.u[i];
        u * (1.0 + self.tau * self.tau * u * u).sqrt()
    }

    /// `max |sigma' - sin sigma / u|` over samples off the axis.
    pub fn cmc_defect(&self) -> f64 {
        (0..self.len())
            .filter(|&i| self.u[i] > 0.0)
            .map(|i| (self.sigma_dot[i] - self.sigma[i].sin() / self.u[i]).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with columns `s,u,v,sigma`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "s,u,v,sigma")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_f64(self.s[i]),
                fmt_f64(self.u[i]),
                fmt_f64(self.v[i]),
                fmt_f64(self.sigma[i])
            )?;
        }
        Ok(())
    }
}

/// Composite Simpson weights on `n` equally spaced samples (trapezoid on a
/// trailing odd interval).
fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    if n < 2 {
        return w;
    }
    let m = if (n - 1) % 2 == 0 { n } else { n - 1 };
    if m >= 3 {
        for (i, wi) in w.iter_mut().enumerate().take(m) {
            *wi = if i == 0 || i == m - 1 {
                h / 3.0
            } else if i % 2 == 1 {
                4.0 * h / 3.0
            } else {
                2.0 * h / 3.0
            };
        }
    }
    if m < n {
        w[n - 2] += 0.5 * h;
        w[n - 1] += 0.5 * h;
    }
    w
}

type State = [f64; 3];

fn rhs(law: &ProfileLaw, tau: f64, s: f64, y: &State) -> State {
    let (u, sigma) = (y[0], y[2]);
    [
        sigma.cos(),
        (1.0 + tau * tau * u * u).sqrt() * sigma.sin(),
        law.sigma_dot(s, u, sigma).unwrap_or(0.0),
    ]
}

fn rk4_step(law: &ProfileLaw, tau: f64, s: f64, y: &State, h: f64) -> State {
    let add = |a: &State, b: &State, c: f64| -> State { [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]] };
    let k1 = rhs(law, tau, s, y);
    let k2 = rhs(law, tau, s + 0.5 * h, &add(y, &k1, 0.5 * h));
    let k3 = rhs(law, tau, s + 0.5 * h, &add(y, &k2, 0.5 * h));
    let k4 = rhs(law, tau, s + h, &add(y, &k3, h));
    std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Integrates a profile from the axis with fixed arc-length step `h` (RK4)
/// until it returns to the axis.
///
/// The first step uses the pole expansion `sigma = a s`, `u = sin(a s)/a`,
/// `v = sqrt(1 + ...) (1 - cos(a s))/a`, exact to `O(s^5)` for the CMC law.
pub fn integrate_profile(law: ProfileLaw, tau: f64, smax: f64, h: f64) -> Result<ProfileCurve> {
    if !(h > 0.0 && smax > h) {
        return Err(Error::OutOfRange {
            name: "h",
            value: h,
            reason: "step must be positive and below smax",
        });
    }
    let a = law.pole_slope()?;
    if !(a > 0.0) {
        return Err(Error::OutOfRange {
            name: "k",
            value: a,
            reason: "pole slope must be positive",
        });
    }
    if let ProfileLaw::Fourier { length, .. } = law {
        return integrate_fourier(law, tau, length, h);
    }
    let mut s = vec![0.0, h];
    let mut y: Vec<State> = vec![[0.0; 3], [(a * h).sin() / a, (1.0 - (a * h).cos()) / a, a * h]];
    let mut sd = vec![a, law.sigma_dot(h, y[1][0], y[1][2]).unwrap_or(a)];
    loop {
        let cur = *y.last().expect("nonempty");
        let sc = *s.last().expect("nonempty");
        if sc > smax {
            return Err(Error::Profile(format!("no return to the axis before s = {smax}")));
        }
        let next = rk4_step(&law, tau, sc, &cur, h);
        if next[0] < 0.0 && cur[2].cos() >= 0.0 {
            return Err(Error::Profile(format!("u < 0 at s = {}", sc + h)));
        }
        let closing = cur[2].cos() < 0.0 && (next[0] < 1.5 * h || next[2] >= PI);
        if closing {
            // remaining distance to the axis along u' = cos sigma ~ -1
            let d = cur[0] / (-cur[2].cos()).max(0.5);
            let g = (1.0 + tau * tau * cur[0] * cur[0]).sqrt();
            s.push(sc + d);
            y.push([0.0, cur[1] + 0.5 * g * cur[2].sin() * d, PI]);
            sd.push(*sd.last().expect("nonempty"));
            let n = s.len();
            let mut weights = simpson_weights(n - 1, h);
            weights[n - 2] += 0.5 * d;
            weights.push(0.5 * d);
            return Ok(finish(law, tau, s, y, sd, weights, true));
        }
        s.push(sc + h);
        sd.push(law.sigma_dot(sc + h, next[0], next[2]).unwrap_or(0.0));
        y.push(next);
    }
}

fn integrate_fourier(law: ProfileLaw, tau: f64, length: f64, h: f64) -> Result<ProfileCurve> {
    let n = (length / h).ceil().max(4.0) as usize;
    let h = length / n as f64;
    let mut s = Vec::with_capacity(n + 1);
    let mut y: Vec<State> = Vec::with_capacity(n + 1);
    let mut sd = Vec::with_capacity(n + 1);
    let mut cur = [0.0; 3];
    for i in 0..=n {
        let si = i as f64 * h;
        if i > 0 {
            cur = rk4_step(&law, tau, si - h, &cur, h);
        }
        if i > 0 && i < n && cur[0] <= 0.0 {
            return Err(Error::Profile(format!("u <= 0 at s = {si}")));
        }
        s.push(si);
        sd.push(law.sigma_dot(si, cur[0], cur[2]).unwrap_or(0.0));
        y.push(cur);
    }
    let closed = y[n][0].abs() < 1e-6 * length && (y[n][2] - PI).abs() < 1e-9;
    if !closed {
        return Err(Error::Profile(format!("profile ends at u = {} off the axis", y[n][0])));
    }
    y[n][0] = 0.0;
    let w = simpson_weights(n + 1, h);
    Ok(finish(law, tau, s, y, sd, w, true))
}

fn finish(
    law: ProfileLaw,
    tau: f64,
    s: Vec<f64>,
    y: Vec<State>,
    sigma_dot: Vec<f64>,
    weights: Vec<f64>,
    closed: bool,
) -> ProfileCurve {
    ProfileCurve {
        tau,
        law,
        s,
        u: y.iter().map(|x| x[0]).collect(),
        v: y.iter().map(|x| x[1]).collect(),
        sigma: y.iter().map(|x| x[2]).collect(),
        sigma_dot,
        weights,
        closed_pole_to_pole: closed,
        periodic: false,
    }
}

/// CMC profile in Nil with pole slope `k` (`H = k`).
pub fn cmc_profile(k: f64, smax: f64, h: f64) -> Result<ProfileCurve> {
    if !(k > 0.0) {
        return Err(Error::OutOfRange {
            name: "k",
            value: k,
            reason: "pole slope must be positive",
        });
    }
    integrate_profile(ProfileLaw::Cmc { k }, NIL_TAU, smax, h)
}

/// Symmetric pole-to-pole profile `sigma = pi s/L + sum a_n sin(n pi s/L)`, even `n`.
pub fn fourier_profile(tau: f64, length: f64, coeffs: Vec<(u32, f64)>, h: f64) -> Result<ProfileCurve> {
    if coeffs.iter().any(|(n, _)| n % 2 == 1) {
        return Err(Error::Profile("odd Fourier modes break the closing symmetry".into()));
    }
    integrate_profile(ProfileLaw::Fourier { length, coeffs }, tau, 2.0 * length, h)
}

/// Closed profile `u = u0 + r cos phi`, `v = r sin phi` (a torus of revolution),
/// sampled at `n` angles.
pub fn torus_profile(tau: f64, u0: f64, r: f64, n: usize) -> Result<ProfileCurve> {
    if !(r > 0.0 && u0 > r) || n < 8 {
        return Err(Error::Profile("torus profile needs u0 > r > 0 and n >= 8".into()));
    }
    let dphi = 2.0 * PI / n as f64;
    let mut c = ProfileCurve {
        tau,
        law: ProfileLaw::Sampled,
        s: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        sigma: Vec::with_capacity(n),
        sigma_dot: Vec::with_capacity(n),
        weights: Vec::with_capacity(n),
        closed_pole_to_pole: false,
        periodic: true,
    };
    let mut s = 0.0;
    let mut prev_sigma: Option<f64> = None;
    for i in 0..n {
        let phi = i as f64 * dphi;
        let (u, up, upp) = (u0 + r * phi.cos(), -r * phi.sin(), -r * phi.cos());
        let (v, vp, vpp) = (r * phi.sin(), r * phi.cos(), -r * phi.sin());
        let g = (1.0 + tau * tau * u * u).sqrt();
        let gp = tau * tau * u * up / g;
        let (x, y) = (up, vp / g);
        let (xp, yp) = (upp, vpp / g - vp * gp / (g * g));
        let speed = (x * x + y * y).sqrt();
        let mut sigma = y.atan2(x);
        if let Some(p) = prev_sigma {
            while sigma < p - PI {
                sigma += 2.0 * PI;
            }
            while sigma > p + PI {
                sigma -= 2.0 * PI;
            }
        }
        prev_sigma = Some(sigma);
        c.s.push(s);
        c.u.push(u);
        c.v.push(v);
        c.sigma.push(sigma);
        c.sigma_dot.push((x * yp - y * xp) / (speed * speed) / speed);
        c.weights.push(speed * dphi);
        s += speed * dphi;
    }
    Ok(c)
}

/// `E = (pi/16) integral (sigma' - sin sigma/u)^2 sqrt(4u^2 + u^4) ds + pi chi / 2`.
///
/// This is `1/4 integral (H^2 - n3^2/4) dmu` with `dmu = 2 pi rho ds` and
/// `2 rho = sqrt(4u^2 + u^4)`; the cross term `sigma' sin sigma / u` is an
/// exact derivative and gives the Euler characteristic.
pub fn spinor_energy_revolution(p: &ProfileCurve, chi: i32) -> Result<f64> {
    match (chi, p.closed_pole_to_pole, p.periodic) {
        (2, true, _) | (0, _, true) => {}
        _ => return Err(Error::Profile(format!("profile is not closed for chi = {chi}"))),
    }
    let mut acc = 0.0;
    for i in 0..p.len() {
        if p.u[i] <= 0.0 {
            continue;
        }
        let d = p.sigma_dot[i] - p.sigma[i].sin() / p.u[i];
        acc += p.weights[i] * d * d * 2.0 * p.rho(i);
    }
    Ok(PI / 16.0 * acc + PI * chi as f64 / 2.0)
}

/// Placement of `H^3` in the closed-form Willmore value of CMC spheres.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum WillmoreReading {
    /// `C = (1 + 4H^2)(3H^2 - 1/4) / (2 H^3)`.
    Denominator,
    /// `C = (1 + 4H^2)(3H^2 - 1/4) H^3 / 2`.
    AsPrinted,
}

/// `W(H) = 10 pi + pi/(2H^2) - pi C(H) (pi/2 - arctan((4H^2 - 1)/(4H)))`.
pub fn willmore_cmc_sphere(h: f64, reading: WillmoreReading) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::OutOfRange {
            name: "H",
            value: h,
            reason: "mean curvature must be positive",
        });
    }
    let base = (1.0 + 4.0 * h * h) * (3.0 * h * h - 0.25);
    let c = match reading {
        WillmoreReading::Denominator => base / (2.0 * h.powi(3)),
        WillmoreReading::AsPrinted => base * h.powi(3) / 2.0,
    };
    let arc = PI / 2.0 - ((4.0 * h * h - 1.0) / (4.0 * h)).atan();
    Ok(10.0 * PI + PI / (2.0 * h * h) - PI * c * arc)
}

/// Sampling of a revolved surface.
#[derive(Debug, Clone, Copy)]
pub struct RevolveOptions {
    pub ntheta: usize,
    /// Step in the conformal parameter.
    pub dt: f64,
    /// Stop once `u` falls below `cutoff * max u`.
    pub cutoff: f64,
    pub stencil: Stencil,
}

impl Default for RevolveOptions {
    fn default() -> Self {
        RevolveOptions {
            ntheta: 32,
            dt: 0.02,
            cutoff: 1e-4,
            stencil: Stencil::Spectral,
        }
    }
}

/// Revolved surface with its tangent data, spinor and measured curvature.
#[derive(Debug, Clone)]
pub struct RevolvedSurface {
    pub frame: FrameField,
    /// Spinor recovered from the tangent data, antiperiodic in the angle,
    /// with `h` the measured mean curvature.
    pub psi: SpinorField,
    pub algebra: LieAlgebra3,
    pub tau: f64,
    /// Vertical component of the unit normal.
    pub n3: Array2<f64>,
    /// Tangential part discarded by the curvature read-off.
    pub tangential: f64,
}

impl RevolvedSurface {
    /// Median of the measured mean curvature over the middle half of the `t` range.
    pub fn central_h(&self) -> f64 {
        let nt = self.psi.grid.nu;
        let mut vals: Vec<f64> = (nt / 4..3 * nt / 4).map(|i| self.psi.h[(i, 0)]).collect();
        vals.sort_by(|a, b| a.total_cmp(b));
        vals[vals.len() / 2]
    }

    pub fn measure(&self, chi: Option<i32>) -> Result<SurfaceMeasure> {
        SurfaceMeasure::from_spinor(&self.psi, chi)
    }
}

/// Nil with `[e1, e2] = 2 tau e3` (abelian for `tau = 0`).
pub fn revolution_algebra(tau: f64) -> LieAlgebra3 {
    if tau == 0.0 {
        LieAlgebra3::abelian()
    } else {
        bundle_algebra(0.0, 2.0 * tau)
    }
}

type TState = [f64; 5];

fn t_rhs(law: &ProfileLaw, tau: f64, y: &TState) -> TState {
    let (s, u, sigma) = (y[0], y[1], y[3]);
    let g = (1.0 + tau * tau * u * u).sqrt();
    let rho = u * g;
    let vt = rho * g * sigma.sin();
    [rho, rho * sigma.cos(), vt, law.sigma_t(s, u, sigma, tau), tau * vt / (g * g)]
}

fn t_step(law: &ProfileLaw, tau: f64, y: &TState, h: f64) -> TState {
    let add = |a: &TState, b: &TState, c: f64| -> TState { std::array::from_fn(|i| a[i] + c * b[i]) };
    let k1 = t_rhs(law, tau, y);
    let k2 = t_rhs(law, tau, &add(y, &k1, 0.5 * h));
    let k3 = t_rhs(law, tau, &add(y, &k2, 0.5 * h));
    let k4 = t_rhs(law, tau, &add(y, &k3, h));
    std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

const MAX_T_STEPS: usize = 200_000;

/// Samples the revolved surface on a `t x theta` grid.
///
/// The profile law is re-integrated in `t` from the sample of largest `u`
/// in both directions until `u` drops below the cutoff, so the poles are
/// approached but never sampled. The frame is placed exactly through the
/// native chart; the angle axis is periodic.
pub fn revolve_to_surface(p: &ProfileCurve, opts: &RevolveOptions) -> Result<RevolvedSurface> {
    if opts.ntheta < 8 {
        return Err(Error::OutOfRange {
            name: "ntheta",
            value: opts.ntheta as f64,
            reason: "at least 8 angular samples are needed",
        });
    }
    if matches!(p.law, ProfileLaw::Sampled) {
        return Err(Error::Unsupported {
            op: "revolve_to_surface",
            geometry: "sampled profile".into(),
        });
    }
    let i0 = (0..p.len())
        .max_by(|&a, &b| p.u[a].total_cmp(&p.u[b]))
        .ok_or_else(|| Error::Profile("empty profile".into()))?;
    let umax = p.u[i0];
    if !(umax > 0.0) {
        return Err(Error::Profile("degenerate profile".into()));
    }
    let tau = p.tau;
    let y0: TState = [p.s[i0], p.u[i0], p.v[i0], p.sigma[i0], 0.0];
    let s_end = *p.s.last().expect("nonempty");
    let march = |dir: f64| -> Result<Vec<TState>> {
        let mut out = Vec::new();
        let mut y = y0;
        loop {
            let next = t_step(&p.law, tau, &y, dir * opts.dt);
            if next[1] < opts.cutoff * umax || next[0] < 0.0 || next[0] > s_end || out.len() >= MAX_T_STEPS {
                break;
            }
            out.push(next);
            y = next;
        }
        Ok(out)
    };
    let back = march(-1.0)?;
    let fwd = march(1.0)?;
    let mut rows: Vec<TState> = back.into_iter().rev().collect();
    let nb = rows.len();
    rows.push(y0);
    rows.extend(fwd);
    let nt = rows.len();
    if nt < 5 {
        return Err(Error::Profile("profile too short to revolve".into()));
    }
    let nth = opts.ntheta;
    let grid = Grid2D::new(nt, nth, opts.dt, 2.0 * PI / nth as f64)?
        .periodic(false, true)
        .with_origin(C64::new(-(nb as f64) * opts.dt, 0.0))
        .with_stencil(opts.stencil);
    let alg = revolution_algebra(tau);
    let model = MatrixModel::for_algebra(&alg)?;
    let mut z: [Array2<C64>; 3] = std::array::from_fn(|_| Array2::zeros((nt, nth)));
    let mut f = Array2::from_elem((nt, nth), model.identity());
    for (i, y) in rows.iter().enumerate() {
        let d = t_rhs(&p.law, tau, y);
        let (u, v, th0) = (y[1], y[2], y[4]);
        let (ut, vt, th0t) = (d[1], d[2], d[4]);
        for j in 0..nth {
            let phi = j as f64 * grid.dv + th0;
            let (c, s) = (phi.cos(), phi.sin());
            let xt = [ut * c - u * s * th0t, ut * s + u * c * th0t, vt - tau * u * u * th0t];
            let xth = [-u * s, u * c, -tau * u * u];
            for k in 0..3 {
                z[k][(i, j)] = 0.5 * C64::new(xt[k], -xth[k]);
            }
            f[(i, j)] = model.from_chart(&[u * c, u * s, v])?;
        }
    }
    let valid = Array2::from_elem((nt, nth), true);
    let mut frame = FrameField {
        grid,
        model,
        f,
        psi: z.clone(),
        h: Array2::zeros((nt, nth)),
        valid,
    };
    let hc = mean_curvature(&frame, &alg)?;
    let tangential = hc.tangential.iter().copied().fold(0.0, f64::max);
    frame.h = hc.h.clone();
    let psi = SpinorField::from_z(grid, &z, hc.h)?;
    let n3 = unit_normal(&frame)?.mapv(|n| n[2]);
    Ok(RevolvedSurface {
        frame,
        psi,
        algebra: alg,
        tau,
        n3,
        tangential,
    })
}

/// `W = integral (H^2 + Khat) dmu` over a revolved surface, with `H` measured
/// pointwise and `Khat` the ambient sectional curvature of the tangent plane.
pub fn willmore_quadrature(surf: &RevolvedSurface) -> Result<f64> {
    let meas = surf.measure(None)?;
    let khat = functionals::ambient_curvature(&surf.psi, &surf.algebra)?;
    Ok(functionals::willmore(&surf.psi.h, &khat, &meas))
}

/// Mean curvature of the revolved CMC profile with pole slope `k`.
pub fn measured_h(k: f64, h: f64, opts: &RevolveOptions) -> Result<f64> {
    let p = cmc_profile(k, 100.0 / k, h)?;
    Ok(revolve_to_surface(&p, opts)?.central_h())
}

/// Pole slope whose revolved CMC sphere has measured mean curvature `target`,
/// by bisection on the monotone map `k -> H(k)`.
pub fn calibrate_k(target: f64, h: f64, opts: &RevolveOptions, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.25 * target, 4.0 * target);
    let mut f_lo = measured_h(lo, h, opts)? - target;
    if f_lo > 0.0 || measured_h(hi, h, opts)? < target {
        return Err(Error::Profile(format!("H = {target} is not bracketed")));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let f = measured_h(mid, h, opts)? - target;
        if f.abs() < tol || hi - lo < tol * target {
            return Ok(mid);
        }
        if (f < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Turning-angle perturbation `sigma + eps phi(s/L)` of a closed profile,
/// with `u` and `v` re-integrated from the change in `sigma` so that `eps = 0`
/// reproduces the samples exactly.
pub fn perturb_profile(p: &ProfileCurve, eps: f64, shape: impl Fn(f64) -> (f64, f64)) -> Result<ProfileCurve> {
    if !p.closed_pole_to_pole {
        return Err(Error::Profile("perturbations need a pole-to-pole profile".into()));
    }
    let n = p.len();
    let l = p.s[n - 1];
    let mut q = p.clone();
    q.law = ProfileLaw::Sampled;
    let (mut du, mut dv) = (0.0, 0.0);
    let delta = |i: usize, sig: f64, u: f64| -> (f64, f64) {
        let g0 = (1.0 + p.tau * p.tau * p.u[i] * p.u[i]).sqrt();
        let g1 = (1.0 + p.tau * p.tau * u * u).sqrt();
        (sig.cos() - p.sigma[i].cos(), g1 * sig.sin() - g0 * p.sigma[i].sin())
    };
    let mut prev = (0.0, 0.0);
    for i in 0..n {
        let (phi, dphi) = shape(p.s[i] / l);
        q.sigma[i] = p.sigma[i] + eps * phi;
        q.sigma_dot[i] = p.sigma_dot[i] + eps * dphi / l;
        if i > 0 {
            let hstep = p.s[i] - p.s[i - 1];
            let cur = delta(i, q.sigma[i], p.u[i] + du);
            du += 0.5 * hstep * (prev.0 + cur.0);
            dv += 0.5 * hstep * (prev.1 + cur.1);
            prev = delta(i, q.sigma[i], p.u[i] + du);
        } else {
            prev = delta(0, q.sigma[0], p.u[0]);
        }
        q.u[i] = p.u[i] + du;
        q.v[i] = p.v[i] + dv;
        if i > 0 && i < n - 1 && q.u[i] <= 0.0 {
            return Err(Error::Profile("perturbed profile crosses the axis".into()));
        }
    }
    q.u[n - 1] = q.u[n - 1].max(0.0);
    Ok(q)
}

/// Perturbation shape `sin(2 m pi x)` and its derivative; antisymmetric
/// about `x = 1/2`, so symmetric profiles stay closed.
pub fn sine_shape(m: u32) -> impl Fn(f64) -> (f64, f64) {
    let w = 2.0 * PI * m as f64;
    move |x| ((w * x).sin(), w * (w * x).cos())
}

/// `dE/d eps` at zero by central differences for the perturbation family
/// `sigma + eps sin(2 m pi s/L)`.
pub fn energy_first_variation(p: &ProfileCurve, eps: f64, m: u32) -> Result<f64> {
    let plus = spinor_energy_revolution(&perturb_profile(p, eps, sine_shape(m))?, 2)?;
    let minus = spinor_energy_revolution(&perturb_profile(p, -eps, sine_shape(m))?, 2)?;
    Ok((plus - minus) / (2.0 * eps))
}
