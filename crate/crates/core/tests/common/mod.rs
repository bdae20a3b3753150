//! Oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Period of `u'' = -4 sinh u` through `u(0) = a, u'(0) = 0`, from the energy
/// integral with `u = a sin t` removing the endpoint singularity.
pub fn pendulum_period(a: f64) -> f64 {
    let n = 20_000;
    let h = 0.5 * PI / n as f64;
    let f = |t: f64| {
        let u = a * t.sin();
        a * t.cos() / (8.0 * (a.cosh() - u.cosh())).sqrt()
    };
    // midpoint rule: the integrand is smooth on the closed interval
    4.0 * h * (0..n).map(|k| f((k as f64 + 0.5) * h)).sum::<f64>()
}

/// `u(x)` of the same orbit at the requested points (sorted, `x >= 0`) by RK4.
pub fn pendulum_samples(a: f64, xs: &[f64], step: f64) -> Vec<f64> {
    let rhs = |y: [f64; 2]| [y[1], -4.0 * y[0].sinh()];
    let rk = |y: [f64; 2], h: f64| {
        let add = |a: [f64; 2], b: [f64; 2], c: f64| [a[0] + c * b[0], a[1] + c * b[1]];
        let k1 = rhs(y);
        let k2 = rhs(add(y, k1, 0.5 * h));
        let k3 = rhs(add(y, k2, 0.5 * h));
        let k4 = rhs(add(y, k3, h));
        [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    };
    let mut y = [a, 0.0];
    let mut x = 0.0;
    let mut out = Vec::with_capacity(xs.len());
    for &target in xs {
        while x < target {
            let h = step.min(target - x);
            y = rk(y, h);
            x += h;
            if target - x < 1e-14 {
                x = target;
            }
        }
        out.push(y[0]);
    }
    out
}

pub fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}
