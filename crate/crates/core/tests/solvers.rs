mod common;

use std::f64::consts::PI;

use liespinor::minimalpde::{minimal_solve, mu_sweep, MinimalSystem, SolveOptions};
use liespinor::nilrot::{cmc_profile, revolve_to_surface, RevolveOptions};
use liespinor::recon::{masked_max, mean_curvature, reconstruct};
use liespinor::samples::{gmu_geodesic_plane, round_sphere};
use liespinor::shg::{berdinsky_solve, sinh_gordon_solve, ScalarField};
use liespinor::spinfield::{dirac_residual, potentials, quaternion_flip, Geometry, Grid2D, SpinorField};
use liespinor::C64;

#[test]
fn gmu_continuation_from_sol_to_mu_zero() {
    let g = Grid2D::rect(33, 33, (0.0, 1.0), (1.0, 2.0)).unwrap();
    let psi0 = gmu_geodesic_plane(g).unwrap();
    let mus: Vec<f64> = (0..=4).map(|k| -1.0 + 0.25 * k as f64).collect();
    let opts = SolveOptions {
        tol: 1e-3,
        ..Default::default()
    };
    let run = mu_sweep(&psi0, &mus, &opts).unwrap();
    assert!(run.breakdown.is_none(), "{:?}", run.breakdown);
    assert_eq!(run.steps.len(), mus.len());
    for s in &run.steps {
        assert!(s.report.converged && s.report.final_residual() < 1e-3);
        assert!(s.report.e_alpha_min > 0.0);
    }
}

// the Nil vertical plane plus a bump that vanishes on the boundary; the
// Dirichlet data are those of an exact solution
fn nil_seed(n: usize) -> SpinorField {
    let g = Grid2D::rect(n, n, (0.0, 1.0), (0.0, 1.0)).unwrap();
    SpinorField::from_fn(g, |z| {
        let bump = (PI * z.re).sin() * (PI * z.im).sin();
        (C64::new(0.8, 0.05 * bump), C64::new(0.8 - 0.04 * bump, 0.0), 0.0)
    })
    .unwrap()
}

#[test]
fn relaxed_minimal_surface_has_zero_mean_curvature() {
    let nil = Geometry::Nil.algebra();
    let opts = SolveOptions {
        tol: 1e-10,
        max_iter: 2000,
        ..Default::default()
    };
    for n in [17, 33] {
        let (psi, rep) = minimal_solve(&nil_seed(n), MinimalSystem::new(Geometry::Nil).unwrap(), &opts).unwrap();
        assert!(rep.converged, "{n}: {:?}", rep.residuals.last());
        let ff = reconstruct(&psi, &nil).unwrap();
        let ext = mean_curvature(&ff, &nil).unwrap();
        let h = masked_max(&ext.h.mapv(f64::abs), &ext.valid, &psi.grid, 2);
        assert!(h < 1e-8, "{n}: max |H| {h}");
        let dev = psi.psi1.iter().chain(psi.psi2.iter()).fold(0.0f64, |m, z| m.max((z - 0.8).norm()));
        assert!(dev < 1e-8, "{dev}");
    }
}

#[test]
fn sinh_gordon_converges_to_pendulum_at_second_order() {
    let a = 1.0;
    let period = common::pendulum_period(a);
    let mut errs = vec![];
    for n in [32usize, 64] {
        let g = Grid2D::torus(n, 4, period, 1.0).unwrap();
        let seed = ScalarField::from_fn(g, |z| C64::new(a * (2.0 * PI * z.re / period).cos(), 0.0)).unwrap();
        let (u, _) = sinh_gordon_solve(&seed, 1e-11).unwrap();
        let xs: Vec<f64> = (0..n / 2).map(|i| i as f64 * g.du).collect();
        let oracle = common::pendulum_samples(a, &xs, g.du / 100.0);
        // the discrete solution may sit at any translate; pin it by its maximum
        let imax = (0..n).max_by(|i, j| u.vals[(*i, 0)].re.total_cmp(&u.vals[(*j, 0)].re)).unwrap();
        let mut e: f64 = 0.0;
        for (i, o) in oracle.iter().enumerate() {
            e = e.max((u.vals[((imax + i) % n, 0)].re - o).abs());
        }
        errs.push(e);
    }
    let order = common::order(errs[0], errs[1]);
    assert!(order > 1.8, "errors {errs:?}, order {order}");
}

#[test]
fn newton_converges_quadratically() {
    let period = common::pendulum_period(1.0);
    let g = Grid2D::torus(32, 32, 0.5 * period, 0.8).unwrap();
    let b = ScalarField::constant(g, C64::new(1.0, 0.0)).unwrap();
    let seed = ScalarField::from_fn(g, |z| C64::new(0.5 * (4.0 * PI * z.re / period).cos(), 0.0)).unwrap();
    let (_, rep) = berdinsky_solve(&seed, &b, 1e-11).unwrap();
    let r = &rep.residuals;
    let mut checked = 0;
    for w in r.windows(2) {
        if w[0] < 1e-1 && w[0] > 1e-8 {
            assert!(w[1] < 50.0 * w[0] * w[0], "{r:?}");
            checked += 1;
        }
    }
    assert!(checked >= 1, "{r:?}");
}

#[test]
fn berdinsky_rescaling_equivariance() {
    let (lu, lv, n) = (1.3, 0.9, 32);
    let lambda: f64 = 1.7;
    let b = C64::new(0.8, 0.3);
    let seed_fn = |l: f64| move |z: C64| C64::new(0.3 * (2.0 * PI * z.re * l / lu).cos() + 0.1 * (2.0 * PI * z.im * l / lv).sin(), 0.0);

    let g = Grid2D::torus(n, n, lu, lv).unwrap();
    let (v, _) = berdinsky_solve(&ScalarField::from_fn(g, seed_fn(1.0)).unwrap(), &ScalarField::constant(g, b).unwrap(), 1e-11).unwrap();

    // z -> lambda z: w(z) = v(lambda z) + log lambda, B -> lambda^2 B
    let gs = Grid2D::torus(n, n, lu / lambda, lv / lambda).unwrap();
    let shift = lambda.ln();
    let seed = ScalarField::from_fn(gs, move |z| seed_fn(lambda)(z) + shift).unwrap();
    let (w, _) = berdinsky_solve(&seed, &ScalarField::constant(gs, lambda * lambda * b).unwrap(), 1e-11).unwrap();
    let gap = w.vals.iter().zip(v.vals.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b - shift).norm()));
    assert!(gap < 1e-9, "{gap}");
}

#[test]
fn quaternion_flip_preserves_euclidean_solutions() {
    let mut flipped = vec![];
    for n in [33, 65] {
        let g = Grid2D::rect(n, n, (-0.5, 0.5), (-0.5, 0.5)).unwrap();
        let psi = round_sphere(g, 1.0).unwrap();
        let pot = potentials(&psi, Geometry::Euclidean);
        let r = dirac_residual(&psi, &pot).unwrap().max_norm(&g, 1);
        let rf = dirac_residual(&quaternion_flip(&psi), &pot).unwrap().max_norm(&g, 1);
        // the flipped rows are conjugates of the original ones
        assert!((r - rf).abs() <= 1e-12 * r, "{r} {rf}");
        flipped.push(rf);
    }
    assert!(common::order(flipped[0], flipped[1]) > 1.9, "{flipped:?}");
}

#[test]
fn quaternion_flip_breaks_nil_solutions() {
    let p = cmc_profile(0.8, 125.0, 1e-3).unwrap();
    let surf = revolve_to_surface(&p, &RevolveOptions::default()).unwrap();
    let psi = &surf.psi;
    let g = psi.grid;
    let pot = potentials(psi, Geometry::Nil);
    let r = dirac_residual(psi, &pot).unwrap().max_norm(&g, 1);
    let flipped = quaternion_flip(psi);
    let rf = dirac_residual(&flipped, &pot).unwrap().max_norm(&g, 1);
    assert!(rf > 100.0 * r && rf > 1e-2, "own {r}, flipped {rf}");
    // with potentials re-evaluated on the flipped spinor the imaginary part of
    // U changes sign and the flipped field solves again
    let again = dirac_residual(&flipped, &potentials(&flipped, Geometry::Nil)).unwrap().max_norm(&g, 1);
    assert!(again < 10.0 * r, "own {r}, re-evaluated {again}");
}
