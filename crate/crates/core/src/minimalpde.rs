//! Minimal-surface spinor systems of Nil, SL(2,R), Sol and `G_mu`, with a
//! Dirichlet relaxation solver and continuation in `mu`.
//!
//! Every system has the shape
//!
//! ```text
//! dbar psi1 = F1(psi),     d psi2 = F2(psi)
//! ```
//!
//! and residuals are laid out like [`dirac_residual`]:
//! `r1 = d psi2 - F2`, `r2 = -dbar psi1 + F1`.

use ndarray::{Array2, Zip};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{ConvergenceFailure, Error, Result};
use crate::linsolve::{BlockFactor, BlockTridiag};
use crate::spinfield::{
    dirac_residual, potentials, potentials_at, Geometry, Grid2D, Residual2, SpinorField, DEGENERATE_METRIC,
};

/// Which right-hand sides to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum SystemForm {
    /// `F1 = V psi2`, `F2 = -U psi1` with the `H = 0` potentials.
    #[default]
    DiracConsistent,
    /// The right-hand sides exactly as listed for each group. For Nil they
    /// end in `psi1` and `psi2` instead of `psi2` and `psi1`; for SL(2,R),
    /// Sol and `G_mu` they agree with the Dirac form (without pole division).
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimalSystem {
    pub geometry: Geometry,
    pub form: SystemForm,
}

impl MinimalSystem {
    /// Euclidean space is accepted (`F = 0`); the three-sphere is not.
    pub fn new(geometry: Geometry) -> Result<Self> {
        Self::with_form(geometry, SystemForm::default())
    }

    pub fn with_form(geometry: Geometry, form: SystemForm) -> Result<Self> {
        if geometry == Geometry::Su2 {
            return Err(Error::Unsupported {
                op: "minimal system",
                geometry: geometry.to_string(),
            });
        }
        Ok(MinimalSystem { geometry, form })
    }

    /// `(F1, F2)` at one sample; `None` where the Dirac form has a pole.
    pub fn rhs(&self, psi1: C64, psi2: C64) -> Option<(C64, C64)> {
        match self.form {
            SystemForm::DiracConsistent => {
                potentials_at(self.geometry, psi1, psi2, 0.0).map(|(u, v)| (v * psi2, -u * psi1))
            }
            SystemForm::AsPrinted => Some(printed_rhs(self.geometry, psi1, psi2)),
        }
    }
}

fn printed_rhs(geometry: Geometry, psi1: C64, psi2: C64) -> (C64, C64) {
    let i = C64::i();
    let (a1, a2) = (psi1.norm_sqr(), psi2.norm_sqr());
    let (c1, c2) = (psi1.conj(), psi2.conj());
    let gmu = |mu: f64| {
        let p = 0.25 * (mu + 1.0);
        let m = 0.25 * (mu - 1.0);
        (
            -p * psi2 * psi2 * c2 - m * c1 * c1 * c2,
            -p * psi1 * psi1 * c1 - m * c2 * c2 * c1,
        )
    };
    match geometry {
        Geometry::Euclidean | Geometry::Su2 => (C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
        Geometry::Nil => {
            let w = 0.25 * i * (a2 - a1);
            (w * psi1, -w * psi2)
        }
        Geometry::Sl2r => (
            i * (0.75 * a1 - 0.5 * a2) * psi2,
            -i * (0.5 * a1 - 0.75 * a2) * psi1,
        ),
        Geometry::Sol => (0.5 * c1 * c1 * c2, 0.5 * c1 * c2 * c2),
        Geometry::Gmu(mu) => gmu(mu),
    }
}

/// Residuals of the selected system, masked where the right side is undefined.
pub fn minimal_residual(psi: &SpinorField, sys: MinimalSystem) -> Result<Residual2> {
    let mut flat = psi.clone();
    flat.h.fill(0.0);
    if sys.form == SystemForm::DiracConsistent {
        return dirac_residual(&flat, &potentials(&flat, sys.geometry));
    }
    let g = &psi.grid;
    let (f1, f2, ok) = rhs_fields(psi, sys);
    let d_psi2 = g.d_z_with(&psi.psi2, psi.parity)?;
    let db_psi1 = g.d_zbar_with(&psi.psi1, psi.parity)?;
    let r1 = Zip::from(&d_psi2).and(&f2).map_collect(|d, f| d - f);
    let r2 = Zip::from(&db_psi1).and(&f1).map_collect(|d, f| -d + f);
    let mask = Zip::from(&ok).and(&psi.valid).map_collect(|a, b| *a && *b);
    Ok(Residual2 {
        r1,
        r2,
        valid: g.erode(&mask),
    })
}

fn rhs_fields(psi: &SpinorField, sys: MinimalSystem) -> (Array2<C64>, Array2<C64>, Array2<bool>) {
    let shape = psi.grid.shape();
    let mut f1 = Array2::zeros(shape);
    let mut f2 = Array2::zeros(shape);
    let mut ok = Array2::from_elem(shape, true);
    for ((i, j), good) in ok.indexed_iter_mut() {
        match sys.rhs(psi.psi1[(i, j)], psi.psi2[(i, j)]) {
            Some((a, b)) => {
                f1[(i, j)] = a;
                f2[(i, j)] = b;
            }
            None => *good = false,
        }
    }
    (f1, f2, ok)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    /// Picard damping `omega` in `psi <- (1 - omega) psi + omega psi_new`.
    pub damping: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            damping: 0.5,
            max_iter: 400,
        }
    }
}

/// Residual history of a relaxation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    /// Interior max residual before each iteration and after the last one.
    pub residuals: Vec<f64>,
    pub e_alpha_min: f64,
    pub e_alpha_max: f64,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::NAN)
    }

    pub fn failure(&self, solver: &'static str) -> ConvergenceFailure {
        ConvergenceFailure {
            solver,
            iterations: self.iterations,
            residuals: self.residuals.clone(),
        }
    }
}

/// Damped Picard relaxation with Dirichlet data taken from the seed's edges.
///
/// Each sweep solves `Lap psi1 = 4 d F1` and `Lap psi2 = 4 dbar F2` on the
/// interior with the 5-point Laplacian. The run stops when the first-order
/// residual drops below `tol`, when the iterates stall, or after `max_iter`
/// sweeps; the last two return `converged = false`.
///
/// Dirichlet data on all four edges overdetermines a first-order system, so
/// boundary values not coming from a solution leave a residual the sweep
/// cannot remove.
pub fn minimal_solve(seed: &SpinorField, sys: MinimalSystem, opts: &SolveOptions) -> Result<(SpinorField, SolveReport)> {
    let g = seed.grid;
    if g.periodic_u || g.periodic_v {
        return Err(Error::InvalidGrid("the relaxation needs Dirichlet edges on both axes".into()));
    }
    if g.nu < 3 || g.nv < 3 {
        return Err(Error::InvalidGrid("no interior samples".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::OutOfRange {
            name: "tol",
            value: opts.tol,
            reason: "must be positive",
        });
    }
    let rings = g.stencil_radius();
    let mut psi = seed.clone();
    psi.h.fill(0.0);
    check_domain(&psi, sys)?;
    let measure = |psi: &SpinorField| -> Result<f64> { Ok(minimal_residual(psi, sys)?.max_norm(&g, rings)) };

    let mut residuals = vec![measure(&psi)?];
    let mut iterations = 0;
    let mut converged = residuals[0] < opts.tol;
    let factor = if converged { None } else { Some(dirichlet_laplacian(&g)?) };
    while !converged && iterations < opts.max_iter {
        let (f1, f2, _) = rhs_fields(&psi, sys);
        let s1 = g.d_z(&f1)?.mapv(|x| 4.0 * x);
        let s2 = g.d_zbar(&f2)?.mapv(|x| 4.0 * x);
        let fac = factor.as_ref().expect("factored before iterating");
        let n1 = poisson_dirichlet(fac, &g, &s1, &psi.psi1)?;
        let n2 = poisson_dirichlet(fac, &g, &s2, &psi.psi2)?;
        let w = opts.damping;
        let mut step: f64 = 0.0;
        Zip::from(&mut psi.psi1).and(&n1).for_each(|p, n| {
            let q = (1.0 - w) * *p + w * n;
            step = step.max((q - *p).norm());
            *p = q;
        });
        Zip::from(&mut psi.psi2).and(&n2).for_each(|p, n| {
            let q = (1.0 - w) * *p + w * n;
            step = step.max((q - *p).norm());
            *p = q;
        });
        iterations += 1;
        if !step.is_finite() || step > 1e12 {
            return Err(Error::BlowUp(format!("minimal relaxation step {step:e}")));
        }
        check_domain(&psi, sys)?;
        residuals.push(measure(&psi)?);
        converged = residuals[iterations] < opts.tol;
        if step < 1e-15 * (1.0 + max_abs(&psi)) {
            break;
        }
    }
    let (lo, hi) = e_alpha_range(&psi);
    Ok((
        psi,
        SolveReport {
            converged,
            iterations,
            residuals,
            e_alpha_min: lo,
            e_alpha_max: hi,
        },
    ))
}

fn max_abs(psi: &SpinorField) -> f64 {
    psi.psi1
        .iter()
        .chain(psi.psi2.iter())
        .fold(0.0, |m: f64, z| m.max(z.norm()))
}

fn e_alpha_range(psi: &SpinorField) -> (f64, f64) {
    Zip::from(&psi.psi1)
        .and(&psi.psi2)
        .fold((f64::INFINITY, 0.0), |(lo, hi): (f64, f64), a, b| {
            let e = a.norm_sqr() + b.norm_sqr();
            (lo.min(e), hi.max(e))
        })
}

/// Degenerate metric or a sample outside the domain of the pole terms.
fn check_domain(psi: &SpinorField, sys: MinimalSystem) -> Result<()> {
    let mut degenerate = 0;
    for ((i, j), p1) in psi.psi1.indexed_iter() {
        let p2 = psi.psi2[(i, j)];
        if p1.norm_sqr() + p2.norm_sqr() < DEGENERATE_METRIC {
            degenerate += 1;
            continue;
        }
        if sys.geometry.has_pole_terms() && potentials_at(sys.geometry, *p1, p2, 0.0).is_none() {
            return Err(Error::MaskedDomain(format!(
                "psi1 psi2 vanishes at sample ({i}, {j}) for {}",
                sys.geometry
            )));
        }
    }
    if degenerate > 0 {
        return Err(Error::DegenerateMetric { count: degenerate });
    }
    Ok(())
}

/// 5-point Laplacian on the interior, one block per interior `u` row.
fn dirichlet_laplacian(g: &Grid2D) -> Result<BlockFactor> {
    let (n, m) = (g.nu - 2, g.nv - 2);
    let (cu, cv) = (1.0 / (g.du * g.du), 1.0 / (g.dv * g.dv));
    let mut a = BlockTridiag::zeros(n, m, false);
    for i in 0..n {
        for j in 0..m {
            a.diag[i][(j, j)] = C64::new(-2.0 * (cu + cv), 0.0);
            if j > 0 {
                a.diag[i][(j, j - 1)] = C64::new(cv, 0.0);
            }
            if j + 1 < m {
                a.diag[i][(j, j + 1)] = C64::new(cv, 0.0);
            }
            a.lower[i][(j, j)] = C64::new(cu, 0.0);
            a.upper[i][(j, j)] = C64::new(cu, 0.0);
        }
    }
    a.factor()
}

/// Solves `Lap x = s` on the interior with `x = edge` on the boundary.
fn poisson_dirichlet(fac: &BlockFactor, g: &Grid2D, s: &Array2<C64>, edge: &Array2<C64>) -> Result<Array2<C64>> {
    let (nu, nv) = (g.nu, g.nv);
    let (cu, cv) = (1.0 / (g.du * g.du), 1.0 / (g.dv * g.dv));
    let m = nv - 2;
    let mut b = vec![C64::new(0.0, 0.0); (nu - 2) * m];
    for i in 1..nu - 1 {
        for j in 1..nv - 1 {
            let mut r = s[(i, j)];
            if i == 1 {
                r -= cu * edge[(0, j)];
            }
            if i == nu - 2 {
                r -= cu * edge[(nu - 1, j)];
            }
            if j == 1 {
                r -= cv * edge[(i, 0)];
            }
            if j == nv - 2 {
                r -= cv * edge[(i, nv - 1)];
            }
            b[(i - 1) * m + (j - 1)] = r;
        }
    }
    let x = fac.solve(&b)?;
    let mut out = edge.clone();
    for i in 1..nu - 1 {
        for j in 1..nv - 1 {
            out[(i, j)] = x[(i - 1) * m + (j - 1)];
        }
    }
    Ok(out)
}

/// One continuation step of [`mu_sweep`].
#[derive(Debug, Clone)]
pub struct SweepStep {
    pub mu: f64,
    pub psi: SpinorField,
    pub report: SolveReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Breakdown {
    pub mu: f64,
    pub last_good: Option<f64>,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct MuSweep {
    pub steps: Vec<SweepStep>,
    pub breakdown: Option<Breakdown>,
}

/// Continuation in `mu` for the Dirac-consistent `G_mu` systems: each
/// converged solution seeds the next value. The sweep stops at the first
/// value that errors or does not reach `tol`.
pub fn mu_sweep(psi0: &SpinorField, mus: &[f64], opts: &SolveOptions) -> Result<MuSweep> {
    if mus.windows(2).any(|w| w[1] < w[0]) || mus.iter().any(|m| !m.is_finite()) {
        return Err(Error::Config("mu values must be finite and sorted".into()));
    }
    let mut steps: Vec<SweepStep> = Vec::new();
    let mut seed = psi0.clone();
    for &mu in mus {
        let sys = MinimalSystem::new(Geometry::Gmu(mu))?;
        let last_good = steps.last().map(|s| s.mu);
        match minimal_solve(&seed, sys, opts) {
            Ok((psi, report)) if report.converged => {
                seed = psi.clone();
                steps.push(SweepStep { mu, psi, report });
            }
            Ok((_, report)) => {
                return Ok(MuSweep {
                    steps,
                    breakdown: Some(Breakdown {
                        mu,
                        last_good,
                        reason: format!("residual stalled at {:.3e}", report.final_residual()),
                    }),
                })
            }
            Err(e) => {
                return Ok(MuSweep {
                    steps,
                    breakdown: Some(Breakdown {
                        mu,
                        last_good,
                        reason: e.to_string(),
                    }),
                })
            }
        }
    }
    Ok(MuSweep { steps, breakdown: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_field(g: Grid2D, seed: u64) -> SpinorField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = || c(rng.random_range(0.3..1.5), rng.random_range(-1.0..1.0));
        let (a, b, p, q) = (s(), s(), s(), s());
        SpinorField::from_fn(g, |z| (a + p * z + 0.3 * z * z, b + q * z.conj(), 0.0)).unwrap()
    }

    #[test]
    fn nil_vertical_plane() {
        let g = Grid2D::new(6, 6, 0.2, 0.2).unwrap();
        let psi = SpinorField::constant(g, (c(0.8, 0.0), c(0.8, 0.0)), 0.0).unwrap();
        for form in [SystemForm::DiracConsistent, SystemForm::AsPrinted] {
            let r = minimal_residual(&psi, MinimalSystem::with_form(Geometry::Nil, form).unwrap()).unwrap();
            assert_eq!(r.max_norm(&g, 1), 0.0);
        }
    }

    #[test]
    fn dirac_form_matches_dirac_residual() {
        let g = Grid2D::new(9, 7, 0.1, 0.15).unwrap();
        let psi = random_field(g, 3);
        for geo in [
            Geometry::Euclidean,
            Geometry::Nil,
            Geometry::Sl2r,
            Geometry::Sol,
            Geometry::Gmu(0.3),
        ] {
            let r = minimal_residual(&psi, MinimalSystem::new(geo).unwrap()).unwrap();
            let mut flat = psi.clone();
            flat.h.fill(0.0);
            let d = dirac_residual(&flat, &potentials(&flat, geo)).unwrap();
            assert_eq!(r, d, "{geo}");
        }
    }

    #[test]
    fn printed_forms_against_dirac_form() {
        let g = Grid2D::new(9, 7, 0.1, 0.15).unwrap();
        let psi = random_field(g, 5);
        let diff = |geo| {
            let a = minimal_residual(&psi, MinimalSystem::new(geo).unwrap()).unwrap();
            let b = minimal_residual(&psi, MinimalSystem::with_form(geo, SystemForm::AsPrinted).unwrap()).unwrap();
            let mut m: f64 = 0.0;
            for ((ix, ok), r) in a.valid.indexed_iter().zip(b.r1.iter()) {
                if *ok {
                    m = m.max((a.r1[ix] - r).norm()).max((a.r2[ix] - b.r2[ix]).norm());
                }
            }
            m
        };
        assert!(diff(Geometry::Sl2r) < 1e-13);
        assert!(diff(Geometry::Sol) < 1e-13);
        assert!(diff(Geometry::Gmu(-0.4)) < 1e-13);
        assert!(diff(Geometry::Nil) > 1e-2);
    }

    #[test]
    fn gmu_minus_one_is_sol() {
        let g = Grid2D::new(7, 7, 0.1, 0.1).unwrap();
        let psi = random_field(g, 9);
        let p = MinimalSystem::with_form(Geometry::Gmu(-1.0), SystemForm::AsPrinted).unwrap();
        let s = MinimalSystem::with_form(Geometry::Sol, SystemForm::AsPrinted).unwrap();
        let (a, b) = (minimal_residual(&psi, p).unwrap(), minimal_residual(&psi, s).unwrap());
        assert_eq!(a.valid, b.valid);
        let d = (&a.r1 - &b.r1).iter().chain((&a.r2 - &b.r2).iter()).fold(0.0, |m: f64, z| m.max(z.norm()));
        assert!(d < 1e-14, "{d}");
    }

    #[test]
    fn sol_constant_residual() {
        let g = Grid2D::new(5, 5, 0.1, 0.1).unwrap();
        let psi = SpinorField::constant(g, (c(1.0, 0.0), c(1.0, 0.0)), 0.0).unwrap();
        let r = minimal_residual(&psi, MinimalSystem::with_form(Geometry::Sol, SystemForm::AsPrinted).unwrap()).unwrap();
        let ix = (2, 2);
        assert!((r.r1[ix].norm() - 0.5).abs() < 1e-15 && (r.r2[ix].norm() - 0.5).abs() < 1e-15);
        let both = (r.r1[ix].norm_sqr() + r.r2[ix].norm_sqr()).sqrt();
        assert!((both - 0.5 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mu_affinity() {
        let g = Grid2D::new(8, 8, 0.1, 0.1).unwrap();
        let psi = random_field(g, 11);
        for form in [SystemForm::DiracConsistent, SystemForm::AsPrinted] {
            let at = |mu| minimal_residual(&psi, MinimalSystem::with_form(Geometry::Gmu(mu), form).unwrap()).unwrap();
            let (a, b) = (at(-1.0), at(1.0));
            for mu in [-0.5, 0.0, 0.7, 2.0] {
                let r = at(mu);
                let (s, t) = (0.5 * (1.0 - mu), 0.5 * (1.0 + mu));
                for (ix, ok) in r.valid.indexed_iter() {
                    if *ok {
                        let e1 = (r.r1[ix] - s * a.r1[ix] - t * b.r1[ix]).norm();
                        let e2 = (r.r2[ix] - s * a.r2[ix] - t * b.r2[ix]).norm();
                        assert!(e1 < 1e-14 && e2 < 1e-14, "{mu} {e1} {e2}");
                    }
                }
            }
        }
    }

    #[test]
    fn exact_seed_takes_no_iterations() {
        let g = Grid2D::rect(11, 11, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let psi = SpinorField::constant(g, (c(1.0, 0.0), c(1.0, 0.0)), 0.0).unwrap();
        let (out, rep) = minimal_solve(&psi, MinimalSystem::new(Geometry::Nil).unwrap(), &SolveOptions::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 0);
        assert_eq!(out.psi1, psi.psi1);
        assert_eq!(out.psi2, psi.psi2);
    }

    #[test]
    fn noisy_nil_seed_relaxes() {
        let g = Grid2D::rect(17, 17, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let exact = SpinorField::constant(g, (c(1.0, 0.0), c(1.0, 0.0)), 0.0).unwrap();
        let mut seed = exact.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for ((i, j), p) in seed.psi1.indexed_iter_mut() {
            if g.is_interior(i, j, 1) {
                *p += c(rng.random_range(-0.01..0.01), rng.random_range(-0.01..0.01));
            }
        }
        for ((i, j), p) in seed.psi2.indexed_iter_mut() {
            if g.is_interior(i, j, 1) {
                *p += c(rng.random_range(-0.01..0.01), rng.random_range(-0.01..0.01));
            }
        }
        let (out, rep) = minimal_solve(&seed, MinimalSystem::new(Geometry::Nil).unwrap(), &SolveOptions::default()).unwrap();
        assert!(rep.converged, "{:?}", rep.residuals.last());
        assert!(rep.final_residual() < 1e-8);
        let err = out.psi1.iter().map(|p| (p - 1.0).norm()).fold(0.0, f64::max);
        assert!(err < 1e-8);
    }

    #[test]
    fn sol_zero_crossing_is_masked() {
        let g = Grid2D::rect(9, 9, (-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let psi = SpinorField::from_fn(g, |z| (z, c(1.0, 0.0), 0.0)).unwrap();
        let e = minimal_solve(&psi, MinimalSystem::new(Geometry::Sol).unwrap(), &SolveOptions::default()).unwrap_err();
        assert!(matches!(e, Error::MaskedDomain(_)));
    }

    #[test]
    fn single_mu_sweep_is_a_solve() {
        let g = Grid2D::rect(11, 11, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let seed = random_field(g, 2);
        let opts = SolveOptions { max_iter: 5, ..Default::default() };
        let sw = mu_sweep(&seed, &[0.0], &opts).unwrap();
        let (psi, rep) = minimal_solve(&seed, MinimalSystem::new(Geometry::Gmu(0.0)).unwrap(), &opts).unwrap();
        match (&sw.breakdown, sw.steps.first()) {
            (None, Some(s)) => assert_eq!((s.psi.psi1.clone(), &s.report), (psi.psi1, &rep)),
            (Some(b), None) => {
                assert!(!rep.converged);
                assert_eq!((b.mu, b.last_good), (0.0, None));
            }
            other => panic!("{other:?}"),
        }
        assert!(mu_sweep(&seed, &[0.5, 0.0], &opts).is_err());
    }

    #[test]
    fn su2_is_excluded() {
        assert!(MinimalSystem::new(Geometry::Su2).is_err());
    }
}
