use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use liespinor::functionals::{ambient_curvature, energy_geometric, spinor_energy, willmore, SurfaceMeasure};
use liespinor::liegeo::{
    christoffel, sectional_curvature, AlgebraConfig, Basis, BianchiTag, Chart, LieAlgebra3, Vec3,
};
use liespinor::minimalpde::{minimal_solve, mu_sweep, MinimalSystem, SolveOptions, SolveReport, SystemForm};
use liespinor::nilrot::{
    cmc_profile, revolve_to_surface, spinor_energy_revolution, willmore_quadrature, RevolveOptions,
};
use liespinor::recon::{self, masked_max, mean_curvature, plaquette_holonomy, write_obj};
use liespinor::report::{cmc_sphere_row, revolved_energies, to_json, write_cmc_csv, CmcSphereRow};
use liespinor::shg::{berdinsky_solve, nil_lax_integrate, sinh_gordon_solve, NewtonReport, ScalarField};
use liespinor::spinfield::io::{fmt_f64, load_csv, save_csv};
use liespinor::spinfield::{dirac_residual, factorize_z, potentials, Geometry, Grid2D, SpinorField};
use liespinor::{Error, Result, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{RunConfig, SeedSpec};
use crate::{Form, Solver};

const PROFILE_STEP: f64 = 1e-3;
const NOISE: f64 = 1e-2;

fn emit<T: Serialize>(cfg: &RunConfig, name: &str, value: &T) -> Result<()> {
    let text = to_json(value)?;
    print!("{text}");
    if let Some(dir) = cfg.out_dir()? {
        std::fs::write(dir.join(name), text)?;
    }
    Ok(())
}

fn geometry(cfg: &RunConfig) -> Result<Geometry> {
    let name = cfg.group.as_deref().unwrap_or("nil");
    if name.eq_ignore_ascii_case("gmu") {
        return match cfg.mu.as_slice() {
            [mu] => Ok(Geometry::Gmu(*mu)),
            [] => Err(Error::Config("--group gmu needs --mu".into())),
            _ => Err(Error::Config("give a single --mu here".into())),
        };
    }
    name.parse()
}

fn single_mu(cfg: &RunConfig) -> Result<Option<f64>> {
    match cfg.mu.as_slice() {
        [] => Ok(None),
        [mu] => Ok(Some(*mu)),
        _ => Err(Error::Config("give a single --mu here".into())),
    }
}

fn build_algebra(cfg: &RunConfig) -> Result<LieAlgebra3> {
    if cfg.group.is_some() {
        if cfg.ty.is_some() {
            return Err(Error::Config("give either --group or --type, not both".into()));
        }
        let mut alg = geometry(cfg)?.algebra();
        if let Some(s) = cfg.scale {
            alg = alg.scaled(s);
        }
        return Ok(alg);
    }
    let basis = match cfg.basis.as_deref().unwrap_or("weierstrass") {
        "table" => Basis::Table,
        "weierstrass" => Basis::Weierstrass,
        other => return Err(Error::UnknownTag(other.to_string())),
    };
    let ty = cfg.ty.clone();
    // the unit three-sphere unless a scale is given
    let scale = match (&ty, cfg.scale) {
        (Some(t), None) if t.parse::<BianchiTag>().ok() == Some(BianchiTag::IX) => Some(2.0),
        (_, s) => s,
    };
    AlgebraConfig {
        ty,
        a: cfg.a,
        mu: single_mu(cfg)?,
        scale,
        basis,
    }
    .build()
}

#[derive(Serialize)]
struct AlgebraReport {
    label: String,
    class: String,
    scale: f64,
    brackets: BTreeMap<String, Vec3>,
    connection: BTreeMap<String, Vec3>,
    sectional: BTreeMap<String, f64>,
    warning: Option<String>,
}

pub fn algebra(cfg: &RunConfig) -> Result<()> {
    let alg = build_algebra(cfg)?;
    let e: [Vec3; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let nabla = christoffel(&alg);
    let mut brackets = BTreeMap::new();
    let mut sectional = BTreeMap::new();
    let mut connection = BTreeMap::new();
    for i in 0..3 {
        for j in 0..3 {
            connection.insert(format!("nabla_e{} e{}", i + 1, j + 1), nabla.nabla(&e[i], &e[j]));
            if i < j {
                brackets.insert(format!("[e{},e{}]", i + 1, j + 1), alg.bracket(&e[i], &e[j]));
                sectional.insert(format!("K(e{},e{})", i + 1, j + 1), sectional_curvature(&alg, &e[i], &e[j])?);
            }
        }
    }
    let report = AlgebraReport {
        label: alg.label.to_string(),
        class: alg.classify().to_string(),
        scale: alg.scale,
        brackets,
        connection,
        sectional,
        warning: alg.warning.clone(),
    };
    emit(cfg, "algebra.json", &report)
}

#[derive(Serialize)]
struct ReconstructReport {
    group: String,
    grid: Grid2D,
    h_residual: f64,
    tangential: f64,
    holonomy: f64,
    dirac_residual: f64,
}

pub fn reconstruct(cfg: &RunConfig, input: &Path) -> Result<()> {
    let psi = load_csv(input)?;
    let geo = geometry(cfg)?;
    let alg = geo.algebra();
    let g = psi.grid;
    let ff = recon::reconstruct(&psi, &alg)?;
    let ext = mean_curvature(&ff, &alg)?;
    let dh = (&ext.h - &psi.h).mapv(f64::abs);
    let hol = plaquette_holonomy(&factorize_z(&psi), &alg, &g)?;
    let report = ReconstructReport {
        group: geo.to_string(),
        grid: g,
        h_residual: masked_max(&dh, &ext.valid, &g, 2),
        tangential: masked_max(&ext.tangential, &ext.valid, &g, 2),
        holonomy: hol.iter().copied().fold(0.0, f64::max),
        dirac_residual: dirac_residual(&psi, &potentials(&psi, geo))?.max_norm(&g, 1),
    };
    let dir = cfg.out_dir()?.unwrap_or(Path::new("."));
    let file = std::fs::File::create(dir.join("mesh.obj"))?;
    write_obj(&ff, Chart::Native, std::io::BufWriter::new(file))?;
    emit(cfg, "reconstruct.json", &report)
}

pub fn cmc_sweep(cfg: &RunConfig) -> Result<()> {
    let ks = &cfg.k;
    if let Some(k) = ks.iter().find(|k| !(**k > 0.0)) {
        return Err(Error::OutOfRange {
            name: "k",
            value: *k,
            reason: "pole slopes must be positive",
        });
    }
    let opts = RevolveOptions::default();
    let workers = cfg.threads.min(ks.len()).max(1);
    let mut results: Vec<(usize, Result<CmcSphereRow>)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                s.spawn(move || {
                    (w..ks.len())
                        .step_by(workers)
                        .map(|i| (i, cmc_sphere_row(ks[i], PROFILE_STEP, &opts)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    results.sort_by_key(|(i, _)| *i);
    let mut rows = vec![];
    for (i, r) in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => eprintln!("k = {}: {e}", ks[i]),
        }
    }
    let mut buf = Vec::new();
    write_cmc_csv(&rows, &mut buf)?;
    match cfg.out_dir()? {
        Some(dir) => std::fs::write(dir.join("cmc_sweep.csv"), &buf)?,
        None => print!("{}", String::from_utf8_lossy(&buf)),
    }
    Ok(())
}

fn noise(seed: u64) -> Option<ChaCha8Rng> {
    (seed != 0).then(|| ChaCha8Rng::seed_from_u64(seed))
}

fn perturb_spinor(psi: &mut SpinorField, seed: u64) {
    if let Some(mut rng) = noise(seed) {
        for z in psi.psi1.iter_mut().chain(psi.psi2.iter_mut()) {
            *z += C64::new(rng.random_range(-NOISE..NOISE), rng.random_range(-NOISE..NOISE));
        }
    }
}

fn perturb_scalar(f: &mut ScalarField, seed: u64) {
    if let Some(mut rng) = noise(seed) {
        for z in f.vals.iter_mut() {
            *z += rng.random_range(-NOISE..NOISE);
        }
    }
}

#[derive(Serialize)]
struct MinimalReport {
    solver: &'static str,
    group: String,
    form: SystemForm,
    grid: Grid2D,
    tol: f64,
    steps: Vec<MinimalStep>,
    breakdown: Option<liespinor::minimalpde::Breakdown>,
}

#[derive(Serialize)]
struct MinimalStep {
    mu: Option<f64>,
    report: SolveReport,
}

#[derive(Serialize)]
struct NewtonRun {
    solver: &'static str,
    grid: Grid2D,
    tol: f64,
    b: Option<C64>,
    converged: bool,
    report: NewtonReport,
}

pub fn solve(cfg: &RunConfig, solver: Solver, form: Form) -> Result<()> {
    match solver {
        Solver::Minimal => solve_minimal(cfg, form),
        Solver::SinhGordon => solve_scalar(cfg, None),
        Solver::Berdinsky => solve_scalar(cfg, Some(parse_b(cfg.b.as_deref().unwrap_or("1"))?)),
    }
}

fn minimal_seed(cfg: &RunConfig, geo: Geometry, g: Grid2D) -> Result<SpinorField> {
    let plane = matches!(geo, Geometry::Sol | Geometry::Gmu(_));
    let named = match &cfg.seed {
        SeedSpec::Named(n) => n.as_str(),
        SeedSpec::Rng(_) if plane => "plane",
        SeedSpec::Rng(_) => "constant",
    };
    let mut psi = match named {
        "plane" => liespinor::samples::gmu_geodesic_plane(g)?,
        "constant" => SpinorField::constant(g, (C64::new(0.8, 0.0), C64::new(0.8, 0.0)), 0.0)?,
        other => return Err(Error::Config(format!("seed `{other}` is not available for the minimal solver"))),
    };
    if let SeedSpec::Rng(s) = cfg.seed {
        perturb_spinor(&mut psi, s);
    }
    Ok(psi)
}

fn solve_minimal(cfg: &RunConfig, form: Form) -> Result<()> {
    let n = cfg.grid.unwrap_or(17);
    let sweep = cfg.mu.len() > 1;
    let geo = if sweep { Geometry::Gmu(cfg.mu[0]) } else { geometry(cfg)? };
    // the half plane y > 0 carries the G_mu planes
    let v0 = if matches!(geo, Geometry::Sol | Geometry::Gmu(_)) { 1.0 } else { 0.0 };
    let g = Grid2D::rect(n, n, (0.0, 1.0), (v0, v0 + 1.0))?;
    let seed = minimal_seed(cfg, geo, g)?;
    let mut opts = SolveOptions::default();
    opts.tol = cfg.tol.unwrap_or(opts.tol);
    opts.damping = cfg.damping.unwrap_or(opts.damping);
    opts.max_iter = cfg.max_iter.unwrap_or(opts.max_iter);
    let sys_form = match form {
        Form::Dirac => SystemForm::DiracConsistent,
        Form::Printed => SystemForm::AsPrinted,
    };
    let (psi, steps, breakdown) = if sweep {
        if sys_form != SystemForm::DiracConsistent {
            return Err(Error::Config("mu continuation uses the Dirac form".into()));
        }
        let run = mu_sweep(&seed, &cfg.mu, &opts)?;
        let psi = run.steps.last().map(|s| s.psi.clone()).unwrap_or(seed);
        let steps = run
            .steps
            .into_iter()
            .map(|s| MinimalStep {
                mu: Some(s.mu),
                report: s.report,
            })
            .collect();
        (psi, steps, run.breakdown)
    } else {
        let (psi, report) = minimal_solve(&seed, MinimalSystem::with_form(geo, sys_form)?, &opts)?;
        (psi, vec![MinimalStep { mu: None, report }], None)
    };
    let failed = breakdown.is_some() || steps.iter().any(|s| !s.report.converged);
    let last = steps.last().map(|s| s.report.clone());
    let report = MinimalReport {
        solver: "minimal",
        group: if sweep { "gmu".into() } else { geo.to_string() },
        form: sys_form,
        grid: g,
        tol: opts.tol,
        steps,
        breakdown,
    };
    if let Some(dir) = cfg.out_dir()? {
        save_csv(&psi, &dir.join("psi.csv"))?;
    }
    emit(cfg, "solve.json", &report)?;
    if failed {
        let r = last.unwrap_or(SolveReport {
            converged: false,
            iterations: 0,
            residuals: vec![],
            e_alpha_min: 0.0,
            e_alpha_max: 0.0,
        });
        return Err(Error::NonConvergence(r.failure("minimal relaxation")));
    }
    Ok(())
}

fn parse_b(s: &str) -> Result<C64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| Error::Config(format!("bad --B value `{s}`")));
    match parts.as_slice() {
        [re] => Ok(C64::new(num(re)?, 0.0)),
        [re, im] => Ok(C64::new(num(re)?, num(im)?)),
        _ => Err(Error::Config(format!("bad --B value `{s}`"))),
    }
}

fn solve_scalar(cfg: &RunConfig, b: Option<C64>) -> Result<()> {
    let n = cfg.grid.unwrap_or(64);
    let (lu, lv) = (2.0 * PI, 2.0 * PI);
    let g = Grid2D::torus(n, n, lu, lv)?;
    let named = match &cfg.seed {
        SeedSpec::Named(n) => n.as_str(),
        SeedSpec::Rng(_) => "zero",
    };
    let mut seed = match named {
        "zero" | "constant" => ScalarField::constant(g, C64::new(0.0, 0.0))?,
        "cos" => ScalarField::from_fn(g, move |z| C64::new(0.5 * (2.0 * PI * z.re / lu).cos(), 0.0))?,
        other => return Err(Error::Config(format!("seed `{other}` is not available for this solver"))),
    };
    if let SeedSpec::Rng(s) = cfg.seed {
        perturb_scalar(&mut seed, s);
    }
    let tol = cfg.tol.unwrap_or(1e-10);
    let (name, res) = match b {
        None => ("sinh-gordon", sinh_gordon_solve(&seed, tol)),
        Some(b) => ("berdinsky", berdinsky_solve(&seed, &ScalarField::constant(g, b)?, tol)),
    };
    let (v, report) = res?;
    let dir = cfg.out_dir()?;
    if let Some(dir) = dir {
        write_scalar_csv(&v, &dir.join(if b.is_some() { "v.csv" } else { "u.csv" }))?;
        if let Some(b) = b {
            let psi = nil_lax_integrate(&v, &ScalarField::constant(g, b)?, 0.5, (C64::new(1.0, 0.0), C64::new(0.0, 0.0)))?;
            save_csv(&psi, &dir.join("psi.csv"))?;
        }
    }
    let run = NewtonRun {
        solver: name,
        grid: g,
        tol,
        b,
        converged: report.final_residual() < tol,
        report,
    };
    emit(cfg, "solve.json", &run)
}

fn write_scalar_csv(f: &ScalarField, path: &Path) -> Result<()> {
    let mut s = String::from("iu,iv,re,im\n");
    for ((i, j), z) in f.vals.indexed_iter() {
        s.push_str(&format!("{i},{j},{},{}\n", fmt_f64(z.re), fmt_f64(z.im)));
    }
    std::fs::write(path, s)?;
    Ok(())
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct EnergyReport {
    group: String,
    E_re: f64,
    E_im: f64,
    E_geometric: Option<f64>,
    E_profile: Option<f64>,
    W: f64,
    chi: Option<i32>,
    grid: Grid2D,
    tolerances: BTreeMap<&'static str, f64>,
}

pub fn energy(cfg: &RunConfig, input: Option<&Path>, chi: Option<i32>) -> Result<()> {
    let mut tolerances = BTreeMap::new();
    tolerances.insert("degenerate_metric", liespinor::spinfield::DEGENERATE_METRIC);
    let report = match (input, cfg.k.as_slice()) {
        (Some(path), []) => {
            let psi = load_csv(path)?;
            let geo = geometry(cfg)?;
            let alg = geo.algebra();
            let e = spinor_energy(&potentials(&psi, geo), &psi.grid)?;
            let meas = SurfaceMeasure::from_spinor(&psi, chi)?;
            let khat = ambient_curvature(&psi, &alg)?;
            EnergyReport {
                group: geo.to_string(),
                E_re: e.re,
                E_im: e.im,
                E_geometric: energy_geometric(&psi.h, &khat, &meas, geo).ok(),
                E_profile: None,
                W: willmore(&psi.h, &khat, &meas),
                chi,
                grid: psi.grid,
                tolerances,
            }
        }
        (None, [k]) => {
            let p = cmc_profile(*k, 100.0 / k, PROFILE_STEP)?;
            let surf = revolve_to_surface(&p, &RevolveOptions::default())?;
            let e = revolved_energies(&surf)?;
            tolerances.insert("profile_step", PROFILE_STEP);
            EnergyReport {
                group: Geometry::Nil.to_string(),
                E_re: e.spinor.re,
                E_im: e.spinor.im,
                E_geometric: Some(e.geometric),
                E_profile: Some(spinor_energy_revolution(&p, 2)?),
                W: willmore_quadrature(&surf)?,
                chi: Some(2),
                grid: surf.psi.grid,
                tolerances,
            }
        }
        _ => return Err(Error::Config("give a spinor CSV or a single --k".into())),
    };
    emit(cfg, "energy.json", &report)
}
