//! Deterministic JSON and CSV output for solver runs and sweeps.
//!
//! Floats are written with 17 significant digits so that re-running a
//! computation reproduces its files byte for byte.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::functionals::{ambient_curvature, energy_geometric, spinor_energy, SpinorEnergy};
use crate::nilrot::{
    cmc_profile, revolve_to_surface, spinor_energy_revolution, willmore_cmc_sphere, willmore_quadrature,
    RevolveOptions, RevolvedSurface, WillmoreReading,
};
use crate::spinfield::io::fmt_f64;
use crate::spinfield::{potentials, Geometry};

/// Serializes `value` as pretty JSON with fixed-width floats. Object keys
/// keep their declaration order; maps should be `BTreeMap`s.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Config(e.to_string()))?;
    let mut out = String::new();
    emit(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?)?;
    Ok(())
}

fn emit(v: &Value, depth: usize, out: &mut String) {
    let pad = |d: usize| "  ".repeat(d);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_i64(), n.as_u64(), n.as_f64()) {
            (Some(i), _, _) => out.push_str(&i.to_string()),
            (_, Some(u), _) => out.push_str(&u.to_string()),
            (_, _, Some(x)) => out.push_str(&fmt_f64(x)),
            _ => out.push_str(&n.to_string()),
        },
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) => {
            out.push_str("[\n");
            for (k, x) in a.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                emit(x, depth + 1, out);
                out.push_str(if k + 1 < a.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            out.push_str("{\n");
            for (k, (key, x)) in m.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                emit(x, depth + 1, out);
                out.push_str(if k + 1 < m.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push('}');
        }
    }
}

/// Spinor and geometric energy of a revolved Nil surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceEnergies {
    pub spinor: SpinorEnergy,
    pub geometric: f64,
}

/// `integral U V` with the Nil potentials of the measured data, and the
/// geometric form `1/4 integral (H^2 + Khat/4 - 1/16) dmu`.
pub fn revolved_energies(surf: &RevolvedSurface) -> Result<SurfaceEnergies> {
    let psi = &surf.psi;
    let pot = potentials(psi, Geometry::Nil);
    let spinor = spinor_energy(&pot, &psi.grid)?;
    let khat = ambient_curvature(psi, &surf.algebra)?;
    let meas = surf.measure(Some(2))?;
    let geometric = energy_geometric(&psi.h, &khat, &meas, Geometry::Nil)?;
    Ok(SurfaceEnergies { spinor, geometric })
}

/// One row of a CMC-sphere sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CmcSphereRow {
    pub k: f64,
    /// Measured mean curvature of the revolved sphere.
    pub h: f64,
    /// Energy from the profile formula.
    pub energy: f64,
    /// `integral U V` on the revolved surface.
    pub energy_spinor: f64,
    /// Closed form `W(H)` in the reading that the quadrature confirms.
    pub w_closed: f64,
    pub w_quadrature: f64,
    /// Readings of the closed form within 0.5% of the quadrature.
    pub reading_validated: String,
}

/// Relative agreement required to call a reading of `W(H)` validated.
pub const W_READING_TOL: f64 = 5e-3;

pub fn cmc_sphere_row(k: f64, profile_step: f64, opts: &RevolveOptions) -> Result<CmcSphereRow> {
    if !(k > 0.0) {
        return Err(Error::OutOfRange {
            name: "k",
            value: k,
            reason: "pole slope must be positive",
        });
    }
    let p = cmc_profile(k, 100.0 / k, profile_step)?;
    let energy = spinor_energy_revolution(&p, 2)?;
    let surf = revolve_to_surface(&p, opts)?;
    let h = surf.central_h();
    let w_quadrature = willmore_quadrature(&surf)?;
    let energy_spinor = revolved_energies(&surf)?.spinor.re;
    let mut ok = vec![];
    for (name, r) in [
        ("denominator", WillmoreReading::Denominator),
        ("as-printed", WillmoreReading::AsPrinted),
    ] {
        let w = willmore_cmc_sphere(h, r)?;
        if ((w - w_quadrature) / w_quadrature).abs() < W_READING_TOL {
            ok.push(name);
        }
    }
    Ok(CmcSphereRow {
        k,
        h,
        energy,
        energy_spinor,
        w_closed: willmore_cmc_sphere(h, WillmoreReading::Denominator)?,
        w_quadrature,
        reading_validated: if ok.is_empty() { "none".into() } else { ok.join("+") },
    })
}

pub const CMC_CSV_HEADER: &str = "k,H,E,E_spinor,W_closed,W_quadrature,reading_validated";

pub fn write_cmc_csv<W: Write>(rows: &[CmcSphereRow], mut w: W) -> Result<()> {
    writeln!(w, "{CMC_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt_f64(r.k),
            fmt_f64(r.h),
            fmt_f64(r.energy),
            fmt_f64(r.energy_spinor),
            fmt_f64(r.w_closed),
            fmt_f64(r.w_quadrature),
            r.reading_validated
        )?;
    }
    Ok(())
}
