//! CSV and binary serialization of spinor fields.
//!
//! CSV columns are `iu,iv,re_psi1,im_psi1,re_psi2,im_psi2,H,valid`. An optional
//! first line `# grid key=value ...` carries spacing, origin, periodicity and
//! parity; without it unit spacing is assumed.
//!
//! The binary dump starts with the magic `SPN1`, followed by a little-endian
//! header and six `f64` per sample in row-major `(iu, iv)` order. An optional
//! block of complex matrices (one per sample) follows for frame fields.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use super::{Grid2D, Parity, SpinorField};
use crate::error::{Error, Result};

/// Fixed float formatting: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn grid_comment(psi: &SpinorField) -> String {
    let g = &psi.grid;
    format!(
        "# grid nu={} nv={} du={} dv={} u0={} v0={} periodic_u={} periodic_v={} parity_u={} parity_v={} stencil={}",
        g.nu,
        g.nv,
        fmt_f64(g.du),
        fmt_f64(g.dv),
        fmt_f64(g.origin.re),
        fmt_f64(g.origin.im),
        g.periodic_u,
        g.periodic_v,
        psi.parity[0] == Parity::Odd,
        psi.parity[1] == Parity::Odd,
        match g.stencil {
            super::Stencil::Central2 => "central2",
            super::Stencil::Central4 => "central4",
            super::Stencil::Spectral => "spectral",
        }
    )
}

pub fn write_csv<W: Write>(psi: &SpinorField, mut w: W) -> Result<()> {
    writeln!(w, "{}", grid_comment(psi))?;
    let mut wr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    wr.write_record(["iu", "iv", "re_psi1", "im_psi1", "re_psi2", "im_psi2", "H", "valid"])
        .map_err(io)?;
    for ((i, j), p1) in psi.psi1.indexed_iter() {
        let p2 = psi.psi2[(i, j)];
        wr.write_record([
            i.to_string(),
            j.to_string(),
            fmt_f64(p1.re),
            fmt_f64(p1.im),
            fmt_f64(p2.re),
            fmt_f64(p2.im),
            fmt_f64(psi.h[(i, j)]),
            u8::from(psi.valid[(i, j)]).to_string(),
        ])
        .map_err(io)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn save_csv(psi: &SpinorField, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_csv(psi, std::io::BufWriter::new(f))
}

pub fn load_csv(path: &Path) -> Result<SpinorField> {
    read_csv(std::fs::File::open(path)?)
}

struct Meta {
    nu: Option<usize>,
    nv: Option<usize>,
    du: f64,
    dv: f64,
    origin: C64,
    periodic: [bool; 2],
    parity: [Parity; 2],
    stencil: super::Stencil,
}

fn parse_meta(line: &str) -> Result<Meta> {
    let mut m = Meta {
        nu: None,
        nv: None,
        du: 1.0,
        dv: 1.0,
        origin: C64::new(0.0, 0.0),
        periodic: [false; 2],
        parity: [Parity::Even; 2],
        stencil: super::Stencil::Central2,
    };
    let bad = |msg: String| Error::Parse { line: 1, msg };
    for tok in line.trim_start_matches('#').split_whitespace().skip(1) {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| bad(format!("malformed metadata token `{tok}`")))?;
        let num = || v.parse::<f64>().map_err(|_| bad(format!("bad number for {k}: `{v}`")));
        let int = || v.parse::<usize>().map_err(|_| bad(format!("bad integer for {k}: `{v}`")));
        let flag = || v.parse::<bool>().map_err(|_| bad(format!("bad boolean for {k}: `{v}`")));
        let odd = |b: bool| if b { Parity::Odd } else { Parity::Even };
        match k {
            "nu" => m.nu = Some(int()?),
            "nv" => m.nv = Some(int()?),
            "du" => m.du = num()?,
            "dv" => m.dv = num()?,
            "u0" => m.origin.re = num()?,
            "v0" => m.origin.im = num()?,
            "periodic_u" => m.periodic[0] = flag()?,
            "periodic_v" => m.periodic[1] = flag()?,
            "parity_u" => m.parity[0] = odd(flag()?),
            "parity_v" => m.parity[1] = odd(flag()?),
            "stencil" => {
                m.stencil = match v {
                    "central2" => super::Stencil::Central2,
                    "central4" => super::Stencil::Central4,
                    "spectral" => super::Stencil::Spectral,
                    _ => return Err(bad(format!("unknown stencil `{v}`"))),
                }
            }
            _ => return Err(bad(format!("unknown metadata key `{k}`"))),
        }
    }
    Ok(m)
}

pub fn read_csv<R: Read>(mut r: R) -> Result<SpinorField> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let (meta, body, offset) = match text.lines().next() {
        Some(first) if first.starts_with('#') => {
            let rest = text.split_once('\n').map(|x| x.1).unwrap_or("");
            (parse_meta(first)?, rest, 1)
        }
        _ => (parse_meta("# grid")?, text.as_str(), 0),
    };
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let header = rd.headers().map_err(|e| Error::Parse {
        line: 1 + offset,
        msg: e.to_string(),
    })?;
    let want = ["iu", "iv", "re_psi1", "im_psi1", "re_psi2", "im_psi2", "H", "valid"];
    if header.len() != want.len() || header.iter().zip(want).any(|(a, b)| a.trim() != b) {
        return Err(Error::Parse {
            line: 1 + offset,
            msg: format!("expected header {}", want.join(",")),
        });
    }
    struct Row {
        i: usize,
        j: usize,
        p1: C64,
        p2: C64,
        h: f64,
        ok: bool,
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0) + offset,
            msg: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0) + offset;
        let err = |msg: String| Error::Parse { line, msg };
        if rec.len() != 8 {
            return Err(err(format!("expected 8 fields, found {}", rec.len())));
        }
        let idx = |k: usize| {
            rec[k]
                .trim()
                .parse::<usize>()
                .map_err(|_| err(format!("bad index `{}`", &rec[k])))
        };
        let num = |k: usize| {
            let x = rec[k]
                .trim()
                .parse::<f64>()
                .map_err(|_| err(format!("bad number `{}` in column {}", &rec[k], want[k])))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(err(format!("non-finite value in column {}", want[k])))
            }
        };
        let ok = match rec[7].trim() {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(err(format!("bad valid flag `{other}`"))),
        };
        rows.push(Row {
            i: idx(0)?,
            j: idx(1)?,
            p1: C64::new(num(2)?, num(3)?),
            p2: C64::new(num(4)?, num(5)?),
            h: num(6)?,
            ok,
        });
    }
    let nu = meta.nu.unwrap_or_else(|| rows.iter().map(|r| r.i + 1).max().unwrap_or(0));
    let nv = meta.nv.unwrap_or_else(|| rows.iter().map(|r| r.j + 1).max().unwrap_or(0));
    let grid = Grid2D {
        nu,
        nv,
        du: meta.du,
        dv: meta.dv,
        origin: meta.origin,
        periodic_u: meta.periodic[0],
        periodic_v: meta.periodic[1],
        stencil: meta.stencil,
    };
    grid.validate()?;
    if rows.len() != nu * nv {
        return Err(Error::Parse {
            line: rows.len() + 1 + offset,
            msg: format!("expected {} samples, found {}", nu * nv, rows.len()),
        });
    }
    let mut psi1 = Array2::zeros((nu, nv));
    let mut psi2 = Array2::zeros((nu, nv));
    let mut h = Array2::zeros((nu, nv));
    let mut valid = Array2::from_elem((nu, nv), false);
    let mut seen = Array2::from_elem((nu, nv), false);
    for (k, r) in rows.iter().enumerate() {
        let line = k + 2 + offset;
        if r.i >= nu || r.j >= nv {
            return Err(Error::Parse {
                line,
                msg: format!("index ({}, {}) outside {nu} x {nv}", r.i, r.j),
            });
        }
        if seen[(r.i, r.j)] {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate sample ({}, {})", r.i, r.j),
            });
        }
        seen[(r.i, r.j)] = true;
        psi1[(r.i, r.j)] = r.p1;
        psi2[(r.i, r.j)] = r.p2;
        h[(r.i, r.j)] = r.h;
        valid[(r.i, r.j)] = r.ok;
    }
    let mut f = SpinorField::new(grid, psi1, psi2, h)?.with_parity(meta.parity);
    f.valid = valid;
    Ok(f)
}

const MAGIC: &[u8; 4] = b"SPN1";

/// Square complex matrices attached to each sample (frame fields).
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixBlock {
    pub dim: usize,
    /// Row-major entries of each sample's matrix, samples in `(iu, iv)` order.
    pub entries: Vec<C64>,
    pub winding: Vec<i64>,
}

pub fn write_binary<W: Write>(psi: &SpinorField, block: Option<&MatrixBlock>, mut w: W) -> Result<()> {
    let g = &psi.grid;
    w.write_all(MAGIC)?;
    w.write_all(&(g.nu as u64).to_le_bytes())?;
    w.write_all(&(g.nv as u64).to_le_bytes())?;
    for x in [g.du, g.dv, g.origin.re, g.origin.im] {
        w.write_all(&x.to_le_bytes())?;
    }
    let flags = u32::from(g.periodic_u)
        | u32::from(g.periodic_v) << 1
        | u32::from(psi.parity[0] == Parity::Odd) << 2
        | u32::from(psi.parity[1] == Parity::Odd) << 3
        | u32::from(block.is_some()) << 4;
    w.write_all(&flags.to_le_bytes())?;
    for ((i, j), p1) in psi.psi1.indexed_iter() {
        let p2 = psi.psi2[(i, j)];
        let ok = if psi.valid[(i, j)] { 1.0 } else { 0.0 };
        for x in [p1.re, p1.im, p2.re, p2.im, psi.h[(i, j)], ok] {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    if let Some(b) = block {
        if b.entries.len() != g.nu * g.nv * b.dim * b.dim || b.winding.len() != g.nu * g.nv {
            return Err(Error::ShapeMismatch {
                expected: (g.nu * g.nv, b.dim * b.dim),
                found: (b.winding.len(), b.entries.len()),
            });
        }
        w.write_all(&(b.dim as u64).to_le_bytes())?;
        for z in &b.entries {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        for k in &b.winding {
            w.write_all(&k.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

pub fn read_binary<R: Read>(mut r: R) -> Result<(SpinorField, Option<MatrixBlock>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse {
            line: 0,
            msg: "missing SPN1 magic".into(),
        });
    }
    let nu = read_u64(&mut r)? as usize;
    let nv = read_u64(&mut r)? as usize;
    let du = read_f64(&mut r)?;
    let dv = read_f64(&mut r)?;
    let origin = C64::new(read_f64(&mut r)?, read_f64(&mut r)?);
    let mut fb = [0u8; 4];
    r.read_exact(&mut fb)?;
    let flags = u32::from_le_bytes(fb);
    let grid = Grid2D::new(nu, nv, du, dv)?
        .with_origin(origin)
        .periodic(flags & 1 != 0, flags & 2 != 0);
    let parity = [
        if flags & 4 != 0 { Parity::Odd } else { Parity::Even },
        if flags & 8 != 0 { Parity::Odd } else { Parity::Even },
    ];
    let mut psi1 = Array2::zeros((nu, nv));
    let mut psi2 = Array2::zeros((nu, nv));
    let mut h = Array2::zeros((nu, nv));
    let mut valid = Array2::from_elem((nu, nv), true);
    for i in 0..nu {
        for j in 0..nv {
            let mut x = [0.0; 6];
            for v in x.iter_mut() {
                *v = read_f64(&mut r)?;
            }
            psi1[(i, j)] = C64::new(x[0], x[1]);
            psi2[(i, j)] = C64::new(x[2], x[3]);
            h[(i, j)] = x[4];
            valid[(i, j)] = x[5] != 0.0;
        }
    }
    let block = if flags & 16 != 0 {
        let dim = read_u64(&mut r)? as usize;
        let mut entries = Vec::with_capacity(nu * nv * dim * dim);
        for _ in 0..nu * nv * dim * dim {
            entries.push(C64::new(read_f64(&mut r)?, read_f64(&mut r)?));
        }
        let mut winding = Vec::with_capacity(nu * nv);
        for _ in 0..nu * nv {
            winding.push(read_u64(&mut r)? as i64);
        }
        Some(MatrixBlock { dim, entries, winding })
    } else {
        None
    };
    let mut f = SpinorField::new(grid, psi1, psi2, h)?.with_parity(parity);
    f.valid = valid;
    Ok((f, block))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SpinorField {
        let g = Grid2D::rect(5, 4, (-0.5, 0.5), (0.0, 0.3))
            .unwrap()
            .periodic(false, true);
        let mut f = SpinorField::from_fn(g, |z| (z.exp(), z * 0.1 - 0.3, z.re)).unwrap();
        f.valid[(2, 1)] = false;
        f.with_parity([Parity::Even, Parity::Odd])
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let f = sample();
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, f);
        // deterministic bytes
        let mut again = Vec::new();
        write_csv(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let f = sample();
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let mut text = String::from_utf8(buf).unwrap();
        text = text.replacen("0,2,", "0,2,abc", 1);
        match read_csv(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        let short = "iu,iv,re_psi1,im_psi1,re_psi2,im_psi2,H,valid\n0,0,1,0,0,0,0,1\n";
        assert!(matches!(read_csv(short.as_bytes()), Err(Error::InvalidGrid(_))));
        assert!(matches!(read_csv("a,b\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn binary_round_trip() {
        let f = sample();
        let block = MatrixBlock {
            dim: 2,
            entries: (0..f.grid.nu * f.grid.nv * 4).map(|k| C64::new(k as f64, -0.5)).collect(),
            winding: (0..f.grid.nu * f.grid.nv).map(|k| k as i64 - 3).collect(),
        };
        let mut buf = Vec::new();
        write_binary(&f, Some(&block), &mut buf).unwrap();
        assert_eq!(&buf[..4], b"SPN1");
        let (back, b2) = read_binary(buf.as_slice()).unwrap();
        assert_eq!(back.psi1, f.psi1);
        assert_eq!(back.valid, f.valid);
        assert_eq!(back.parity, f.parity);
        assert_eq!(b2.unwrap(), block);
        assert!(read_binary(&b"XXXX"[..]).is_err());
    }
}
