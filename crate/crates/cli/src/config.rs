//! Run configuration: a TOML file whose keys mirror the long flags. Flags
//! given on the command line win over the file.

use std::path::{Path, PathBuf};

use liespinor::{Error, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub group: Option<String>,
    #[serde(rename = "type")]
    pub ty: Option<String>,
    pub a: Option<f64>,
    pub mu: Option<Vec<f64>>,
    pub scale: Option<f64>,
    pub basis: Option<String>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub damping: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<String>,
    pub k: Option<Vec<f64>>,
    pub b: Option<String>,
    pub threads: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Initial field for the solvers, or an RNG seed for randomized controls.
#[derive(Debug, Clone, PartialEq)]
pub enum SeedSpec {
    /// Default initial field perturbed with noise drawn from this seed; `0`
    /// means no perturbation.
    Rng(u64),
    Named(String),
}

impl SeedSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        if let Ok(n) = t.parse::<u64>() {
            return Ok(SeedSpec::Rng(n));
        }
        match t {
            "constant" | "zero" | "plane" | "cos" => Ok(SeedSpec::Named(t.to_string())),
            _ => Err(Error::UnknownTag(s.to_string())),
        }
    }
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec::Rng(0)
    }
}

/// Effective settings after merging flags over the file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub group: Option<String>,
    pub ty: Option<String>,
    pub a: Option<f64>,
    pub mu: Vec<f64>,
    pub scale: Option<f64>,
    pub basis: Option<String>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub damping: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: SeedSpec,
    pub k: Vec<f64>,
    pub b: Option<String>,
    pub threads: usize,
}

impl RunConfig {
    pub fn merge(flags: FileConfig, file: FileConfig) -> Result<Self> {
        let seed = match flags.seed.or(file.seed) {
            Some(s) => SeedSpec::parse(&s)?,
            None => SeedSpec::default(),
        };
        let cfg = RunConfig {
            group: flags.group.or(file.group),
            ty: flags.ty.or(file.ty),
            a: flags.a.or(file.a),
            mu: flags.mu.or(file.mu).unwrap_or_default(),
            scale: flags.scale.or(file.scale),
            basis: flags.basis.or(file.basis),
            grid: flags.grid.or(file.grid),
            tol: flags.tol.or(file.tol),
            max_iter: flags.max_iter.or(file.max_iter),
            damping: flags.damping.or(file.damping),
            out: flags.out.or(file.out),
            seed,
            k: flags.k.or(file.k).unwrap_or_default(),
            b: flags.b.or(file.b),
            threads: flags.threads.or(file.threads).unwrap_or(4).max(1),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::OutOfRange {
                    name: "tol",
                    value: t,
                    reason: "tolerance must be positive",
                });
            }
        }
        if let Some(d) = self.damping {
            if !(d > 0.0 && d <= 1.0) {
                return Err(Error::OutOfRange {
                    name: "damping",
                    value: d,
                    reason: "damping must lie in (0, 1]",
                });
            }
        }
        if let Some(n) = self.grid {
            if n < 4 {
                return Err(Error::InvalidGrid(format!("--grid {n}: need at least 4 samples")));
            }
        }
        Ok(())
    }

    /// Output directory, created on demand. `None` when no `--out` was given.
    pub fn out_dir(&self) -> Result<Option<&Path>> {
        match &self.out {
            None => Ok(None),
            Some(p) => {
                std::fs::create_dir_all(p)?;
                Ok(Some(p.as_path()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: FileConfig = toml::from_str("group = \"sol\"\ntol = 1e-6\nk = [1.0, 2.0]").unwrap();
        let flags = FileConfig {
            group: Some("nil".into()),
            ..Default::default()
        };
        let cfg = RunConfig::merge(flags, file).unwrap();
        assert_eq!(cfg.group.as_deref(), Some("nil"));
        assert_eq!(cfg.tol, Some(1e-6));
        assert_eq!(cfg.k, vec![1.0, 2.0]);
    }

    #[test]
    fn bad_values() {
        assert!(toml::from_str::<FileConfig>("colour = 1").is_err());
        let flags = FileConfig {
            tol: Some(-1.0),
            ..Default::default()
        };
        assert!(RunConfig::merge(flags, FileConfig::default()).is_err());
        assert_eq!(SeedSpec::parse("7").unwrap(), SeedSpec::Rng(7));
        assert!(SeedSpec::parse("bogus").is_err());
    }
}
