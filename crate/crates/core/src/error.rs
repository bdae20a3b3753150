use thiserror::Error;

/// Residual history of a solver run that stopped before reaching its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceFailure {
    pub solver: &'static str,
    pub iterations: usize,
    pub residuals: Vec<f64>,
}

impl std::fmt::Display for ConvergenceFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} stopped after {} iterations (last residual {:.3e})",
            self.solver,
            self.iterations,
            self.residuals.last().copied().unwrap_or(f64::NAN)
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown tag `{0}`")]
    UnknownTag(String),

    #[error("{name} = {value} is out of range: {reason}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field shape {found:?} does not match grid {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("degenerate immersion: e^alpha below threshold at {count} samples")]
    DegenerateMetric { count: usize },

    #[error("degenerate plane: the two vectors are (nearly) parallel")]
    DegeneratePlane,

    #[error("no matrix model registered for {0}")]
    NoModel(String),

    #[error("sample ({0}, {1}) on the integration tree is masked")]
    MaskedTree(usize, usize),

    #[error("{op} is not defined for {geometry}")]
    Unsupported { op: &'static str, geometry: String },

    #[error("masked domain: {0}")]
    MaskedDomain(String),

    #[error("profile curve: {0}")]
    Profile(String),

    #[error("{0}")]
    NonConvergence(ConvergenceFailure),

    #[error("solution blew up: {0}")]
    BlowUp(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
