use thiserror::Error;

/// Errors produced anywhere in the pipeline.
///
/// Each variant maps onto one of the process exit codes used by the CLI
/// (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("site count mismatch: {left} vs {right}")]
    SiteMismatch { left: usize, right: usize },

    #[error("operator layout mismatch: cannot combine {left} and {right} operators")]
    LayoutMismatch { left: &'static str, right: &'static str },

    #[error("grade mismatch: cannot add operators with i-grades {left} and {right}")]
    GradeMismatch { left: u8, right: u8 },

    #[error("{0}")]
    Usage(String),

    #[error("n_sites = {n_sites} is outside the supported range 1..={max}")]
    SiteCount { n_sites: usize, max: usize },

    #[error("dense construction refused: n_sites = {n_sites} exceeds the guard of {max}")]
    DenseTooLarge { n_sites: usize, max: usize },

    #[error("seed is conserved; Krylov space is trivial")]
    ConservedSeed,

    #[error(
        "ring of {n_sites} sites is too small: an operator reached span {span}, \
         translation orbits are only unique up to span {limit}"
    )]
    RingTooSmall { n_sites: usize, span: usize, limit: usize },

    #[error("{kind} chain truncated at l = {l} needs {required} coefficients, got {got}")]
    InsufficientCoefficients {
        kind: &'static str,
        l: usize,
        required: usize,
        got: usize,
    },

    #[error("matrix of size {size} exceeds the dense eigensolver ceiling {ceiling}")]
    SpectrumTooLarge { size: usize, ceiling: usize },

    #[error("eigensolver failed (1-norm condition estimate {condition:.3e}): {reason}")]
    Eigensolver { reason: String, condition: f64 },

    #[error("integrator cannot reach relative tolerance {rtol:e}: {reason}")]
    Integrator { rtol: f64, reason: String },

    #[error("no perpetual candidate mode in refinement round {round}")]
    NoPerpetualCandidate { round: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config field `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }

    /// Process exit code: 2 config error, 3 numerical failure, 4 precondition violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Parse { .. } | Error::Io(_) => 2,
            Error::Eigensolver { .. }
            | Error::Integrator { .. }
            | Error::NonFinite(_)
            | Error::NoPerpetualCandidate { .. } => 3,
            _ => 4,
        }
    }

    /// Short machine-readable category name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::SiteMismatch { .. } => "site_mismatch",
            Error::LayoutMismatch { .. } => "layout_mismatch",
            Error::GradeMismatch { .. } => "grade_mismatch",
            Error::Usage(_) => "usage",
            Error::SiteCount { .. } => "site_count",
            Error::DenseTooLarge { .. } => "dense_too_large",
            Error::ConservedSeed => "conserved_seed",
            Error::RingTooSmall { .. } => "ring_too_small",
            Error::InsufficientCoefficients { .. } => "insufficient_coefficients",
            Error::SpectrumTooLarge { .. } => "spectrum_too_large",
            Error::Eigensolver { .. } => "eigensolver",
            Error::Integrator { .. } => "integrator",
            Error::NoPerpetualCandidate { .. } => "no_perpetual_candidate",
            Error::NonFinite(_) => "non_finite",
            Error::Parse { .. } => "parse",
            Error::Config { .. } => "config",
            Error::Io(_) => "io",
        }
    }
}
