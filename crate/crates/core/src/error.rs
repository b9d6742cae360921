use thiserror::Error;

/// Which pole of a warped metric a closure problem was found at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pole {
    Left,
    Right,
}

impl std::fmt::Display for Pole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Pole::Left => write!(f, "left"),
            Pole::Right => write!(f, "right"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("warping function is non-positive at interior index {index} (phi = {value:e})")]
    NonPositiveWarp { index: usize, value: f64 },

    #[error("pole closure violated at the {pole} pole: |dphi/ds| = {slope}")]
    PoleClosureViolated { pole: Pole, slope: f64 },

    #[error("grid mismatch: expected {expected} values, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("test function must be strictly positive")]
    NonPositiveTestFunction,

    #[error("exponent p = {p} outside (1, {critical}]")]
    InvalidExponent { p: f64, critical: f64 },

    #[error("solver diverged at p = {p} after {iterations} iterations (residual {residual:e})")]
    SolverDiverged {
        p: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("operator could not be made positive by spectral shift (last shift {shift})")]
    IndefiniteOperator { shift: f64 },

    #[error("homogeneous parameter left (1e-8, 1e8): ({a}, {b}, {c})")]
    ParameterBlowup { a: f64, b: f64, c: f64 },

    #[error("time step {dt:e} exceeds stability bound {limit:e}")]
    CflViolated { dt: f64, limit: f64 },

    #[error("neckpinch detected: interior phi_min = {phi_min:e}")]
    NeckpinchDetected { phi_min: f64 },

    #[error("need at least {needed} uniformly spaced snapshots, got {got}")]
    InsufficientSnapshots { needed: usize, got: usize },

    #[error("normalization violated: |int u^(p+1) dV - 1| = {defect:e}")]
    NormalizationViolated { defect: f64 },

    #[error("grid too coarse: eigenvalue {index} has estimated relative error {estimate:.3}")]
    GridTooCoarse { index: usize, estimate: f64 },

    #[error("check inapplicable: {0}")]
    Inapplicable(String),

    #[error("operation requires the {0} backend")]
    WrongBackend(&'static str),

    #[error("at t = {t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at_time(self, t: f64) -> Error {
        match self {
            e @ Error::AtTime { .. } => e,
            e => Error::AtTime {
                t,
                source: Box::new(e),
            },
        }
    }

    /// Innermost error, skipping time annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtTime { source, .. } => source.root(),
            e => e,
        }
    }

    /// True for configuration and input-validation failures (as opposed to
    /// numerical failures during a run).
    pub fn is_config(&self) -> bool {
        matches!(
            self.root(),
            Error::Config(_)
                | Error::InvalidModel(_)
                | Error::InvalidMetric(_)
                | Error::InvalidExponent { .. }
                | Error::GridMismatch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
