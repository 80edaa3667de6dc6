use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported network: {0}")]
    Unsupported(String),

    #[error("exponent overflow: |nu.alpha| = {exponent:.3e} exceeds 700")]
    Overflow { exponent: f64 },

    #[error("state left the positive orthant at t = {t}")]
    NegativeState { t: f64 },

    #[error("state norm exceeded the blow-up bound {bound} at t = {t}")]
    BlowUp { t: f64, bound: f64 },

    #[error("total propensity is not finite at t = {t}")]
    RateOverflow { t: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("no momentum bracket found within |alpha| <= {alpha_max}")]
    NoBracket { alpha_max: f64 },

    #[error("hitting-time map is not monotone near alpha = {alpha}")]
    NonMonotone { alpha: f64 },

    #[error("conjugate point (dx/dq = 0) at t = {t}")]
    ConjugatePoint { t: f64 },

    #[error("probability slice {slice} drifted from unit mass by {defect:.3e}")]
    Normalization { slice: usize, defect: f64 },

    #[error("target state has zero probability at the terminal time")]
    Unreachable,

    #[error("zero rate: {0}")]
    ZeroRate(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("thinning bound violated: rate {rate} exceeds bound {bound}")]
    ThinningBound { rate: f64, bound: f64 },

    #[error("empty slice {0}: no mass on interior cells")]
    EmptySlice(usize),

    #[error("only {0} cells in the Gaussian fit window (need at least 5)")]
    FitWindow(usize),
}
