use thiserror::Error;

/// Errors produced anywhere in the crate.
///
/// Variants carry enough context for the CLI to print a one-line diagnostic.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed chain: {0}")]
    Shape(String),
    #[error("row {row} sums to {sum:.17} (deviation exceeds 1e-12)")]
    RowSumError { row: usize, sum: f64 },
    #[error("negative or non-finite entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("chain is reducible with {closed_classes} closed classes; stationary distribution is not unique")]
    ReducibleChain { closed_classes: usize },
    #[error("chain is not irreducible")]
    NotIrreducible,
    #[error("chain is not reversible")]
    NotReversible,
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    JacobiNoConvergence { sweeps: usize, off_norm: f64 },
    #[error("negative mass {value:e} at state {state}; eigensolver accuracy insufficient for this chain")]
    NegativeMass { state: usize, value: f64 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid time {t} for mode {mode}")]
    InvalidTime { t: f64, mode: &'static str },
    #[error("no mixing: distance still above {epsilon} at t = {t_max}")]
    NoMixing { epsilon: f64, t_max: f64 },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("parameter error: {0}")]
    ParamError(String),
    #[error("grid error: {0}")]
    GridError(String),
    #[error("empty target set")]
    EmptySet,
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("function is constant; variance ratio undefined")]
    ConstantFunction,
    #[error("spectrum out of range: {0}")]
    SpectrumOutOfRange(String),
    #[error("number of samples must be positive")]
    ZeroSamples,
    #[error("pmf is not normalized or has negative mass: {0}")]
    UnnormalizedPmf(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
