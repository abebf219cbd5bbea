//! Crate-wide error type.

use crate::topology::TopologyKind;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid core count {n_cores} for {kind} topology: {reason}")]
    InvalidCoreCount {
        kind: TopologyKind,
        n_cores: usize,
        reason: &'static str,
    },

    #[error("degenerate core: n_qubits_per_core = 1 admits no two-qubit gate (p_single = {p_single})")]
    DegenerateCore { p_single: f64 },

    #[error("invalid link ({a}, {b}): cores must be distinct and ordered below n_cores")]
    InvalidLink { a: usize, b: usize },

    #[error("{what} = {value} exceeds the configured cap {cap}")]
    CapExceeded {
        what: &'static str,
        value: usize,
        cap: usize,
    },

    #[error("index {index} out of range for {len} element(s)")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("two-qubit gate addressed to a single qubit ({qubit})")]
    EqualQubits { qubit: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("probability vector not normalized: sum = {sum}")]
    NotNormalized { sum: f64 },

    #[error("too few samples: have {have}, need at least {need}")]
    TooFewSamples { have: usize, need: usize },

    #[error("{what} = {value} out of range {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("operator is not column-stochastic (max column-sum deviation {deviation:.3e})")]
    NotStochastic { deviation: f64 },

    #[error("eigeniteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("spectrum anomaly: eigenvalue modulus {modulus} exceeds 1 + tolerance")]
    SpectrumAnomaly { modulus: f64 },

    #[error("no eigenvalue below the unit cluster")]
    NoSubleadingEigenvalue,

    #[error("too few profile points: have {have}, need at least {need}")]
    TooFewPoints { have: usize, need: usize },

    #[error("nonpositive eigenvalue {lambda} at I = {i}: log-linear fit undefined")]
    NonpositiveEigenvalue { i: usize, lambda: f64 },

    #[error("I = {i} lacks both neighbors in the profile: central difference undefined")]
    BoundaryPoint { i: usize },

    #[error("profiles share no I values")]
    NoOverlap,

    #[error("missing config key `{key}`")]
    MissingKey { key: &'static str },

    #[error("unknown config key `{key}` on line {line}")]
    UnknownKey { key: String, line: usize },

    #[error("invalid value for `{key}` on line {line}: {message}")]
    InvalidValue {
        key: String,
        line: usize,
        message: String,
    },

    #[error("{path}: line {line}: {message}")]
    CsvParse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("eigensolver backend failed: {0}")]
    EigenBackend(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
