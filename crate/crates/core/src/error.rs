use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("qubit {qubit} out of range for {size} qubits")]
    QubitOutOfRange { qubit: usize, size: usize },
    #[error("index {index} out of range (max {max})")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("pattern mismatch at {at}: {msg}")]
    PatternMismatch { at: usize, msg: String },
    #[error("size bound exceeded: {0} qubits")]
    TooManyQubits(usize),
    #[error("qubit counts differ: {0} vs {1}")]
    QubitCountMismatch(usize, usize),
    #[error("noise spec: {0}")]
    Noise(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("incompatible map: {0}")]
    IncompatibleMap(String),
    #[error("topology violation: {0}")]
    Topology(String),
    #[error("no trivial location exists for the candidate")]
    NoTrivialLocation,
    #[error("matrix is singular or ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),
    #[error("curve index mismatch")]
    CurveMismatch,
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
