use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid site dimensions: {0}")]
    InvalidDims(String),
    #[error("state vector not normalized (norm = {0})")]
    NotNormalized(f64),
    #[error("matrix is not Hermitian (max deviation = {0:.3e})")]
    NotHermitian(f64),
    #[error("trace is not 1 (got {0})")]
    TraceNotOne(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue = {0:.3e})")]
    NotPsd(f64),
    #[error("matrix has wrong shape: expected {expected}x{expected}, got {rows}x{cols}")]
    ShapeMismatch {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("empty subsystem")]
    EmptySubsystem,
    #[error("site index {site} out of range 1..={n}")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("expected a bipartition, got {0} blocks")]
    NonBipartition(usize),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("block count {k} out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("Stirling numbers supported only for n <= 20, got n = {0}")]
    StirlingOverflow(usize),
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error("unknown state family: {0}")]
    UnknownFamily(String),
    #[error("operation requires equal local dimensions, got {0:?}")]
    UnequalDims(Vec<usize>),
    #[error("operation requires qubit sites, got dims {0:?}")]
    NonQubit(Vec<usize>),
    #[error("ensemble size {given} is smaller than the state rank {rank}")]
    EnsembleTooSmall { given: usize, rank: usize },
    #[error("regime not covered: {0}")]
    RegimeNotCovered(String),
    #[error("not a unitary matrix (max |UU† - I| = {0:.3e})")]
    NotUnitary(f64),
    #[error("state file parse error: {0}")]
    StateParse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
