use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("formula must have at least one variable")]
    NoVariables,
    #[error("formula must have at least one clause")]
    NoClauses,
    #[error("clause {clause} is empty")]
    EmptyClause { clause: usize },
    #[error("clause {clause} has {len} literals, expected exactly {expected}")]
    ClauseArity { clause: usize, len: usize, expected: usize },
    #[error("clause {clause} mentions variable {var} more than once")]
    DuplicateVariable { clause: usize, var: usize },
    #[error("variable index {var} out of range for {num_vars} variables")]
    VariableOutOfRange { var: usize, num_vars: usize },
    #[error("generator needs at least 3 variables, got {0}")]
    TooFewVariables(usize),
    #[error("clause density {0} yields no clauses")]
    EmptyEnsemble(f64),
    #[error("assignment has length {got}, formula has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("model layer dimensions {0:?} are inconsistent")]
    ModelShape(alloc::vec::Vec<usize>),
    #[error("model input dimension is {got}, expected {expected}")]
    ModelInput { expected: usize, got: usize },
    #[error("model contains a non-finite parameter")]
    NonFiniteParameter,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset has {len} samples, fewer than the batch size {batch}")]
    DatasetTooSmall { len: usize, batch: usize },
    #[error("correlation is undefined: a series has zero variance")]
    ZeroVariance,
    #[error("correlation needs two equal-length series of at least 2 points")]
    SeriesShape,
}
