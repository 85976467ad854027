use thiserror::Error;

/// Everything that can go wrong between reading an ensemble and simulating
/// the network that discriminates it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed document: {0}")]
    Malformed(String),

    #[error("dimension mismatch in {field}: expected {expected}, found {found}")]
    Dimension {
        field: String,
        expected: usize,
        found: usize,
    },

    #[error("state {index} has norm {norm}, too far from 1 to renormalize")]
    Normalization { index: usize, norm: f64 },

    #[error("invalid priors: {0}")]
    InvalidPriors(String),

    #[error("states are linearly dependent (rank {rank} of {n}, smallest singular value {min_singular:e})")]
    DependentStates {
        rank: usize,
        n: usize,
        min_singular: f64,
    },

    #[error("failure probability q[{index}] = {value} lies outside [0, 1]")]
    InvalidAssignment { index: usize, value: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("uniform shift by {shift:e} moves q[{index}] = {value} outside the unit cube")]
    ProjectionOutsideCube { index: usize, value: f64, shift: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("declared failure-space dimension {declared} but numerical rank is {numerical}")]
    RankMismatch { declared: usize, numerical: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("inner products differ between inputs and outputs (max deviation {deviation:e})")]
    InnerProductMismatch { deviation: f64 },

    #[error("matrix is not unitary (max |M^H M - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("could not zero entry ({row}, {col}) of the working matrix (residual {residual:e})")]
    Elimination { row: usize, col: usize, residual: f64 },

    #[error("port {port} out of range for a {ports}-port network")]
    PortOutOfRange { port: usize, ports: usize },

    #[error("wiring error: {0}")]
    Wiring(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
