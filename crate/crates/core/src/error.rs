use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("cannot draw {requested} distinct binary columns of length {length} (codespace holds {available})")]
    ExhaustedCodespace {
        requested: usize,
        length: usize,
        available: u128,
    },

    #[error("user {0} has no codebook assignment")]
    UnassignedUser(usize),

    #[error("resource map holds {map} elements but the code has length {code}")]
    MapSizeMismatch { map: usize, code: usize },

    #[error("invalid spatial dimensions: {0}")]
    InvalidDims(String),

    #[error("covariance is not PSD (min eigenvalue {min_eigenvalue:e}, max {max_eigenvalue:e})")]
    CovarianceNotPsd {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("singular matrix")]
    SingularMatrix,

    #[error("pilot capacity exceeded: {users} users but only {capacity} pilot slots per resource block")]
    CapacityExceeded { users: usize, capacity: usize },

    #[error("non-positive SINR denominator {value:e} for user {user}")]
    NonpositiveDenominator { user: usize, value: f64 },

    #[error("fixed point did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("singular linear system (I - J)")]
    SingularSystem,

    #[error("mode precondition violated: {0}")]
    ModePreconditionViolated(String),

    #[error("unknown scheme: {0}")]
    UnknownScheme(String),

    #[error("search ceiling {ceiling} exceeds what the resource grid can host ({capacity} class-2 users)")]
    SearchBudgetExceeded { ceiling: usize, capacity: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no rows to export")]
    EmptyRows,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
