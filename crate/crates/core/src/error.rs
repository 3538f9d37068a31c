use thiserror::Error;

/// Errors raised by the characteristic-root kernels.
///
/// Numerical payloads are stored as `f64` regardless of the working scalar.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("invalid quasi-polynomial: {0}")]
    InvalidQuasiPolynomial(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("singular jacobian: |dD/dlambda| = {magnitude:e} at lambda = {re} + {im}i")]
    SingularJacobian { re: f64, im: f64, magnitude: f64 },

    #[error("convergence failure: {0}")]
    ConvergenceFailure(String),

    #[error("degenerate problem: {0}")]
    DegenerateProblem(String),

    #[error("root {root} became non-finite at parameter value {param}")]
    NonFiniteState { param: f64, root: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
