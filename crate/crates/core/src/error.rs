use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid must align with epsilon ladder: n_steps = {0} is not a power of two >= 2")]
    BadGridSize(usize),
    #[error("parameter out of range: {0}")]
    BadParameter(String),
    #[error("covariance matrix numerically non-positive-definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("mismatched grids: {0} vs {1} steps")]
    GridMismatch(usize, usize),
    #[error("epsilon {eps:.6e} is not an aligned multiple of the grid step {step:.6e}")]
    EpsNotAligned { eps: f64, step: f64 },
    #[error("{0}")]
    BadInput(String),
    #[error("unknown generator descriptor: {0}")]
    UnknownGenerator(String),
    #[error("quadrature did not converge within budget (best error {0:.3e})")]
    QuadratureBudget(f64),
    #[error("root finding failed: {0}")]
    RootFind(String),
    #[error("value {y:.6e} outside the reachable range of H(t, .): (H2) failure or quadrature budget limit")]
    OutsideRange { y: f64 },
    #[error("support decomposition: {0}")]
    Support(String),
    #[error("expression error: {0}")]
    Expr(String),
    #[error("solver: non-finite state at step {step} (t = {t:.6})")]
    NonFiniteState { step: usize, t: f64 },
    #[error("solution left its support component at step {step} (x = {x:.6e}); refine the grid")]
    LeftComponent { step: usize, x: f64 },
    #[error("initial condition on the numerical boundary of the support (|sigma(0, eta)| = {0:.3e}); ill-posed")]
    BoundaryEta(f64),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Format(String),
}
