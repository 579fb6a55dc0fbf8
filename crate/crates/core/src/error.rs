use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("path is not nondecreasing near t = {t}")]
    NotMonotone { t: f64 },
    #[error("evaluation at t = {t} outside domain [0, {t_max}] and no extrapolation")]
    OutOfDomain { t: f64, t_max: f64 },
    #[error("path is bounded; generalized inverse is not finite everywhere")]
    Bounded,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("level sets of ell_{i} and ell_{j} share the level {level}")]
    CommonConstancy { i: usize, j: usize, level: f64 },
    #[error("time changes could not be balanced: {0}")]
    Balance(String),
    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    Quadrature { tol: f64, estimate: f64 },
    #[error("horizon too short: truncation bias {bias:e} exceeds a third of the standard error {se:e}")]
    Horizon { bias: f64, se: f64 },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
