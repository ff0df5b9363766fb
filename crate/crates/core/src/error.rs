use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-elliptic isotropic parameters (lambda = {lambda}, mu = {mu})")]
    NonElliptic { lambda: f64, mu: f64 },

    #[error("phase {id} is not coercive (alpha = {alpha:e}); enable the soft-phase flag to accept it")]
    NonCoercivePhase { id: u32, alpha: f64 },

    #[error("singular stationarity system in plane-stress reduction")]
    SingularReduction,

    #[error("unknown phase id {0}")]
    UnknownPhase(u32),

    #[error("unrepresentable volume fraction: {0}")]
    UnrepresentableFraction(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("operator is not positive definite on the search space (p^T A p = {0:e})")]
    Indefinite(f64),

    #[error("solver did not converge: relative residual {residual:e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },

    #[error("window for patch {patch} collides with the patch interface")]
    WindowCollision { patch: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
