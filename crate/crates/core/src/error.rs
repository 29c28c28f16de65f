use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("matrix {matrix:?} is not hyperbolic (trace {trace})")]
    NotHyperbolic { matrix: [[i64; 2]; 2], trace: i64 },
    #[error("cone condition fails at x = ({x:.6}, {y:.6}): {reason}")]
    ConeViolation { x: f64, y: f64, reason: String },
    #[error("obstruction violated: {0}")]
    Obstruction(String),
    #[error("{what} did not converge (residual {residual:e})")]
    NoConvergence { what: String, residual: f64 },
    #[error("orbit budget of {budget} points exceeded at period {period}")]
    OrbitBudget { budget: usize, period: usize },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
