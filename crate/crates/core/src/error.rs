use thiserror::Error;

#[derive(Debug, Error)]
pub enum MuskatError {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("interfaces too close for the quadrature: {0}")]
    Proximity(String),

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("solver failure: {message} (relative residual {residual:.3e}, condition estimate {condition:.3e})")]
    Solver {
        message: String,
        residual: f64,
        condition: f64,
    },

    #[error("operator size {nodes} exceeds the configured cap of {cap} nodes")]
    Size { nodes: usize, cap: usize },

    #[error("time step {dt:.3e} exceeds the stability bound {dt_max:.3e}")]
    Cfl { dt: f64, dt_max: f64 },

    #[error("operation requires model {expected}, got {found}")]
    ModelMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = MuskatError> = std::result::Result<T, E>;
