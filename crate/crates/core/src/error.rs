use thiserror::Error;

/// Errors raised by the geometry engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("degenerate plane: |u ^ v|^2 = {wedge_sq:e} below tolerance {threshold:e}")]
    DegeneratePlane { wedge_sq: f64, threshold: f64 },

    #[error("point {coords:?} lies outside chart `{chart}`")]
    OutOfChart { chart: String, coords: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("frame construction failed: {check} residual {residual:e} exceeds {tolerance:e}")]
    FrameConstruction {
        check: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("map `{map}` provides jets up to order {available}, order {required} required")]
    Capability {
        map: String,
        available: usize,
        required: usize,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("empty sample grid")]
    EmptyGrid,

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
