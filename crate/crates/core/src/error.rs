use thiserror::Error;

/// Errors produced anywhere in the reconstruction pipeline.
#[derive(Debug, Error)]
pub enum FoilError {
    #[error("structural error: {0}")]
    Structural(String),
    #[error("degenerate face {face}: area {area:e} below threshold")]
    DegenerateFace { face: usize, area: f64 },
    #[error("degenerate edge ({0}, {1}): endpoints coincide")]
    DegenerateEdge(usize, usize),
    #[error("insufficient input: {0}")]
    InsufficientInput(String),
    #[error("empty constraint set: {0}")]
    EmptyConstraint(String),
    #[error("invalid sphere spec: {0}")]
    InvalidSpec(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("time step {dt} violates CFL bound; maximum admissible dt is {max_dt} (omega_max = {omega_max})")]
    CflViolation { dt: f64, max_dt: f64, omega_max: f64 },
    #[error("numerical divergence at vertex {vertex}: non-finite force")]
    NumericalDivergence { vertex: usize },
    #[error("projection undefined: vertex {0} coincides with the sphere center")]
    ProjectionUndefined(usize),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl FoilError {
    /// Short machine-greppable category name.
    pub fn category(&self) -> &'static str {
        match self {
            FoilError::Structural(_) => "structural",
            FoilError::DegenerateFace { .. } => "degenerate-face",
            FoilError::DegenerateEdge(..) => "degenerate-edge",
            FoilError::InsufficientInput(_) => "insufficient-input",
            FoilError::EmptyConstraint(_) => "empty-constraint",
            FoilError::InvalidSpec(_) => "invalid-spec",
            FoilError::DegenerateInput(_) => "degenerate-input",
            FoilError::InvalidParameter(_) => "invalid-parameter",
            FoilError::LengthMismatch { .. } => "length-mismatch",
            FoilError::CflViolation { .. } => "cfl-violation",
            FoilError::NumericalDivergence { .. } => "numerical-divergence",
            FoilError::ProjectionUndefined(_) => "projection-undefined",
            FoilError::Parse { .. } => "parse",
            FoilError::Config(_) => "config",
            FoilError::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        FoilError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, FoilError>;
