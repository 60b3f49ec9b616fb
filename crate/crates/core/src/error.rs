use thiserror::Error;

/// Failures raised by the numerical layers and the configuration frontend.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("form matrix is not skew-Hermitian (defect {defect:.3e})")]
    NotSkewHermitian { defect: f64 },
    #[error("form matrix is degenerate (singular value ratio {ratio:.3e})")]
    Degenerate { ratio: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("subspace is not Lagrangian")]
    NotLagrangian,
    #[error("splitting is unbalanced: dim H+ = {plus}, dim H- = {minus}")]
    UnbalancedSplitting { plus: usize, minus: usize },
    #[error("eigenvalue {eigenvalue} lies on the region boundary")]
    SpectrumOnBoundary { eigenvalue: f64 },
    #[error("coordinate {coord} lies within the margin of the window edge {delta}")]
    CoordOnWindowBoundary { coord: f64, delta: f64 },
    #[error("family unresolved on [{s_left}, {s_right}] after maximal bisection depth")]
    UnresolvedFamily { s_left: f64, s_right: f64 },
    #[error("matrix at s = {s} is not Hermitian (defect {defect:.3e})")]
    NotHermitian { s: f64, defect: f64 },
    #[error("matrix at s = {s} is not unitary (defect {defect:.3e})")]
    NotUnitary { s: f64, defect: f64 },
    #[error("real frame is not Lagrangian")]
    NotLagrangianReal,
    #[error("real form must satisfy J^2 = -I and J^T = -J")]
    InvalidComplexStructure,
    #[error("generator fails unitarity (defect {defect:.3e})")]
    NonUnitaryGenerator { defect: f64 },
    #[error("metric is not Hermitian positive definite")]
    BadMetric,
    #[error("coefficient j is singular at t = {t}")]
    SingularJ { t: f64 },
    #[error("coefficient p is singular at t = {t}")]
    SingularP { t: f64 },
    #[error("eigenvalue near the window edge {lambda}")]
    WindowBoundaryEigenvalue { lambda: f64 },
    #[error("eigenvalues cluster near {lambda}; refine the grid")]
    RootCluster { lambda: f64 },
    #[error("trial count must be at least 1")]
    InvalidTrials,
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for configuration, schema and file errors.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. } | Error::UnknownIdentifier { .. } | Error::Config(_) | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
