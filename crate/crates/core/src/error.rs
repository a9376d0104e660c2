use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid couplings: {0}")]
    Couplings(String),

    #[error("angle precondition violated: {0}")]
    AnglePrecondition(String),

    #[error("eigensolver did not converge after {iterations} iterations (worst residual {worst_residual:.3e})")]
    NotConverged {
        iterations: usize,
        worst_residual: f64,
        residuals: Vec<f64>,
    },

    #[error("requested {requested} eigenpairs from a space of dimension {dim}")]
    TooManyEigenpairs { requested: usize, dim: usize },

    #[error("grid too coarse: energies at spacing h and h/2 differ by {difference:.3e} (limit {limit:.1e})")]
    GridTooCoarse { difference: f64, limit: f64 },

    #[error("manifold identification failed: {0}")]
    Manifold(String),

    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("singular interaction block: {0}")]
    SingularInteraction(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no crossing found: {0}")]
    NoCrossing(String),

    #[error("sweep point d = {d}: {source}")]
    SweepPoint {
        d: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
