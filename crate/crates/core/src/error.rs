use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("gamma function has a pole at {0}")]
    GammaPole(f64),

    #[error("{what} overflows the f64 exponent range at argument {arg}")]
    Overflow { what: &'static str, arg: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "adaptive quadrature did not converge after {subdivisions} subdivisions \
         (estimate {estimate:e}, error bound {error:e})"
    )]
    QuadratureNonConvergence {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("DFT kernel grid did not stabilise up to M = {grid} (last change {change:e})")]
    AliasingNonConvergence { grid: usize, change: f64 },

    #[error("kernel symmetry violated at displacement {displacement:?} by {deviation:e}")]
    SymmetryViolation { displacement: Vec<i64>, deviation: f64 },

    #[error("site set too large: {sites} sites (limit {limit})")]
    TooManySites { sites: u128, limit: u128 },

    #[error("kernel radius {radius} is smaller than the required {required}")]
    InsufficientKernelRadius { radius: usize, required: usize },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("symmetric eigensolver did not converge for a {n}x{n} matrix")]
    EigenNonConvergence { n: usize },

    #[error("Temple precondition violated: <psi,A psi> = {rayleigh} is not below E1 = {e1}")]
    TemplePrecondition { rayleigh: f64, e1: f64 },

    #[error("only {usable} usable points for the exponent fit (need at least 4); N(E) values: {values:?}")]
    TooFewPoints { usable: usize, values: Vec<(f64, f64)> },

    #[error("least-squares fit has degenerate abscissae")]
    DegenerateAbscissae,

    #[error("kernel cache line {line}: {reason}")]
    CacheFormat { line: usize, reason: String },

    #[error("unsupported kernel cache version: {0:?}")]
    UnsupportedVersion(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
