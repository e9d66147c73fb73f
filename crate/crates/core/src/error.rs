//! Error type shared by all modules.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, DnlsError>;

/// Failure modes surfaced by the solver and harness.
#[derive(Debug, Error)]
pub enum DnlsError {
    /// Grid construction rejected the requested dimensions.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A routine received fields on mismatched grids.
    #[error("grid mismatch: expected {expected} samples, got {got}")]
    GridMismatch { expected: usize, got: usize },

    /// Parameter validation failed (step sizes, spectral parameters, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The time integrator produced a non-finite sample.
    #[error("non-finite field value at t = {t}")]
    NonFinite { t: f64 },

    /// Closed-form exponentials would overflow for this grid and eigenvalue.
    #[error("exponent range too large: eta * L/2 = {0:.1} exceeds the double-precision budget")]
    ExponentOverflow(f64),

    /// The secant iteration for the eigenvalue stalled on a flat function.
    #[error("eigenvalue search stalled: the shooting determinant is locally constant")]
    SecantStalled,

    /// The secant iteration exhausted its iteration budget.
    #[error("eigenvalue search did not converge within {iterations} iterations (last |E| = {last_abs:.3e})")]
    SecantBudget { iterations: usize, last_abs: f64 },

    /// The Volterra fixed-point iteration is not contracting.
    #[error("Jost iteration not contracting: successive-difference ratio {0:.3}")]
    NotContracting(f64),

    /// The Volterra fixed-point iteration exhausted its iteration budget.
    #[error("Jost iteration did not reach tol = {tol:.1e} within {iterations} iterations")]
    IterationBudget { iterations: usize, tol: f64 },

    /// An evolved Jost solution stopped satisfying its spatial equation.
    #[error("Jost solution desynchronized from the field: x-residual {residual:.3e} exceeds {threshold:.3e}")]
    Desync { residual: f64, threshold: f64 },

    /// An evolved Jost solution drifted off its boundary normalization.
    #[error("Jost boundary drift {error:.3e} exceeds {threshold:.3e}")]
    BoundaryDrift { error: f64, threshold: f64 },

    /// A matched linear-combination coefficient vanished exactly.
    #[error("coefficient c{index} is exactly zero; its logarithm is undefined")]
    ZeroCoefficient { index: usize },

    /// An eigenvector or seed vector vanished at some grid point.
    #[error("eigenvector vanishes at grid index {0}")]
    ZeroVector(usize),

    /// A conserved-quantity integrand kept a non-negligible imaginary part.
    #[error("conserved-quantity integrand has imaginary part {0:.3e}")]
    ComplexResidue(f64),

    /// The inhomogeneous right-hand side overlaps the cokernel direction.
    #[error("right-hand side is not solvable: relative cokernel projection {0:.3e}")]
    Solvability(f64),

    /// A sub-module failure, annotated with the pipeline stage it occurred in.
    #[error("pipeline stage '{stage}': {source}")]
    Pipeline {
        stage: String,
        #[source]
        source: Box<DnlsError>,
    },

    /// A hard invariant of the experiment pipeline failed.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// The sweep received no workable perturbation sizes.
    #[error("sweep produced no successful runs: {0}")]
    EmptySweep(String),

    /// Configuration file syntax or schema error.
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    /// Field-file syntax error.
    #[error("field file error: {0}")]
    FieldFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
