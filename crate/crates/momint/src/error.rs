//! Crate-wide error type.
//!
//! Errors split into two kinds: [`ErrorKind::Validation`] for malformed
//! input (bad interval data, non-unitary matrices, mismatched grids) and
//! [`ErrorKind::Numerical`] for failures of a numerical procedure on valid
//! input (singular resolvent, eigensolver breakdown, ray budget).

use thiserror::Error;

/// Coarse classification, used by the CLI for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid interval union: {0}")]
    InvalidIntervalUnion(String),

    #[error("invalid translation set: {0}")]
    InvalidTranslationSet(String),

    #[error("invalid lambda set: {0}")]
    InvalidLambdaSet(String),

    #[error("matrix is not unitary: max |B*B - I| = {defect:.3e} exceeds {tol:.3e}")]
    NotUnitary { defect: f64, tol: f64 },

    #[error("invalid partial isometry: {0}")]
    InvalidPartialIsometry(String),

    #[error("operation requires a unitary boundary matrix")]
    UnitaryRequired,

    #[error("sampled functions live on different grids")]
    GridMismatch,

    #[error("boundary traces were not declared for this sampled function")]
    MissingTraces,

    #[error("eigenpair basis index {index} out of range (multiplicity {multiplicity})")]
    IndexOutOfRange { index: usize, multiplicity: usize },

    #[error(
        "window needs {nodes} grid nodes, over the budget of {budget}; \
         split into {hint} sub-windows and merge"
    )]
    WindowTooLarge {
        nodes: usize,
        budget: usize,
        hint: usize,
    },

    #[error(
        "tolerance {tol:.3e} is too coarse: must be below the per-step phase bound {bound:.3e}"
    )]
    DegenerateTolerance { tol: f64, bound: f64 },

    #[error("eigenphase solver failed at lambda = {lambda}: {detail}")]
    EigenSolver { lambda: f64, detail: String },

    #[error(
        "lambda = {lambda_re}+{lambda_im}i is too close to the spectrum: \
         smallest singular value of M(lambda)-I is {sigma_min:.3e}"
    )]
    SingularResolvent {
        lambda_re: f64,
        lambda_im: f64,
        sigma_min: f64,
    },

    #[error("window endpoint {lambda} lies on the spectrum (eigenphase {phase:.3e})")]
    EndpointOnSpectrum { lambda: f64, phase: f64 },

    #[error(
        "boundary trace vectors span only a {rank}-dimensional subspace of C^{n}; \
         either the window is too small or the lambda set is not a spectrum \
         (rank growth: {growth:?})"
    )]
    SpanDeficient {
        rank: usize,
        n: usize,
        growth: Vec<(usize, usize)>,
    },

    #[error("lambda = {lambda} violates the boundary relation: residual {residual:.3e}")]
    InconsistentLambda { lambda: f64, residual: f64 },

    #[error("constructed matrix is not unitary (trace Gram mismatch): defect {defect:.3e}")]
    NonUnitaryGram { defect: f64 },

    #[error(
        "ray tracing exceeded the state budget ({states} states); use the spectral propagator"
    )]
    RayBudgetExceeded { states: usize },

    #[error("negative evolution time {t} is only supported by the spectral propagator")]
    NegativeTime { t: f64 },

    #[error("point {x} lies on the boundary of the interval union; pointwise evolution is undefined there")]
    BoundaryPoint { x: f64 },

    #[error("point {x} lies outside the interval union")]
    OutsidePoint { x: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::EigenSolver { .. }
            | Error::SingularResolvent { .. }
            | Error::EndpointOnSpectrum { .. }
            | Error::SpanDeficient { .. }
            | Error::InconsistentLambda { .. }
            | Error::NonUnitaryGram { .. }
            | Error::RayBudgetExceeded { .. } => ErrorKind::Numerical,
            _ => ErrorKind::Validation,
        }
    }

    /// Module and operation provenance for machine-readable error reports.
    pub fn provenance(&self) -> (&'static str, &'static str) {
        match self {
            Error::InvalidIntervalUnion(_) => ("geometry", "interval_union"),
            Error::InvalidTranslationSet(_) => ("geometry", "translation_set"),
            Error::InvalidLambdaSet(_) => ("spectraset", "lambda_set"),
            Error::NotUnitary { .. } => ("boundary", "unitary"),
            Error::InvalidPartialIsometry(_) => ("boundary", "partial_isometry"),
            Error::UnitaryRequired => ("boundary", "mode_check"),
            Error::GridMismatch => ("funcspace", "inner_product"),
            Error::MissingTraces => ("funcspace", "traces"),
            Error::IndexOutOfRange { .. } => ("spectral", "eigenfunction"),
            Error::WindowTooLarge { .. } => ("spectral", "find_spectrum"),
            Error::DegenerateTolerance { .. } => ("spectral", "find_spectrum"),
            Error::EigenSolver { .. } => ("spectral", "eigenphases"),
            Error::SingularResolvent { .. } => ("spectral", "resolvent_apply"),
            Error::EndpointOnSpectrum { .. } => ("spectral", "count_spectrum"),
            Error::SpanDeficient { .. } => ("spectraset", "build_boundary_matrix"),
            Error::InconsistentLambda { .. } => ("spectraset", "build_boundary_matrix"),
            Error::NonUnitaryGram { .. } => ("spectraset", "build_boundary_matrix"),
            Error::RayBudgetExceeded { .. } => ("evolution", "evolve_ray"),
            Error::NegativeTime { .. } => ("evolution", "evolve_ray"),
            Error::BoundaryPoint { .. } => ("evolution", "evolve_ray"),
            Error::OutsidePoint { .. } => ("evolution", "evolve_ray"),
            Error::Config(_) => ("cli", "config"),
            Error::Io(_) => ("cli", "io"),
            Error::Json(_) => ("cli", "json"),
            Error::Csv(_) => ("cli", "csv"),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
