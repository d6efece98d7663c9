//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while validating parameters, integrating,
/// enumerating rasters, or reading/writing files.
#[derive(Debug, Error)]
pub enum Error {
    #[error("capacitance of neuron {neuron} must be strictly positive (got {value})")]
    NonPositiveCapacitance { neuron: usize, value: f64 },

    #[error("{field} must be strictly positive (got {value})")]
    NonPositiveSigma { field: &'static str, value: f64 },

    #[error("refractory period must lie in [0, 1) (got {value})")]
    RefractoryOutOfRange { value: f64 },

    #[error("max_conductance[{post}][{pre}] must be nonnegative (got {value})")]
    NegativeConductance { post: usize, pre: usize, value: f64 },

    #[error("invalid parameter {field}: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("series for {what} did not converge after {terms} terms")]
    SeriesDivergence { what: &'static str, terms: usize },

    #[error(
        "horizon {horizon} too shallow: dropped-tail bound {tail:.3e} exceeds tolerance {tol:.3e}"
    )]
    HorizonTooShallow { horizon: u32, tail: f64, tol: f64 },

    #[error("quadrature did not converge to relative tolerance {rel_tol:.3e} after {levels} refinements")]
    QuadratureNonConvergence { rel_tol: f64, levels: u32 },

    #[error("enumeration of {count} configurations exceeds the guard of {guard}")]
    EnumerationTooLarge { count: u128, guard: u128 },

    #[error("malformed raster header: {0}")]
    MalformedHeader(String),

    #[error("bad bit character at line {line}, column {col} (expected '0' or '1')")]
    BadBitChar { line: usize, col: usize },

    #[error("window mismatch: header declares {expected} rows, file has {got}")]
    WindowMismatch { expected: usize, got: usize },

    #[error("raster file format cannot represent a periodic past convention")]
    UnsupportedPast,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
