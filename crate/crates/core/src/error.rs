use thiserror::Error;

/// Errors raised across the library. Variants carry enough context for the
/// CLI to name the offending quantity.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("{what} is not {structure} (relative asymmetry {asymmetry:.3e})")]
    Asymmetric {
        what: &'static str,
        structure: &'static str,
        asymmetry: f64,
    },

    #[error("partition does not cover {n_modes} modes exactly once")]
    BadPartition { n_modes: usize },

    #[error("exponent has imaginary part {0:.3e}; the form is corrupted")]
    NonRealExponent(f64),

    #[error("quadratic form is not negative definite (largest eigenvalue {max_eigenvalue:.3e})")]
    NotIntegrable { max_eigenvalue: f64 },

    #[error("matrix is singular (pivot {pivot:.3e} below threshold {threshold:.3e})")]
    Singular { pivot: f64, threshold: f64 },

    #[error("ill-conditioned {what} (condition {condition:.3e}, relative determinant {relative_det:.3e})")]
    IllConditioned { what: &'static str, condition: f64, relative_det: f64 },

    #[error("{0} outside its domain")]
    DomainError(&'static str),

    #[error("quadratic blocks differ across probe records by {deviation:.3e}")]
    QuadraticInconsistency { deviation: f64 },

    #[error("{what} and its conjugate partner disagree by {deviation:.3e}")]
    ConjugateMismatch { what: &'static str, deviation: f64 },

    #[error("probe amplitudes are not the default set (deviation {deviation:.3e})")]
    WrongProbeSet { deviation: f64 },

    #[error("{needed} probes required, got {got}")]
    InsufficientProbes { needed: usize, got: usize },

    #[error("duplicate probe amplitude at positions {0} and {1}")]
    DuplicateProbe(usize, usize),

    #[error("cutoff {cutoff} too small: discarded tail {tail:.3e}")]
    CutoffTooSmall { cutoff: usize, tail: f64 },

    #[error("zero weight at Fock level {0}")]
    ZeroWeight(usize),

    #[error("T^-1 amplification {amplification:.3e} pushes error bound {bound:.3e} over tolerance {tolerance:.3e}")]
    AmplificationOverflow { amplification: f64, bound: f64, tolerance: f64 },

    #[error("no Fock-space model for channel '{0}'")]
    NoOracle(String),
}

pub type Result<T> = std::result::Result<T, Error>;
