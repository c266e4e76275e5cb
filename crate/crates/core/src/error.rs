use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pochhammer product overflowed at factor {index}")]
    Overflow { index: u64 },

    #[error("hypergeometric series did not converge within {terms} terms")]
    NonConvergence { terms: usize },

    #[error("hypergeometric series diverges at x = 1 (c - a - b = {excess})")]
    Divergence { excess: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point ({re}, {im}) is not strictly inside the unit disk")]
    OutsideDisk { re: f64, im: f64 },

    #[error("boundary distance must be positive, got {0}")]
    DomainViolation(f64),

    #[error("finite-difference step {step} too large for boundary distance {distance}")]
    StepTooLarge { step: f64, distance: f64 },

    #[error("stencil of step {step} around ({re}, {im}) leaves the map's domain")]
    StencilOutOfDomain { re: f64, im: f64, step: f64 },

    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },

    #[error("invalid coefficient sequence: {0}")]
    InvalidCoefficients(String),

    #[error("{certificate} certificate failed at {violations} node(s)")]
    CertificateFailure {
        certificate: &'static str,
        violations: usize,
    },

    #[error("image point |f(z)| = {modulus} escapes the unit disk at ({re}, {im})")]
    RangeViolation { re: f64, im: f64, modulus: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
