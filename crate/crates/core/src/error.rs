use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at offset {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("discontinuity at t = {at}: adjacent pieces differ by {mismatch:e}")]
    Discontinuous { at: f64, mismatch: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("Gamma has a pole at {0}")]
    GammaPole(f64),

    #[error("not representable as a shifted-power sum: {0}")]
    NotRepresentable(String),

    #[error("derivative singularity (x - {at})^{exponent} is not integrable")]
    NonIntegrable { at: f64, exponent: f64 },

    #[error("finite-difference stencil [{from}, {to}] collides with breakpoint {breakpoint}")]
    StencilCollision { from: f64, to: f64, breakpoint: f64 },

    #[error("one-sided limits at t = {at} differ: left {left}, right {right}")]
    TwoSidedMismatch { at: f64, left: f64, right: f64 },

    #[error("inner function is not monotone on [{lo}, {hi}]")]
    NonMonotone { lo: f64, hi: f64 },
}

impl Error {
    /// True for errors raised while reading a function definition.
    pub fn is_parse_error(&self) -> bool {
        matches!(self, Error::Syntax { .. } | Error::Discontinuous { .. })
    }

    pub fn is_domain_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::GammaPole(_) | Error::NonMonotone { .. }
        )
    }
}
