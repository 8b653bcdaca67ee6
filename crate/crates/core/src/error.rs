use alloc::string::String;
use alloc::vec::Vec;

use crate::domain::Violation;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("point (x = {x}, t = {t}) lies outside the closed rectangle")]
    OutOfDomain { x: f64, t: f64 },

    #[error("mode index must be >= 1, got {n}")]
    InvalidMode { n: usize },

    #[error("time derivative of order {order} is not available for this forcing")]
    UnsupportedDerivative { order: u8 },

    #[error("quadrature did not converge: best estimate {best}, error bound {error_bound}")]
    Quadrature { best: f64, error_bound: f64 },

    #[error("insufficient data: {found} usable coefficients, at least {required} needed")]
    InsufficientData { found: usize, required: usize },

    #[error("forcing rejected: {}", format_violations(.0))]
    RejectedForcing(Vec<Violation>),

    #[error("t = 0 lies on the seam; request side `plus` or `minus` explicitly")]
    AmbiguousSide,

    #[error("side {side} cannot be used at t = {t}")]
    SideMismatch { side: &'static str, t: f64 },

    #[error("step {step} exceeds the accuracy limit {limit}; use a step <= {limit}")]
    StepTooLarge { step: f64, limit: f64 },

    #[error(
        "the parabolic mode equation can only be marched from t = 0 towards t = -T; \
         forward marching amplifies errors like exp(lambda^2 t)"
    )]
    ForwardMarch,

    #[error("CFL violation: dt = {dt} exceeds dx = {dx}")]
    Cfl { dt: f64, dx: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

fn format_violations(v: &[Violation]) -> String {
    let mut out = String::new();
    for (i, violation) in v.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        out.push_str(violation.code.as_str());
        out.push_str(": ");
        out.push_str(&violation.message);
    }
    out
}

impl Error {
    /// True for failures of the numerics (quadrature, step limits, CFL)
    /// rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. }
                | Error::StepTooLarge { .. }
                | Error::Cfl { .. }
                | Error::Numerical(_)
                | Error::ForwardMarch
        )
    }
}
