use thiserror::Error;

/// Unified error type for the simulator core.
///
/// Every fallible operation returns one of these variants; none of them is
/// recoverable by retrying with the same inputs, so callers normally map
/// them straight to diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input that must be a finite number was NaN or infinite.
    #[error("non-finite input for {what}")]
    NonFinite { what: &'static str },

    /// A physical parameter violated its domain (sign, range, emptiness).
    #[error("invalid {what}: {why}")]
    InvalidParameter { what: &'static str, why: String },

    /// Cavity geometry outside the stability region: the Gouy factor
    /// (1 - D/R1)(1 - D/R2) fell outside [0, 1].
    #[error("unstable cavity geometry: (1 - D/R1)(1 - D/R2) = {g_product} is outside [0, 1]")]
    UnstableGeometry { g_product: f64 },

    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error(
        "radial quadrature did not converge on [{lower}, {upper}]: \
         estimated error {error_estimate} after {intervals} intervals"
    )]
    QuadratureNonConvergence {
        lower: f64,
        upper: f64,
        error_estimate: f64,
        intervals: usize,
    },

    /// A mode index exceeded the configured truncation and the policy
    /// demands failure instead of a warning.
    #[error("mode (p={p}, l={l}) exceeds truncation bounds p_max={p_max}, l_max={l_max}")]
    TruncationExceeded { p: u32, l: i32, p_max: u32, l_max: u32 },

    /// Two spectra that must share a wavelength did not.
    #[error("wavelength mismatch: {a} m vs {b} m")]
    WavelengthMismatch { a: f64, b: f64 },

    /// A circulator was entered through a port with no defined output.
    #[error("circulator has no route from port {port}")]
    NoRoute { port: u8 },

    /// An objective evaluated to a non-finite value during optimization.
    #[error("objective is non-finite at {param} = {value}")]
    NonFiniteObjective { param: &'static str, value: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(what: &'static str, why: impl Into<String>) -> Self {
        Error::InvalidParameter { what, why: why.into() }
    }
}

/// Attached to results whose power bookkeeping lost more than the
/// configured threshold to basis truncation. Warnings are data, not
/// errors: the spectrum is still returned and the caller decides whether
/// the loss matters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationWarning {
    /// Power lost to the truncated basis, as a fraction of input power.
    pub loss: f64,
    /// Threshold that was exceeded.
    pub threshold: f64,
}

impl std::fmt::Display for TruncationWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "truncation loss {:.3e} exceeds threshold {:.3e}",
            self.loss, self.threshold
        )
    }
}
