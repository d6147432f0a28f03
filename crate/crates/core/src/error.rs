use thiserror::Error;

/// Errors raised by the pricing library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// The bubble amplitude sits on the pole of the potential at `f0 = sigma`.
    #[error("singular bubble: f0 = {f0} is within the pole guard of sigma = {sigma}")]
    SingularBubble { f0: f64, sigma: f64 },

    #[error("time to maturity {tau} outside [0, {maturity}]")]
    OutOfHorizon { tau: f64, maturity: f64 },

    /// The dual coupling `sigma / f0` is infinite.
    #[error("zero bubble amplitude has no high-energy dual")]
    ZeroBubble,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("derivative order {order} exceeds the configured maximum {max}")]
    OrderTooHigh { order: usize, max: usize },

    #[error("integer overflow building coefficient row {row}")]
    Overflow { row: usize },

    #[error("argument {x} outside the supported range |x| <= {limit}")]
    Range { x: f64, limit: f64 },

    #[error("grid too coarse: {n_s} price nodes x {n_tau} time steps (minimum 50 x 50)")]
    GridTooCoarse { n_s: usize, n_tau: usize },

    /// The potential is too strong for the requested time step.
    #[error("stiff regime: |rate jump| * dtau = {ratio:.3} exceeds 0.5")]
    StiffRegime { ratio: f64 },

    #[error("point (S = {s}, tau = {tau}) outside the solved grid")]
    OutOfGrid { s: f64, tau: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    /// Whether this error is a numerical guard (pole or stiffness) rather than bad input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(self, Error::SingularBubble { .. } | Error::StiffRegime { .. })
    }
}
