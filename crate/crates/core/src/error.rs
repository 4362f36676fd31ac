use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("curve evaluated at negative time {0}")]
    NegativeTime(f64),

    /// The supremum (or deviation) is unbounded because the upper curve
    /// grows faster than the lower one.
    #[error("divergent bound: terminal slope {upper} exceeds {lower}")]
    Divergent { upper: f64, lower: f64 },

    #[error("stability violated: demand {demand} exceeds service rate {rate}")]
    Unstable { demand: f64, rate: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    /// No stable θ on the search grid. `closest_theta` is where the stability
    /// margin C - ρ(θ) - ρ_c(θ) was largest.
    #[error("infeasible: no stable theta found (closest theta {closest_theta:e}, margin {margin:e} b/s)")]
    Infeasible { closest_theta: f64, margin: f64 },

    #[error(
        "quadrature grid too coarse: estimated error {estimate:e} above tolerance {tolerance:e}"
    )]
    GridTooCoarse { estimate: f64, tolerance: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Reject NaN and values `<= 0`.
pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::param(
            name,
            format!("must be positive and finite, got {value}"),
        ))
    }
}
