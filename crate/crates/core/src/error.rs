use thiserror::Error;

/// Failures raised by the semiclassical and exact propagators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("position {x} lies outside the {region} region")]
    OutOfRegion { x: f64, region: &'static str },

    #[error("propagation time {0} is below the minimum 1e-9")]
    DegenerateTime(f64),

    #[error("no real momentum above the critical value connects q={q} to x={x} in T={t}")]
    NoTrajectory { q: f64, x: f64, t: f64 },

    #[error("focal point: |S_if| = {s_if:e} is below the divergence guard")]
    FocalPoint { s_if: f64 },

    #[error("trajectory comes to rest at the barrier edge for x={x}")]
    Stalled { x: f64 },

    #[error("momentum {p} must exceed the critical momentum {p_crit}")]
    SubcriticalMomentum { p: f64, p_crit: f64 },

    #[error("norm drifted by {drift:e} during split-step propagation")]
    NormDrift { drift: f64 },

    #[error("transmitted density never exceeds {threshold:e} at x={x} up to T={t_limit}")]
    NegligibleTransmission { x: f64, threshold: f64, t_limit: f64 },
}

impl Error {
    /// Short stable identifier, suitable for status columns.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::OutOfRegion { .. } => "out_of_region",
            Error::DegenerateTime(_) => "degenerate_time",
            Error::NoTrajectory { .. } => "no_trajectory",
            Error::FocalPoint { .. } => "focal_point",
            Error::Stalled { .. } => "stalled",
            Error::SubcriticalMomentum { .. } => "subcritical_momentum",
            Error::NormDrift { .. } => "norm_drift",
            Error::NegligibleTransmission { .. } => "negligible_transmission",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
