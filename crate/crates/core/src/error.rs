use thiserror::Error;

use crate::lattice::Site;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid neighborhood template: {0}")]
    InvalidTemplate(String),

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A model reported a total jump rate above its declared bound.
    #[error(
        "rate-bound violation in model `{model}` at site {site}: rate {rate} exceeds c_max {c_max}"
    )]
    RateBoundViolation {
        model: String,
        site: Site,
        rate: f64,
        c_max: f64,
    },

    #[error("site {0} is not materialized")]
    Unmaterialized(Site),

    /// Reverse reachability reached a site outside the materialized stream region.
    #[error("influence cluster of {center} escaped the materialized region at {site}")]
    ClusterEscape { center: Site, site: Site },

    #[error("state space too large: more than {cap} states")]
    StateSpaceTooLarge { cap: usize },

    #[error("truncation breached: {0}")]
    TruncationBreach(String),

    #[error("invalid initial condition: {0}")]
    InvalidInitialCondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("model geometry: {0}")]
    Geometry(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
