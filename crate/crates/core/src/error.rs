use thiserror::Error;

/// Errors raised by the solver and its configuration layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A state variable left the region where the growth field is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid model or discretization parameter.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A field or quadrature evaluation produced a NaN or an infinity.
    #[error("non-finite value at t = {t}: {what}")]
    NonFinite { t: f64, what: String },

    /// The inflow hypothesis `G.nu > 0` failed where a Jacobian needs it.
    #[error("field is not inflowing at t = {t}, sigma = ({x}, {theta}): G.nu = {normal_speed}")]
    NotInflowing {
        t: f64,
        x: f64,
        theta: f64,
        normal_speed: f64,
    },

    /// Backward integration failed to locate a boundary crossing.
    #[error("entrance search failed: {0}")]
    EntranceSearch(String),

    /// The requested operation is not defined in the current discretization mode.
    #[error("unsupported in this mode: {0}")]
    Unsupported(String),

    /// A configuration file could not be interpreted.
    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
