use thiserror::Error;

/// Errors raised while building targets, envelopes and samplers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid support set: {0}")]
    InvalidSupportSet(String),

    /// A tail piece would have infinite area.
    #[error("improper proposal: {0}")]
    ImproperProposal(String),

    /// Two consecutive tangents are parallel but not identical.
    #[error("degenerate nodes {left} and {right}: parallel tangents never intersect")]
    DegenerateNodes { left: f64, right: f64 },

    #[error("{x} is outside the support [{lower}, {upper}]")]
    OutsideSupport { x: f64, lower: f64, upper: f64 },

    #[error("no proper initial support set after {attempts} draws")]
    Initialization { attempts: usize },

    #[error("diagnostic unavailable: {0}")]
    Unavailable(&'static str),

    #[error("quadrature did not converge on [{lower}, {upper}]")]
    Quadrature { lower: f64, upper: f64 },

    #[error("chord test failed at ({a}, {b}, {c}): log-density is not concave")]
    NotLogConcave { a: f64, b: f64, c: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
