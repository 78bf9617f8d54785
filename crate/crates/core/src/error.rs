use thiserror::Error;

/// Errors raised across the toolkit.
///
/// `Invalid*` variants describe bad input and map to CLI exit status 2;
/// everything else is a numerical failure (exit status 1).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("aliasing: degree {degree} cannot be resolved by {nodes} quadrature nodes")]
    Aliasing { degree: usize, nodes: usize },

    #[error("rank-deficient collocation system (smallest singular value {smallest:.3e}, largest {largest:.3e})")]
    RankDeficient { smallest: f64, largest: f64 },

    #[error("point {0:?} lies outside the outer domain")]
    OutsideDomain(Vec<f64>),

    #[error("mean curvature is not positive (min H = {min_h:.6e})")]
    NonPositiveCurvature { min_h: f64 },

    #[error("sigma = {sigma} lies within {margin:e} of the critical value s_{k} = {s_k}")]
    NearCritical {
        sigma: f64,
        k: usize,
        s_k: f64,
        margin: f64,
    },

    #[error("(k = {k}, N = {dim}, R = {radius}) violates the nondegeneracy condition")]
    Inadmissible { k: usize, dim: usize, radius: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual history {history:?})")]
    NoConvergence {
        iterations: usize,
        history: Vec<f64>,
    },
}

impl Error {
    pub(crate) fn param(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by the caller's input rather than by numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::InvalidGeometry(_)
                | Error::Aliasing { .. }
                | Error::OutsideDomain(_)
                | Error::NearCritical { .. }
                | Error::Inadmissible { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
