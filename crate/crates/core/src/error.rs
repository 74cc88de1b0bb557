use thiserror::Error;

/// Errors raised by the spectral solvers.
///
/// Variants fall into two families: invalid input (`Invalid*`, `Dimension*`)
/// and numerical failure of an otherwise well-posed problem. [`Error::is_validation`]
/// tells them apart so front ends can map them to distinct exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid boundary conditions: {0}")]
    InvalidConditions(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular scattering denominator at k = {re}{im:+}i")]
    SingularScattering { re: f64, im: f64 },

    #[error("root refinement did not converge in [{lo}, {hi}]")]
    RefinementFailed { lo: f64, hi: f64 },

    #[error("winding number {value} is not an integer within tolerance near k = {at}")]
    NonIntegerWinding { value: f64, at: f64 },

    #[error("root residual {residual:e} exceeds tolerance {tol:e} at k = {at}")]
    ResidualTooLarge { at: f64, residual: f64, tol: f64 },

    #[error("zero pivot in LDL^T factorization at column {0}")]
    ZeroPivot(usize),

    #[error("eigensolver did not converge: {0}")]
    EigenNoConvergence(String),

    #[error("bethe solver failed: {0}")]
    BetheFailure(String),

    #[error("extrapolation failed: {0}")]
    Extrapolation(String),

    #[error("chemical potential solve failed: {0}")]
    ChemicalPotential(String),

    #[error("fixed point did not converge after {iterations} iterations (last change {last_change:e}, oscillating: {oscillating})")]
    FixedPoint {
        iterations: usize,
        last_change: f64,
        oscillating: bool,
    },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("{0}")]
    Precondition(String),
}

impl Error {
    /// True when the error comes from rejected input rather than a solver breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidGraph(_)
                | Error::InvalidConditions(_)
                | Error::InvalidParameter { .. }
                | Error::DimensionMismatch(_)
                | Error::Precondition(_)
        )
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
