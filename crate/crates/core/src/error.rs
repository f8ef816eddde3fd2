use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The input distribution lacks the finite mean/variance the operation needs.
    #[error("moment restriction: {0}")]
    MomentRestriction(String),
    /// An iterative solver exhausted its budget.
    #[error("no convergence after {iterations} iterations: {what}")]
    NonConvergence { what: String, iterations: usize },
    /// A forward transform produced a non-finite value.
    #[error("infinite result: {0}")]
    Overflow(String),
    /// Input data without enough variation or points.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// Points of a back transform that have no real inverse, as (index, value).
    #[error("{} point(s) outside the principal-branch domain", .0.len())]
    Inadmissible(Vec<(usize, f64)>),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
}
