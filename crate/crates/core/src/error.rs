use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input parameter lies outside its admissible domain.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("index out of range: {what} = {index}, valid range {lo}..={hi}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        lo: usize,
        hi: usize,
    },

    #[error("length mismatch: expected {expected}, got {actual} ({what})")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    /// The shifted operator `c0 I + cA A + sum cB_j B_j` could not be shown positive definite.
    #[error(
        "shifted operator is not positive definite: c0 = {c0}, cA = {c_a}, cB = {c_b:?}, eigenvalue lower bound = {bound}"
    )]
    NotPositiveDefinite {
        c0: f64,
        c_a: f64,
        c_b: Vec<f64>,
        bound: f64,
    },

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    IterationLimit { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by bad user input rather than a failing solve.
    pub fn is_parameter_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::IndexOutOfRange { .. } | Error::LengthMismatch { .. }
        )
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
