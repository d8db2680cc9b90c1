use thiserror::Error;

/// Errors produced by the library.
///
/// The CLI maps `Domain`/`Parse`/`Degenerate`/`Inadmissible` to exit code 2
/// and the numerical failures to exit code 3.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid specification `{input}`: {reason}")]
    Parse { input: String, reason: String },

    /// r'(x_lo) <= r'(x_hi): greedy is optimal at every capacity.
    #[error("greedy policy is optimal for all capacities: r'(x_lo) = {r_lo} <= r'(x_hi) = {r_hi}")]
    Degenerate { r_lo: f64, r_hi: f64 },

    #[error("quadrature failed on [{a}, {b}]: error estimate {estimate:e} after {subdivisions} subdivisions")]
    Quadrature {
        a: f64,
        b: f64,
        estimate: f64,
        subdivisions: usize,
    },

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("inadmissible action at slot {slot}: g = {g} with battery b = {b}")]
    Inadmissible { slot: u64, b: f64, g: f64 },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(input: &str, reason: impl Into<String>) -> Self {
        Error::Parse {
            input: input.to_string(),
            reason: reason.into(),
        }
    }

    /// True for failures of an iterative or adaptive numerical method.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Quadrature { .. } | Error::NonConvergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
