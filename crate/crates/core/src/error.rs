use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A physical parameter or state violates its invariants.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} = {value} is outside the domain of the function")]
    Domain { what: &'static str, value: f64 },

    /// A time lies outside the range covered by the kernel cache.
    #[error("time {t} is outside the cached range [-{t_max}, {t_max}]")]
    OutOfRange { t: f64, t_max: f64 },

    /// Two-time quantities are only defined here for `t1 >= t2 >= 0`.
    #[error("time ordering violated: need t1 >= t2 >= 0, got t1 = {t1}, t2 = {t2}")]
    Ordering { t1: f64, t2: f64 },

    #[error(
        "quadrature did not converge at t = {t}: estimate {estimate:e}, error {error:e} after {intervals} intervals"
    )]
    Quadrature {
        t: f64,
        estimate: f64,
        error: f64,
        intervals: usize,
    },

    /// Operator passed to a routine that requires a specific structure.
    #[error("operator contract violated: {0}")]
    Contract(String),

    #[error("invalid time grid: {0}")]
    Grid(String),

    #[error("cannot parse operator `{input}`: {reason}")]
    Parse { input: String, reason: String },
}

impl Error {
    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Quadrature { .. })
    }
}
