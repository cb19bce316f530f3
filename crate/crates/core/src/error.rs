use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quadrature on [{a}, {b}] did not converge within {subdivisions} subdivisions (error estimate {error:e})")]
    NonConvergence {
        a: f64,
        b: f64,
        subdivisions: usize,
        error: f64,
    },

    #[error("no sign change on [{lo}, {hi}] (f(lo) = {f_lo:e}, f(hi) = {f_hi:e})")]
    NoBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("value {y} lies outside the range [{f_lo}, {f_hi}] of the function")]
    OutOfRange { y: f64, f_lo: f64, f_hi: f64 },

    #[error("order {k} is not supported (maximum {max})")]
    UnsupportedOrder { k: u32, max: u32 },

    #[error("Stein kernel of order {k} is singular at x = {x}")]
    KernelSingularity { k: u32, x: f64 },

    #[error("shooting parameter must be positive, got {x1}")]
    InvalidStart { x1: f64 },

    #[error("{family} recursion requires an even number of worlds, got N = {n}")]
    ParityUnsupported { family: String, n: usize },

    #[error("no sign change of the matching condition for N = {n} with x1 in (0, {upper}]")]
    BracketFailure { n: usize, upper: f64 },

    #[error("solved configuration rejected: {0}")]
    ResidualFailure(String),

    #[error("points are not strictly decreasing at index {index}")]
    NotDecreasing { index: usize },

    #[error("baseline vanishes at point {index} (x = {x})")]
    BaselineZero { index: usize, x: f64 },

    #[error("atoms are not symmetric about zero (defect {defect:e})")]
    AsymmetricInput { defect: f64 },

    #[error("density breakpoints do not match the atoms")]
    MismatchedBreakpoints,

    #[error("atom {index} sits at zero, 1/W is undefined")]
    AtomAtZero { index: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to rejected inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::NoBracket { .. }
                | Error::BracketFailure { .. }
                | Error::ResidualFailure(_)
                | Error::KernelSingularity { .. }
                | Error::BaselineZero { .. }
                | Error::AtomAtZero { .. }
        )
    }
}
