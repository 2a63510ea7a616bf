use alloc::string::String;
use core::fmt;

/// Failure modes shared by every computation in the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The Weierstrass model or conductor data is inconsistent.
    Model(String),
    /// A selector, curve or policy violates a precondition.
    Config(String),
    /// An argument lies outside the domain of a function (pole, empty family, ...).
    Domain(String),
    /// A table is too short for the requested computation.
    Capacity { needed: u64, available: u64 },
    /// A numerical contract was violated at runtime (odd sign, negative value, ...).
    Contract(String),
    /// Zeros and nonzeros are not separated by the required gap.
    Classification {
        /// Largest member of the zero cluster (0 if the cluster was empty).
        zero_d: i64,
        /// Smallest value classified as nonzero.
        nonzero_d: i64,
        ratio: f64,
        required: f64,
    },
    /// A truncated prime sum or product did not stabilize.
    Truncation { cutoff: u64, delta: f64, tolerance: f64 },
    /// The λ = -1 class has no vanishings, so the ratio is undefined.
    UndefinedRatio { plus: u64, minus: u64 },
    /// Internal bookkeeping mismatch; indicates a bug.
    Internal(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Model(m) => write!(f, "curve model error: {m}"),
            Error::Config(m) => write!(f, "configuration error: {m}"),
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Capacity { needed, available } => {
                write!(f, "capacity error: need {needed} coefficients, have {available}")
            }
            Error::Contract(m) => write!(f, "numerical contract violated: {m}"),
            Error::Classification {
                zero_d,
                nonzero_d,
                ratio,
                required,
            } => write!(
                f,
                "vanishing gap too small: ratio {ratio:.3e} < {required:.1e} between d={zero_d} (zero) and d={nonzero_d} (nonzero)"
            ),
            Error::Truncation {
                cutoff,
                delta,
                tolerance,
            } => write!(
                f,
                "prime sum unstable at cutoff {cutoff}: delta {delta:.3e} exceeds {tolerance:.1e}"
            ),
            Error::UndefinedRatio { plus, minus } => {
                write!(f, "undefined ratio: {plus} vanishings with λ=+1, {minus} with λ=-1")
            }
            Error::Internal(m) => write!(f, "internal consistency error: {m}"),
        }
    }
}

impl core::error::Error for Error {}
