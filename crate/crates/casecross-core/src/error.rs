use core::fmt;

/// Crate-wide result alias.
pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Validation and evaluation failures.
///
/// Invalid inputs are rejected before any simulation or summation starts;
/// degenerate *estimates* (zero denominators in ratio estimators) are not
/// errors and are reported as undefined results instead.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A probability parameter fell outside `[0, 1]`.
    InvalidProbability { name: &'static str, value: f64 },
    /// A hazard, possibly after applying the hazard ratio, exceeded 1.
    HazardOutOfRange { name: &'static str, value: f64 },
    /// Horizon must allow at least one case time with one prior control time.
    HorizonTooShort { horizon: u32 },
    /// Exhaustive enumeration is only supported for short horizons.
    HorizonTooLong { horizon: u32, max: u32 },
    /// Block length must be at least 1 and treatment probabilities must be
    /// constant within a shared-draw block.
    InvalidBlock { what: &'static str },
    /// Per-step parameter sequence does not match the horizon.
    LengthMismatch { name: &'static str, expected: usize, actual: usize },
    /// Sampling plan offsets must be nonempty, strictly increasing, and
    /// within the lookback window.
    InvalidOffsets,
    /// Case-sampling fraction must lie in `(0, 1]`.
    InvalidCaseFraction { value: f64 },
    /// The lookback window leaves no eligible case time.
    LookbackExcludesAllCases { lookback: u32, horizon: u32 },
    /// Exhaustive enumeration would exceed the configured budget.
    EnumerationBudget { required: u64, budget: u64 },
    /// The requested estimand is not defined (e.g. zero survivor mass).
    UndefinedEstimand { detail: &'static str },
    /// The operation does not support this process variant.
    UnsupportedSpec { operation: &'static str, detail: &'static str },
    /// Subject count must be at least 1.
    EmptyCohortRequest,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidProbability { name, value } => {
                write!(f, "probability `{name}` = {value} is outside [0, 1]")
            }
            Error::HazardOutOfRange { name, value } => {
                write!(f, "hazard `{name}` = {value} is outside [0, 1]")
            }
            Error::HorizonTooShort { horizon } => {
                write!(f, "horizon {horizon} is too short: need at least 2 time steps")
            }
            Error::HorizonTooLong { horizon, max } => {
                write!(f, "horizon {horizon} exceeds the enumeration limit of {max} steps")
            }
            Error::InvalidBlock { what } => write!(f, "invalid block structure: {what}"),
            Error::LengthMismatch { name, expected, actual } => {
                write!(f, "`{name}` has length {actual}, expected {expected}")
            }
            Error::InvalidOffsets => write!(
                f,
                "control offsets must be nonempty, strictly increasing, and within 1..=lookback"
            ),
            Error::InvalidCaseFraction { value } => {
                write!(f, "case fraction {value} is outside (0, 1]")
            }
            Error::LookbackExcludesAllCases { lookback, horizon } => write!(
                f,
                "lookback {lookback} leaves no eligible case time in a horizon of {horizon} steps"
            ),
            Error::EnumerationBudget { required, budget } => write!(
                f,
                "enumeration needs {required} joint configurations, over the budget of {budget}; \
                 shrink the horizon or raise the budget"
            ),
            Error::UndefinedEstimand { detail } => write!(f, "estimand undefined: {detail}"),
            Error::UnsupportedSpec { operation, detail } => {
                write!(f, "`{operation}` does not support this process: {detail}")
            }
            Error::EmptyCohortRequest => write!(f, "cohort size must be at least 1"),
        }
    }
}

impl core::error::Error for Error {}
