//! Error type shared across the crate.

use crate::validate::ValidationReport;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A validated input failed one or more structural checks.
    Invalid {
        /// What was being validated ("density matrix", "event slot", ...).
        subject: &'static str,
        report: ValidationReport,
    },
    /// Operands disagree in dimension.
    DimensionMismatch { expected: usize, found: usize },
    /// A selector entry points past the outcome count of its slot.
    OutcomeOutOfRange {
        slot: usize,
        outcome: usize,
        count: usize,
    },
    /// A selector is longer than the family it addresses.
    SelectorTooLong { len: usize, slots: usize },
    /// A selector entry is `Erased` where a chosen outcome is required.
    ErasedOutcome { slot: usize },
    /// The referenced slot is not an intact branch of the realized chain.
    NotErasable { slot: usize },
    /// A branch with probability at or below the floor cannot be realized.
    ZeroBranch { probability: f64 },
    /// Every candidate chain of a merge carried zero probability.
    EmptyBundle,
    /// An event time precedes the world's current time.
    TimeReversed { now: f64, requested: f64 },
    /// Exhaustive enumeration would exceed the configured cap.
    CapExceeded { needed: usize, cap: usize },
    /// Projector ranks do not partition the dimension.
    BadRanks { sum: usize, dim: usize },
    /// A configuration field holds an unusable value.
    BadConfig { field: &'static str, reason: &'static str },
    /// The eigensolver failed to converge within its sweep budget.
    NoConvergence { sweeps: usize, off_diagonal: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Invalid { subject, report } => write!(f, "invalid {subject}: {report}"),
            Self::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Self::OutcomeOutOfRange {
                slot,
                outcome,
                count,
            } => write!(
                f,
                "outcome {outcome} out of range for slot {slot} with {count} outcomes"
            ),
            Self::SelectorTooLong { len, slots } => {
                write!(f, "selector of length {len} exceeds {slots} slots")
            }
            Self::ErasedOutcome { slot } => {
                write!(f, "slot {slot} is erased where a chosen outcome is required")
            }
            Self::NotErasable { slot } => {
                write!(f, "slot {slot} is not an intact branch of the realized chain")
            }
            Self::ZeroBranch { probability } => write!(
                f,
                "branch probability {probability:.3e} is at or below the probability floor"
            ),
            Self::EmptyBundle => write!(f, "all candidate chains carry zero probability"),
            Self::TimeReversed { now, requested } => {
                write!(f, "event time {requested} precedes current time {now}")
            }
            Self::CapExceeded { needed, cap } => {
                write!(f, "enumeration needs {needed} chains, cap is {cap}")
            }
            Self::BadRanks { sum, dim } => {
                write!(f, "projector ranks sum to {sum}, dimension is {dim}")
            }
            Self::BadConfig { field, reason } => write!(f, "bad config field `{field}`: {reason}"),
            Self::NoConvergence {
                sweeps,
                off_diagonal,
            } => write!(
                f,
                "eigensolver stalled after {sweeps} sweeps with off-diagonal norm {off_diagonal:.3e}"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
