//! Structured residual reports for matrix-shaped inputs.
//!
//! Constructors for states, projector decompositions and families validate
//! their inputs and reject them with a [`ValidationReport`] naming every
//! violated property, the measured residual and the tolerance it exceeded.

use alloc::vec::Vec;
use core::fmt;

/// A property a matrix-shaped input can fail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViolationKind {
    /// `m - m†` has an entry above tolerance.
    Hermiticity,
    /// `Tr m` differs from 1 beyond tolerance.
    UnitTrace,
    /// An eigenvalue is below `-tolerance`.
    PositiveSemidefinite,
    /// Projector `i` is not Hermitian (oblique idempotents are rejected).
    MemberHermiticity(usize),
    /// Projector `i` fails `E² = E`.
    Idempotency(usize),
    /// Projectors `i` and `j` fail `E_i E_j = 0`.
    Orthogonality(usize, usize),
    /// The decomposition fails `Σ E_i = I`.
    Completeness,
    /// Operands disagree in dimension.
    Dimension,
    /// Event times are not strictly increasing.
    TimeOrdering,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Hermiticity => write!(f, "hermiticity"),
            Self::UnitTrace => write!(f, "unit trace"),
            Self::PositiveSemidefinite => write!(f, "positive semidefiniteness"),
            Self::MemberHermiticity(i) => write!(f, "hermiticity of projector {i}"),
            Self::Idempotency(i) => write!(f, "idempotency of projector {i}"),
            Self::Orthogonality(i, j) => write!(f, "orthogonality of projectors {i} and {j}"),
            Self::Completeness => write!(f, "completeness"),
            Self::Dimension => write!(f, "dimension agreement"),
            Self::TimeOrdering => write!(f, "time ordering"),
        }
    }
}

/// One failed property with its measured residual.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Measured residual (max-abs convention unless noted on the kind).
    pub residual: f64,
    /// Tolerance the residual was checked against.
    pub tolerance: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} violated: residual {:.3e} exceeds tolerance {:.3e}",
            self.kind, self.residual, self.tolerance
        )
    }
}

/// Every violated property of one validated input.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record `kind` if `residual` exceeds `tolerance`.
    pub fn check(&mut self, kind: ViolationKind, residual: f64, tolerance: f64) {
        if !(residual <= tolerance) {
            self.violations.push(Violation {
                kind,
                residual,
                tolerance,
            });
        }
    }

    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Largest residual-to-tolerance ratio among the violations.
    pub fn worst(&self) -> Option<&Violation> {
        self.violations.iter().max_by(|a, b| {
            let ra = a.residual / a.tolerance;
            let rb = b.residual / b.tolerance;
            ra.partial_cmp(&rb).unwrap_or(core::cmp::Ordering::Equal)
        })
    }

    /// Fold into a `Result`, tagging the report with what was validated.
    pub fn into_result(self, subject: &'static str) -> crate::error::Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(crate::error::Error::Invalid {
                subject,
                report: self,
            })
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Types that can report on their own structural invariants.
pub trait Validate {
    fn validate(&self) -> ValidationReport;
}
