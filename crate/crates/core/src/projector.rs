//! Orthogonal projector decompositions of the identity.
//!
//! One decomposition describes one exhaustive set of mutually exclusive
//! alternatives: Hermitian idempotents `E_k` with `E_i E_j = 0` for
//! `i != j` and `Σ E_k = I`.

use crate::error::Result;
use crate::matrix::ComplexMatrix;
use crate::tol;
use crate::validate::{Validate, ValidationReport, ViolationKind};
use alloc::string::String;
use alloc::vec::Vec;
#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

#[derive(Debug, Clone)]
pub struct ProjectorDecomposition {
    projectors: Vec<ComplexMatrix>,
    label: String,
}

impl ProjectorDecomposition {
    /// Validate and wrap a set of projectors.
    pub fn new(projectors: Vec<ComplexMatrix>, label: impl Into<String>) -> Result<Self> {
        let d = Self {
            projectors,
            label: label.into(),
        };
        d.validate().into_result("projector decomposition")?;
        Ok(d)
    }

    /// The one-outcome decomposition `{I}`.
    pub fn identity(dim: usize, label: impl Into<String>) -> Self {
        Self {
            projectors: alloc::vec![ComplexMatrix::identity(dim)],
            label: label.into(),
        }
    }

    /// One rank-1 projector per computational basis state.
    pub fn computational_basis(dim: usize) -> Self {
        let projectors = (0..dim)
            .map(|k| {
                let mut m = ComplexMatrix::zeros(dim);
                m.set(k, k, num_complex::Complex::new(1.0, 0.0));
                m
            })
            .collect();
        Self {
            projectors,
            label: String::from("basis"),
        }
    }

    /// Two blocks of computational basis states: the first `split` states
    /// against the rest.
    pub fn basis_split(dim: usize, split: usize) -> Self {
        assert!(split > 0 && split < dim, "split must cut the basis in two");
        let block = |lo: usize, hi: usize| {
            let mut m = ComplexMatrix::zeros(dim);
            for k in lo..hi {
                m.set(k, k, num_complex::Complex::new(1.0, 0.0));
            }
            m
        };
        Self {
            projectors: alloc::vec![block(0, split), block(split, dim)],
            label: String::from("split"),
        }
    }

    pub fn outcomes(&self) -> usize {
        self.projectors.len()
    }

    pub fn dim(&self) -> usize {
        self.projectors.first().map_or(0, ComplexMatrix::dim)
    }

    pub fn projector(&self, k: usize) -> &ComplexMatrix {
        &self.projectors[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &ComplexMatrix> {
        self.projectors.iter()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Rank of projector `k` (its trace, rounded).
    pub fn rank(&self, k: usize) -> usize {
        self.projectors[k].trace().re.round() as usize
    }
}

impl Validate for ProjectorDecomposition {
    fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::new();
        if self.projectors.is_empty() {
            report.check(ViolationKind::Completeness, 1.0, tol::PROJ);
            return report;
        }
        let dim = self.dim();
        for (i, e) in self.projectors.iter().enumerate() {
            if e.dim() != dim {
                report.check(ViolationKind::Dimension, (e.dim() as f64 - dim as f64).abs(), 0.0);
                return report;
            }
            report.check(
                ViolationKind::MemberHermiticity(i),
                e.hermiticity_residual(),
                tol::PROJ,
            );
            report.check(
                ViolationKind::Idempotency(i),
                e.mul_mat(e).max_abs_diff(e),
                tol::PROJ,
            );
        }
        for i in 0..self.projectors.len() {
            for j in i + 1..self.projectors.len() {
                let prod = self.projectors[i].mul_mat(&self.projectors[j]);
                report.check(ViolationKind::Orthogonality(i, j), prod.max_abs(), tol::PROJ);
            }
        }
        let mut sum = ComplexMatrix::zeros(dim);
        for e in &self.projectors {
            sum = &sum + e;
        }
        report.check(ViolationKind::Completeness, sum.identity_residual(), tol::PROJ);
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::C64;

    #[test]
    fn computational_basis_is_valid() {
        let d = ProjectorDecomposition::computational_basis(3);
        assert!(d.validate().is_valid());
        assert_eq!(d.outcomes(), 3);
        for k in 0..3 {
            assert_eq!(d.rank(k), 1);
        }
    }

    #[test]
    fn basis_split_is_valid() {
        let d = ProjectorDecomposition::basis_split(4, 2);
        assert!(d.validate().is_valid());
        assert_eq!(d.outcomes(), 2);
        assert_eq!(d.rank(0), 2);
        assert_eq!(d.rank(1), 2);
    }

    #[test]
    fn identity_decomposition_is_valid() {
        let d = ProjectorDecomposition::identity(5, "trivial");
        assert!(d.validate().is_valid());
        assert_eq!(d.outcomes(), 1);
        assert_eq!(d.rank(0), 5);
    }

    #[test]
    fn incomplete_set_is_rejected() {
        let mut e = ComplexMatrix::zeros(2);
        e.set(0, 0, C64::new(1.0, 0.0));
        let err = ProjectorDecomposition::new(alloc::vec![e], "half").unwrap_err();
        let report = match err {
            crate::error::Error::Invalid { report, .. } => report,
            other => panic!("expected validation error, got {other:?}"),
        };
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::Completeness));
    }

    #[test]
    fn overlapping_projectors_are_rejected() {
        let e = ComplexMatrix::identity(2);
        let report = ProjectorDecomposition {
            projectors: alloc::vec![e.clone(), e],
            label: String::from("overlap"),
        }
        .validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v.kind, ViolationKind::Orthogonality(0, 1))));
    }

    #[test]
    fn non_idempotent_member_is_rejected() {
        let half = ComplexMatrix::identity(2).scale_re(0.5);
        let report = ProjectorDecomposition {
            projectors: alloc::vec![half.clone(), half],
            label: String::from("soft"),
        }
        .validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v.kind, ViolationKind::Idempotency(0))));
    }

    #[test]
    fn oblique_idempotent_is_rejected() {
        // [[1, 1], [0, 0]] squares to itself but is not Hermitian.
        let mut e = ComplexMatrix::zeros(2);
        e.set(0, 0, C64::new(1.0, 0.0));
        e.set(0, 1, C64::new(1.0, 0.0));
        assert!(e.mul_mat(&e).max_abs_diff(&e) < 1e-15);
        let report = ProjectorDecomposition {
            projectors: alloc::vec![e],
            label: String::from("oblique"),
        }
        .validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v.kind, ViolationKind::MemberHermiticity(0))));
    }
}
