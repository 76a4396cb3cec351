//! Density matrices, Hamiltonians, unitary evolution and entropy.

use crate::eig::{hermitian_eig, HermitianEig};
use crate::error::{Error, Result};
use crate::matrix::{C64, ComplexMatrix};
use crate::tol;
use crate::validate::{Validate, ValidationReport, ViolationKind};
use alloc::vec::Vec;
#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

/// A unit-trace positive semidefinite Hermitian matrix.
///
/// Valid by construction: `new` rejects anything that fails the structural
/// checks, and internal updates re-symmetrize and re-normalize so roundoff
/// cannot accumulate into a violation.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    m: ComplexMatrix,
}

impl DensityMatrix {
    /// Validate and wrap a candidate state.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        validate_density(&m).into_result("density matrix")?;
        Ok(Self {
            m: m.symmetrized(),
        })
    }

    /// Wrap the result of a trusted trace-preserving update.
    ///
    /// Hermiticity is restored exactly and the trace renormalized; the
    /// caller guarantees positivity (true for every sandwich and convex
    /// combination in this crate).
    pub(crate) fn from_update(m: ComplexMatrix) -> Self {
        let sym = m.symmetrized();
        let tr = sym.trace().re;
        Self {
            m: sym.scale_re(1.0 / tr),
        }
    }

    /// `|k><k|` in the computational basis.
    pub fn pure_basis(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index out of range");
        let mut m = ComplexMatrix::zeros(dim);
        m.set(k, k, C64::new(1.0, 0.0));
        Self { m }
    }

    /// `I / dim`, the state of maximal ignorance.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            m: ComplexMatrix::identity(dim).scale_re(1.0 / dim as f64),
        }
    }

    /// Diagonal state from a probability vector.
    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::diag(probs))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    /// Eigenvalues in descending order.
    pub fn spectrum(&self) -> Vec<f64> {
        hermitian_eig(&self.m)
            .expect("eigensolver converges on a valid density matrix")
            .values
    }
}

impl Validate for DensityMatrix {
    fn validate(&self) -> ValidationReport {
        validate_density(&self.m)
    }
}

/// Structural checks for a density-matrix candidate.
///
/// Reports every violated property. Positivity is only measurable on a
/// Hermitian matrix, so that check is skipped when Hermiticity already
/// failed.
pub fn validate_density(m: &ComplexMatrix) -> ValidationReport {
    let mut report = ValidationReport::new();
    let herm = m.hermiticity_residual();
    report.check(ViolationKind::Hermiticity, herm, tol::HERM);
    let tr = m.trace();
    report.check(
        ViolationKind::UnitTrace,
        (tr - C64::new(1.0, 0.0)).norm(),
        tol::TRACE,
    );
    if herm <= tol::HERM {
        if let Ok(eig) = hermitian_eig(m) {
            let min = eig.values.last().copied().unwrap_or(0.0);
            report.check(ViolationKind::PositiveSemidefinite, (-min).max(0.0), tol::PSD);
        }
    }
    report
}

/// A Hermitian generator of time evolution, diagonalized once at
/// construction so every later propagator is a cheap spectral map.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    m: ComplexMatrix,
    eig: HermitianEig,
}

impl Hamiltonian {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let herm = m.hermiticity_residual();
        if herm > tol::HERM {
            let mut report = ValidationReport::new();
            report.check(ViolationKind::Hermiticity, herm, tol::HERM);
            return Err(Error::Invalid {
                subject: "hamiltonian",
                report,
            });
        }
        let sym = m.symmetrized();
        let eig = hermitian_eig(&sym)?;
        Ok(Self { m: sym, eig })
    }

    /// The trivial generator; evolution is the identity at every time.
    pub fn zero(dim: usize) -> Self {
        Self::new(ComplexMatrix::zeros(dim)).expect("zero matrix is hermitian")
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    /// Propagator `exp(-i H t)`.
    pub fn unitary(&self, t: f64) -> ComplexMatrix {
        if t == 0.0 {
            return ComplexMatrix::identity(self.dim());
        }
        self.eig
            .spectral_map(|lambda| C64::new(0.0, -lambda * t).exp())
    }
}

/// Propagator `exp(-i h dt)` (natural units, `hbar = 1`).
pub fn evolve_unitary(h: &Hamiltonian, dt: f64) -> ComplexMatrix {
    h.unitary(dt)
}

/// Evolve a state forward: `U rho U†` with `U = exp(-i h dt)`.
pub fn evolve_state(rho: &DensityMatrix, h: &Hamiltonian, dt: f64) -> Result<DensityMatrix> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: h.dim(),
        });
    }
    if dt == 0.0 {
        return Ok(rho.clone());
    }
    let u = h.unitary(dt);
    Ok(DensityMatrix::from_update(rho.matrix().conjugated_by(&u)))
}

/// Von Neumann entropy `s[rho] = -Tr rho ln rho`, in nats.
///
/// Eigenvalues at or below [`tol::EIG_FLOOR`] contribute zero
/// (`0 ln 0 = 0` by continuity).
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let eig = hermitian_eig(rho.matrix())
        .expect("eigensolver converges on a valid density matrix");
    let mut s = 0.0;
    for &lambda in &eig.values {
        if lambda > tol::EIG_FLOOR {
            s -= lambda * lambda.ln();
        }
    }
    s
}

/// Quadratic entropy `s'[rho] = -Tr rho²`.
///
/// A concave spectral sum like the von Neumann form, cheaper to evaluate
/// and obeying the same reduction inequalities. Ranges from `-1` (pure)
/// up to `-1/dim` (maximally mixed).
pub fn quadratic_entropy(rho: &DensityMatrix) -> f64 {
    // Tr rho² is the squared Frobenius norm for Hermitian rho.
    let f = rho.matrix().frobenius_norm();
    -(f * f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_of_a_biased_qubit() {
        let rho = DensityMatrix::from_diagonal(&[0.75, 0.25]).unwrap();
        assert!((von_neumann_entropy(&rho) - 0.5623351446188083).abs() < 1e-12);
    }

    #[test]
    fn entropy_extremes() {
        let pure = DensityMatrix::pure_basis(4, 2);
        assert_eq!(von_neumann_entropy(&pure), 0.0);
        let mixed = DensityMatrix::maximally_mixed(4);
        assert!((von_neumann_entropy(&mixed) - 4.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn quadratic_entropy_extremes() {
        let pure = DensityMatrix::pure_basis(3, 0);
        assert!((quadratic_entropy(&pure) + 1.0).abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(3);
        assert!((quadratic_entropy(&mixed) + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pauli_generator_quarter_turn() {
        // exp(-i X pi/2) = -i X.
        let x = ComplexMatrix::from_row_major(
            2,
            alloc::vec![
                C64::new(0., 0.),
                C64::new(1., 0.),
                C64::new(1., 0.),
                C64::new(0., 0.)
            ],
        );
        let h = Hamiltonian::new(x.clone()).unwrap();
        let u = evolve_unitary(&h, core::f64::consts::FRAC_PI_2);
        let expected = x.scale(C64::new(0.0, -1.0));
        assert!(u.max_abs_diff(&expected) < 1e-14);
        assert!(u.unitarity_residual() < 1e-14);
    }

    #[test]
    fn zero_generator_is_static() {
        let h = Hamiltonian::zero(3);
        let u = evolve_unitary(&h, 17.0);
        assert!(u.identity_residual() == 0.0);
        let rho = DensityMatrix::maximally_mixed(3);
        let evolved = evolve_state(&rho, &h, 5.0).unwrap();
        assert!(evolved.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn evolution_preserves_entropy() {
        let rho = DensityMatrix::from_diagonal(&[0.5, 0.3, 0.2]).unwrap();
        let mut hm = ComplexMatrix::zeros(3);
        hm.set(0, 1, C64::new(0.7, 0.2));
        hm.set(1, 0, C64::new(0.7, -0.2));
        hm.set(1, 2, C64::new(-0.3, 0.5));
        hm.set(2, 1, C64::new(-0.3, -0.5));
        hm.set(2, 2, C64::new(1.1, 0.0));
        let h = Hamiltonian::new(hm).unwrap();
        let evolved = evolve_state(&rho, &h, 0.8).unwrap();
        assert!(evolved.validate().is_valid());
        let s0 = von_neumann_entropy(&rho);
        let s1 = von_neumann_entropy(&evolved);
        assert!((s0 - s1).abs() < 1e-10);
    }

    #[test]
    fn bad_states_report_every_violation() {
        // Non-unit trace and a negative eigenvalue at once.
        let m = ComplexMatrix::diag(&[1.2, -0.1]);
        let report = validate_density(&m);
        assert!(!report.is_valid());
        let kinds: alloc::vec::Vec<_> = report.violations.iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::UnitTrace));
        assert!(kinds.contains(&ViolationKind::PositiveSemidefinite));
        assert!(DensityMatrix::new(m).is_err());
    }
}
