//! Decoherence functional and consistency checks for history families.
//!
//! The functional over complete histories is
//!
//! ```text
//! D(α, β) = Tr(C_β† ρ₀ C_α)
//! ```
//!
//! Its diagonal holds the history probabilities. A family supports a
//! classical probability account only when the off-diagonal interference
//! terms vanish; the two standard grades of "vanish" are [`ConsistencyMode::Weak`]
//! (real parts only) and [`ConsistencyMode::Medium`] (full magnitudes).

use crate::error::Result;
use crate::histories::{chain_operator, ChainSelector, HistoryFamily};
use crate::matrix::{C64, ComplexMatrix};
use alloc::vec::Vec;
use core::fmt;

/// Default ceiling on enumerated chains; protects against combinatorial
/// blowup in exhaustive passes.
pub const DEFAULT_CHAIN_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConsistencyMode {
    /// Off-diagonal real parts must vanish; the weakest condition that
    /// makes probabilities additive.
    Weak,
    /// Off-diagonal magnitudes must vanish.
    Medium,
}

impl ConsistencyMode {
    fn residual(self, d: C64) -> f64 {
        match self {
            Self::Weak => d.re.abs(),
            Self::Medium => d.norm(),
        }
    }
}

impl fmt::Display for ConsistencyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Weak => write!(f, "weak"),
            Self::Medium => write!(f, "medium"),
        }
    }
}

/// The functional `D` over every complete history of a family.
#[derive(Debug, Clone)]
pub struct DecoherenceMatrix {
    selectors: Vec<ChainSelector>,
    entries: ComplexMatrix,
}

impl DecoherenceMatrix {
    /// Number of complete histories.
    pub fn len(&self) -> usize {
        self.selectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selectors.is_empty()
    }

    pub fn selectors(&self) -> &[ChainSelector] {
        &self.selectors
    }

    /// `D(α, β)` with `α`, `β` indexing [`Self::selectors`].
    pub fn at(&self, a: usize, b: usize) -> C64 {
        self.entries.at(a, b)
    }

    pub fn entries(&self) -> &ComplexMatrix {
        &self.entries
    }

    /// Diagonal of `D`: the history probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.entries.at(i, i).re).collect()
    }

    /// Largest entry of `D - D†`; roundoff-sized for any family.
    pub fn hermiticity_residual(&self) -> f64 {
        self.entries.hermiticity_residual()
    }

    /// Largest off-diagonal residual under `mode`, with its pair.
    pub fn worst_off_diagonal(&self, mode: ConsistencyMode) -> Option<(usize, usize, f64)> {
        let mut worst: Option<(usize, usize, f64)> = None;
        for a in 0..self.len() {
            for b in a + 1..self.len() {
                let r = mode.residual(self.entries.at(a, b));
                if worst.map_or(true, |(_, _, w)| r > w) {
                    worst = Some((a, b, r));
                }
            }
        }
        worst
    }
}

/// Evaluate the functional over all complete histories.
///
/// Fails with a capacity error when the family holds more than `cap`
/// chains.
pub fn decoherence_functional_with_cap(
    family: &HistoryFamily,
    cap: usize,
) -> Result<DecoherenceMatrix> {
    let selectors = family.full_selectors(cap)?;
    let m = selectors.len();
    let ops: Vec<ComplexMatrix> = selectors
        .iter()
        .map(|sel| chain_operator(family, sel))
        .collect::<Result<_>>()?;
    let rho = family.initial_state().matrix();
    let weighted: Vec<ComplexMatrix> = ops.iter().map(|c| rho.mul_mat(c)).collect();

    // D(a, b) = Tr(C_b† ρ₀ C_a) is the Frobenius inner product of C_b
    // with ρ₀ C_a. Every entry is computed independently so Hermiticity
    // stays a measured property, not an imposed one.
    let entries = ComplexMatrix::from_fn(m, |a, b| {
        let cb = ops[b].data();
        let ya = weighted[a].data();
        let mut acc = C64::new(0.0, 0.0);
        for (x, y) in cb.iter().zip(ya.iter()) {
            acc += x.conj() * y;
        }
        acc
    });

    Ok(DecoherenceMatrix { selectors, entries })
}

/// [`decoherence_functional_with_cap`] at the default cap.
pub fn decoherence_functional(family: &HistoryFamily) -> Result<DecoherenceMatrix> {
    decoherence_functional_with_cap(family, DEFAULT_CHAIN_CAP)
}

/// Verdict of a consistency check.
#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub mode: ConsistencyMode,
    pub tolerance: f64,
    /// Complete histories examined.
    pub chains: usize,
    /// Unordered off-diagonal pairs whose residual exceeds the tolerance.
    pub violations: usize,
    /// Largest off-diagonal residual and the selector pair carrying it.
    pub worst: Option<(ChainSelector, ChainSelector, f64)>,
    pub consistent: bool,
}

/// Check a family's consistency under `mode` at `tolerance`.
pub fn check_consistency(
    family: &HistoryFamily,
    mode: ConsistencyMode,
    tolerance: f64,
) -> Result<ConsistencyReport> {
    check_consistency_with_cap(family, mode, tolerance, DEFAULT_CHAIN_CAP)
}

pub fn check_consistency_with_cap(
    family: &HistoryFamily,
    mode: ConsistencyMode,
    tolerance: f64,
    cap: usize,
) -> Result<ConsistencyReport> {
    let d = decoherence_functional_with_cap(family, cap)?;
    let mut violations = 0;
    let mut worst: Option<(usize, usize, f64)> = None;
    for a in 0..d.len() {
        for b in a + 1..d.len() {
            let r = mode.residual(d.at(a, b));
            if r > tolerance {
                violations += 1;
            }
            if worst.map_or(true, |(_, _, w)| r > w) {
                worst = Some((a, b, r));
            }
        }
    }
    Ok(ConsistencyReport {
        mode,
        tolerance,
        chains: d.len(),
        violations,
        worst: worst.map(|(a, b, r)| (d.selectors()[a].clone(), d.selectors()[b].clone(), r)),
        consistent: violations == 0,
    })
}
