//! History families, chain operators, and conditional states.
//!
//! A history family fixes an initial state, a Hamiltonian, and an ordered
//! sequence of event slots. Projectors are moved to their event times in
//! the Heisenberg picture, `E(t) = U†(t) E U(t)`, so a history's chain
//! operator is the plain ordered product
//!
//! ```text
//! C(α) = E₁^{α₁}(t₁) E₂^{α₂}(t₂) ... Eₙ^{αₙ}(tₙ)
//! ```
//!
//! and its probability is `Tr(C† ρ₀ C)`. Conditional states computed here
//! stay in the Heisenberg frame; convert with [`crate::evolve_state`] when
//! a lab-frame snapshot at a given time is wanted.

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::projector::ProjectorDecomposition;
use crate::state::{DensityMatrix, Hamiltonian};
use crate::tol;
use crate::validate::{Validate, ValidationReport, ViolationKind};
use alloc::vec::Vec;
use core::fmt;

/// One projective event: which decomposition is actualized, and when.
#[derive(Debug, Clone)]
pub struct EventSlot {
    pub time: f64,
    pub decomposition: ProjectorDecomposition,
}

impl EventSlot {
    pub fn new(time: f64, decomposition: ProjectorDecomposition) -> Self {
        Self {
            time,
            decomposition,
        }
    }
}

/// Outcome bookkeeping for one slot of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotOutcome {
    /// A definite outcome index into the slot's decomposition.
    Chosen(usize),
    /// The slot's record has decayed; no outcome is on file.
    Erased,
}

impl SlotOutcome {
    pub fn chosen(self) -> Option<usize> {
        match self {
            Self::Chosen(k) => Some(k),
            Self::Erased => None,
        }
    }
}

/// Outcomes for a leading run of a family's slots.
///
/// A selector shorter than the family addresses the truncated history
/// that stops after its last entry.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChainSelector {
    outcomes: Vec<SlotOutcome>,
}

impl ChainSelector {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn chosen(indices: &[usize]) -> Self {
        Self {
            outcomes: indices.iter().map(|&i| SlotOutcome::Chosen(i)).collect(),
        }
    }

    pub fn from_outcomes(outcomes: Vec<SlotOutcome>) -> Self {
        Self { outcomes }
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[SlotOutcome] {
        &self.outcomes
    }

    pub fn get(&self, i: usize) -> Option<SlotOutcome> {
        self.outcomes.get(i).copied()
    }

    pub fn push(&mut self, outcome: SlotOutcome) {
        self.outcomes.push(outcome);
    }

    pub fn set(&mut self, i: usize, outcome: SlotOutcome) {
        self.outcomes[i] = outcome;
    }

    pub fn is_fully_chosen(&self) -> bool {
        self.outcomes
            .iter()
            .all(|o| matches!(o, SlotOutcome::Chosen(_)))
    }

    /// Indices of erased slots.
    pub fn erased_slots(&self) -> Vec<usize> {
        self.outcomes
            .iter()
            .enumerate()
            .filter_map(|(i, o)| matches!(o, SlotOutcome::Erased).then_some(i))
            .collect()
    }
}

impl fmt::Display for ChainSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, o) in self.outcomes.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            match o {
                SlotOutcome::Chosen(k) => write!(f, "{k}")?,
                SlotOutcome::Erased => write!(f, "~")?,
            }
        }
        Ok(())
    }
}

/// An initial state, a Hamiltonian, and strictly time-ordered event slots.
#[derive(Debug, Clone)]
pub struct HistoryFamily {
    initial_state: DensityMatrix,
    hamiltonian: Hamiltonian,
    slots: Vec<EventSlot>,
}

impl HistoryFamily {
    pub fn new(
        initial_state: DensityMatrix,
        hamiltonian: Hamiltonian,
        slots: Vec<EventSlot>,
    ) -> Result<Self> {
        let family = Self {
            initial_state,
            hamiltonian,
            slots,
        };
        family.validate().into_result("history family")?;
        Ok(family)
    }

    /// Append a later slot; its time must exceed the current last.
    pub fn push_slot(&mut self, slot: EventSlot) -> Result<()> {
        if slot.decomposition.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: slot.decomposition.dim(),
            });
        }
        if let Some(last) = self.slots.last() {
            if !(slot.time > last.time) {
                let mut report = ValidationReport::new();
                report.check(ViolationKind::TimeOrdering, last.time - slot.time, 0.0);
                return Err(Error::Invalid {
                    subject: "appended event slot",
                    report,
                });
            }
        }
        self.slots.push(slot);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.initial_state.dim()
    }

    pub fn initial_state(&self) -> &DensityMatrix {
        &self.initial_state
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    pub fn slots(&self) -> &[EventSlot] {
        &self.slots
    }

    pub fn slot(&self, i: usize) -> &EventSlot {
        &self.slots[i]
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Number of complete histories, `None` on overflow.
    pub fn chain_count(&self) -> Option<usize> {
        self.slots
            .iter()
            .try_fold(1usize, |acc, s| acc.checked_mul(s.decomposition.outcomes()))
    }

    /// Every fully chosen selector over the first `depth` slots, last slot
    /// varying fastest.
    pub fn prefix_selectors(&self, depth: usize, cap: usize) -> Result<Vec<ChainSelector>> {
        assert!(depth <= self.slots.len(), "depth exceeds slot count");
        let needed = self.slots[..depth]
            .iter()
            .try_fold(1usize, |acc, s| acc.checked_mul(s.decomposition.outcomes()))
            .unwrap_or(usize::MAX);
        if needed > cap {
            return Err(Error::CapExceeded { needed, cap });
        }
        let mut out = Vec::with_capacity(needed);
        let mut digits = alloc::vec![0usize; depth];
        loop {
            out.push(ChainSelector::chosen(&digits));
            // Mixed-radix increment.
            let mut i = depth;
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < self.slots[i].decomposition.outcomes() {
                    break;
                }
                digits[i] = 0;
            }
        }
    }

    /// Every complete history selector, last slot varying fastest.
    pub fn full_selectors(&self, cap: usize) -> Result<Vec<ChainSelector>> {
        self.prefix_selectors(self.slots.len(), cap)
    }
}

impl Validate for HistoryFamily {
    fn validate(&self) -> ValidationReport {
        let mut report = self.initial_state.validate();
        let dim = self.dim();
        if self.hamiltonian.dim() != dim {
            report.check(
                ViolationKind::Dimension,
                (self.hamiltonian.dim() as f64 - dim as f64).abs(),
                0.0,
            );
        }
        for slot in &self.slots {
            if slot.decomposition.dim() != dim {
                report.check(
                    ViolationKind::Dimension,
                    (slot.decomposition.dim() as f64 - dim as f64).abs(),
                    0.0,
                );
            }
            for v in slot.decomposition.validate().violations {
                report.violations.push(v);
            }
        }
        for pair in self.slots.windows(2) {
            if !(pair[1].time > pair[0].time) {
                report.check(ViolationKind::TimeOrdering, pair[0].time - pair[1].time, 0.0);
            }
        }
        report
    }
}

/// Move a projector to its event time: `E(t) = U†(t) E U(t)`.
pub fn heisenberg_projector(e: &ComplexMatrix, h: &Hamiltonian, t: f64) -> ComplexMatrix {
    if t == 0.0 {
        return e.clone();
    }
    // U†(t) E U(t) = U(-t) E U(-t)†.
    e.conjugated_by(&h.unitary(-t)).symmetrized()
}

fn checked_outcome(family: &HistoryFamily, sel: &ChainSelector, i: usize) -> Result<usize> {
    match sel.get(i) {
        Some(SlotOutcome::Chosen(k)) => {
            let count = family.slot(i).decomposition.outcomes();
            if k < count {
                Ok(k)
            } else {
                Err(Error::OutcomeOutOfRange {
                    slot: i,
                    outcome: k,
                    count,
                })
            }
        }
        Some(SlotOutcome::Erased) => Err(Error::ErasedOutcome { slot: i }),
        None => unreachable!("selector length checked by caller"),
    }
}

fn check_selector(family: &HistoryFamily, sel: &ChainSelector) -> Result<()> {
    if sel.len() > family.len() {
        return Err(Error::SelectorTooLong {
            len: sel.len(),
            slots: family.len(),
        });
    }
    Ok(())
}

/// Ordered product of Heisenberg projectors for a fully chosen selector.
///
/// The empty selector yields the identity.
pub fn chain_operator(family: &HistoryFamily, sel: &ChainSelector) -> Result<ComplexMatrix> {
    check_selector(family, sel)?;
    let mut c = ComplexMatrix::identity(family.dim());
    for i in 0..sel.len() {
        let k = checked_outcome(family, sel, i)?;
        let slot = family.slot(i);
        let e_t = heisenberg_projector(
            slot.decomposition.projector(k),
            family.hamiltonian(),
            slot.time,
        );
        c = c.mul_mat(&e_t);
    }
    Ok(c)
}

/// Probability `Tr(C† ρ₀ C)` of the history named by `sel`.
///
/// Roundoff within `1e-12` of the boundaries is clamped onto `[0, 1]`.
pub fn history_probability(family: &HistoryFamily, sel: &ChainSelector) -> Result<f64> {
    let c = chain_operator(family, sel)?;
    let m = c
        .adjoint()
        .mul_mat(family.initial_state().matrix())
        .mul_mat(&c);
    let mut p = m.trace().re;
    if p < 0.0 && p >= -1e-12 {
        p = 0.0;
    }
    if p > 1.0 && p <= 1.0 + 1e-12 {
        p = 1.0;
    }
    Ok(p)
}

/// Conditional state of a realized history, `C† ρ₀ C / Tr(C† ρ₀ C)`,
/// in the Heisenberg frame.
pub fn conditional_state_direct(
    family: &HistoryFamily,
    sel: &ChainSelector,
) -> Result<DensityMatrix> {
    let c = chain_operator(family, sel)?;
    let m = c
        .adjoint()
        .mul_mat(family.initial_state().matrix())
        .mul_mat(&c);
    let p = m.trace().re;
    if p <= tol::P_MIN {
        return Err(Error::ZeroBranch { probability: p });
    }
    Ok(DensityMatrix::from_update(m))
}

/// One recursive update: `ρ' = E ρ E / Tr(E ρ)` for a Heisenberg-frame
/// projector `E`, returning the new state and the step weight `Tr(E ρ)`.
pub fn conditional_state_step(
    prev: &DensityMatrix,
    e_heis: &ComplexMatrix,
) -> Result<(DensityMatrix, f64)> {
    if prev.dim() != e_heis.dim() {
        return Err(Error::DimensionMismatch {
            expected: prev.dim(),
            found: e_heis.dim(),
        });
    }
    // Tr(E ρ E) = Tr(E² ρ) = Tr(E ρ) for a projector.
    let w = e_heis.mul_mat(prev.matrix()).trace().re;
    if w <= tol::P_MIN {
        return Err(Error::ZeroBranch { probability: w });
    }
    let m = prev.matrix().sandwiched_by(e_heis);
    Ok((DensityMatrix::from_update(m), w))
}
