//! The world as one realized chain plus the bundle its erased records
//! leave behind.
//!
//! Branching actualizes a projective event: the realized chain gains one
//! chosen outcome. Merging erases the record of an earlier outcome: every
//! way the erased slot could have gone becomes a live variant, and the
//! world state turns into their probability-weighted mixture. A variant's
//! weight is its full-chain probability `Tr(C† ρ₀ C)` normalized over the
//! bundle; the single-erasure mixture weights and the fold-with-new-event
//! weights both arise as special cases, which is what makes "erase then
//! branch", "branch after erase" and the one-shot fold agree at equal
//! times.
//!
//! Two pictures are kept in lockstep and reconciled here and nowhere
//! else: per-chain conditional states stay in the Heisenberg frame (no
//! evolution between events), while `rho_bar`, the canonical state for
//! dynamics and entropy, lives in the lab frame at the current time.

use crate::decoherence::{ConsistencyMode, ConsistencyReport};
use crate::error::{Error, Result};
use crate::histories::{
    conditional_state_step, ChainSelector, EventSlot, HistoryFamily, SlotOutcome,
};
use crate::matrix::{C64, ComplexMatrix};
use crate::state::{evolve_state, von_neumann_entropy, DensityMatrix, Hamiltonian};
use crate::tol;
use alloc::vec::Vec;

/// Default ceiling on bundle size before lossy aggregation.
pub const DEFAULT_BUNDLE_CAP: usize = 1024;

/// One live variant of the realized chain.
#[derive(Debug, Clone)]
pub struct WeightedChain {
    /// Fully chosen selector: realized outcomes at intact slots, one
    /// definite alternative at each erased slot.
    pub selector: ChainSelector,
    /// Unnormalized full-chain probability `Tr(C† ρ₀ C)`.
    pub probability: f64,
    /// `probability` normalized over the bundle.
    pub weight: f64,
    /// Heisenberg-frame conditional state of this chain.
    state: DensityMatrix,
    /// Chain operator `C`, maintained incrementally.
    op: ComplexMatrix,
}

impl WeightedChain {
    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn op(&self) -> &ComplexMatrix {
        &self.op
    }
}

#[derive(Debug, Clone)]
enum Bundle {
    Chains(Vec<WeightedChain>),
    /// Past the bundle cap only the aggregated Heisenberg-frame mixture
    /// survives; per-variant bookkeeping is gone.
    Collapsed { state: DensityMatrix },
}

/// A lightweight view of the world for logging and serialization.
#[derive(Debug, Clone)]
pub struct WorldSnapshot {
    pub time: f64,
    pub entropy: f64,
    pub realized: ChainSelector,
    pub weights: Vec<f64>,
    pub bundle_size: usize,
    pub collapsed: bool,
    /// Lab-frame world state at `time`.
    pub rho_bar: DensityMatrix,
}

/// The realized chain, its bundle of record-erased variants, and the
/// lab-frame world state.
#[derive(Debug, Clone)]
pub struct WorldState {
    family: HistoryFamily,
    realized: ChainSelector,
    bundle: Bundle,
    rho_bar: DensityMatrix,
    now: f64,
    /// Heisenberg projectors per slot, per outcome.
    heis: Vec<Vec<ComplexMatrix>>,
    bundle_cap: usize,
}

impl WorldState {
    /// Start a world at time `t0` in lab state `rho0`.
    ///
    /// Internally the family's reference state is pulled back to frame
    /// time zero so chain operators built from absolute event times apply
    /// unchanged.
    pub fn init(rho0: DensityMatrix, h: Hamiltonian, t0: f64) -> Result<Self> {
        if rho0.dim() != h.dim() {
            return Err(Error::DimensionMismatch {
                expected: rho0.dim(),
                found: h.dim(),
            });
        }
        let frame0 = evolve_state(&rho0, &h, -t0)?;
        let dim = rho0.dim();
        let family = HistoryFamily::new(frame0.clone(), h, Vec::new())?;
        let chain = WeightedChain {
            selector: ChainSelector::empty(),
            probability: 1.0,
            weight: 1.0,
            state: frame0,
            op: ComplexMatrix::identity(dim),
        };
        Ok(Self {
            family,
            realized: ChainSelector::empty(),
            bundle: Bundle::Chains(alloc::vec![chain]),
            rho_bar: rho0,
            now: t0,
            heis: Vec::new(),
            bundle_cap: DEFAULT_BUNDLE_CAP,
        })
    }

    /// Replace the bundle-size ceiling (default [`DEFAULT_BUNDLE_CAP`]).
    pub fn with_bundle_cap(mut self, cap: usize) -> Self {
        assert!(cap >= 1, "bundle cap must be at least 1");
        self.bundle_cap = cap;
        self
    }

    // ------------------------------------------------------------------
    // accessors
    // ------------------------------------------------------------------

    pub fn family(&self) -> &HistoryFamily {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Lab-frame world state at [`Self::now`].
    pub fn rho_bar(&self) -> &DensityMatrix {
        &self.rho_bar
    }

    /// Outcome record: one entry per actualized event.
    pub fn realized(&self) -> &ChainSelector {
        &self.realized
    }

    pub fn bundle_len(&self) -> usize {
        match &self.bundle {
            Bundle::Chains(cs) => cs.len(),
            Bundle::Collapsed { .. } => 1,
        }
    }

    /// Live variants, or `None` once the bundle has collapsed.
    pub fn chains(&self) -> Option<&[WeightedChain]> {
        match &self.bundle {
            Bundle::Chains(cs) => Some(cs),
            Bundle::Collapsed { .. } => None,
        }
    }

    pub fn is_collapsed(&self) -> bool {
        matches!(self.bundle, Bundle::Collapsed { .. })
    }

    pub fn weights(&self) -> Vec<f64> {
        match &self.bundle {
            Bundle::Chains(cs) => cs.iter().map(|c| c.weight).collect(),
            Bundle::Collapsed { .. } => alloc::vec![1.0],
        }
    }

    /// Von Neumann entropy of the lab-frame world state.
    pub fn entropy(&self) -> f64 {
        von_neumann_entropy(&self.rho_bar)
    }

    pub fn snapshot(&self) -> WorldSnapshot {
        WorldSnapshot {
            time: self.now,
            entropy: self.entropy(),
            realized: self.realized.clone(),
            weights: self.weights(),
            bundle_size: self.bundle_len(),
            collapsed: self.is_collapsed(),
            rho_bar: self.rho_bar.clone(),
        }
    }

    /// Weighted Heisenberg-frame mixture over the bundle, moved to the
    /// lab frame at `time`. The canonical `rho_bar` must match this
    /// reconstruction; property tests hold the two together.
    pub fn recombined_state(&self, time: f64) -> DensityMatrix {
        let mix = match &self.bundle {
            Bundle::Chains(cs) => {
                let mut acc = ComplexMatrix::zeros(self.dim());
                for c in cs {
                    acc = &acc + &c.state.matrix().scale_re(c.weight);
                }
                DensityMatrix::from_update(acc)
            }
            Bundle::Collapsed { state } => state.clone(),
        };
        evolve_state(&mix, self.family.hamiltonian(), time)
            .expect("dimensions agree by construction")
    }

    // ------------------------------------------------------------------
    // branching
    // ------------------------------------------------------------------

    /// Actualize `slot` with a definite outcome. Returns the new world
    /// and the outcome's probability given the world state.
    ///
    /// `slot.time` must be at least the current time and strictly later
    /// than every earlier event slot.
    pub fn branch(&self, slot: EventSlot, outcome: usize) -> Result<(Self, f64)> {
        let (world, picked, p) = self.branch_with(slot, |_| outcome)?;
        debug_assert_eq!(picked, outcome);
        Ok((world, p))
    }

    /// Actualize `slot` with an outcome drawn from the branch
    /// probabilities. Returns the new world, the outcome, and its
    /// probability.
    pub fn branch_sampled<R: rand::Rng + ?Sized>(
        &self,
        slot: EventSlot,
        rng: &mut R,
    ) -> Result<(Self, usize, f64)> {
        let u: f64 = rng.gen();
        self.branch_with(slot, |probs| sample_index(probs, u))
    }

    fn branch_with(
        &self,
        slot: EventSlot,
        choose: impl FnOnce(&[f64]) -> usize,
    ) -> Result<(Self, usize, f64)> {
        if slot.decomposition.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: slot.decomposition.dim(),
            });
        }
        if slot.time < self.now {
            return Err(Error::TimeReversed {
                now: self.now,
                requested: slot.time,
            });
        }

        let h = self.family.hamiltonian().clone();
        let outcomes = slot.decomposition.outcomes();

        // Dense update is canonical: evolve to the event, then read the
        // branch probabilities off the evolved state.
        let evolved = evolve_state(&self.rho_bar, &h, slot.time - self.now)?;
        let mut probs = Vec::with_capacity(outcomes);
        for k in 0..outcomes {
            let p = slot
                .decomposition
                .projector(k)
                .mul_mat(evolved.matrix())
                .trace()
                .re;
            probs.push(if p < 0.0 && p >= -1e-12 { 0.0 } else { p });
        }
        let outcome = choose(&probs);
        if outcome >= outcomes {
            return Err(Error::OutcomeOutOfRange {
                slot: self.family.len(),
                outcome,
                count: outcomes,
            });
        }
        let p_branch = probs[outcome];
        if p_branch <= tol::P_MIN {
            return Err(Error::ZeroBranch {
                probability: p_branch,
            });
        }

        // Heisenberg projectors for the new slot, cached for later merges.
        let u_back = h.unitary(-slot.time);
        let slot_heis: Vec<ComplexMatrix> = (0..outcomes)
            .map(|k| {
                slot.decomposition
                    .projector(k)
                    .conjugated_by(&u_back)
                    .symmetrized()
            })
            .collect();

        let e = slot.decomposition.projector(outcome);
        let rho_bar = DensityMatrix::from_update(evolved.matrix().sandwiched_by(e));

        let bundle = match &self.bundle {
            Bundle::Chains(cs) => {
                let mut next = Vec::with_capacity(cs.len());
                for c in cs {
                    match conditional_state_step(&c.state, &slot_heis[outcome]) {
                        Ok((state, w)) => {
                            let mut selector = c.selector.clone();
                            selector.push(SlotOutcome::Chosen(outcome));
                            next.push(WeightedChain {
                                selector,
                                probability: c.probability * w,
                                weight: 0.0,
                                state,
                                op: c.op.mul_mat(&slot_heis[outcome]),
                            });
                        }
                        Err(Error::ZeroBranch { .. }) => continue,
                        Err(e) => return Err(e),
                    }
                }
                Bundle::Chains(normalize_weights(next)?)
            }
            Bundle::Collapsed { state } => {
                let (state, _) = conditional_state_step(state, &slot_heis[outcome])?;
                Bundle::Collapsed { state }
            }
        };

        let t_event = slot.time;
        let mut family = self.family.clone();
        family.push_slot(slot)?;
        let mut realized = self.realized.clone();
        realized.push(SlotOutcome::Chosen(outcome));
        let mut heis = self.heis.clone();
        heis.push(slot_heis);

        Ok((
            Self {
                family,
                realized,
                bundle,
                rho_bar,
                now: t_event,
                heis,
                bundle_cap: self.bundle_cap,
            },
            outcome,
            p_branch,
        ))
    }

    // ------------------------------------------------------------------
    // merging
    // ------------------------------------------------------------------

    /// Erase the record of `slot_index` at time `t_n` with no new event.
    ///
    /// All alternatives of the erased slot become live variants weighted
    /// by their full-chain probabilities; the world state becomes their
    /// mixture, evolved to `t_n`.
    pub fn merge_deterministic(&self, slot_index: usize, t_n: f64) -> Result<Self> {
        if t_n < self.now {
            return Err(Error::TimeReversed {
                now: self.now,
                requested: t_n,
            });
        }
        self.check_erasable(slot_index)?;

        let mut realized = self.realized.clone();
        realized.set(slot_index, SlotOutcome::Erased);

        let (bundle, mix) = match &self.bundle {
            Bundle::Chains(cs) => {
                let variants = self.expand_variants(cs, slot_index)?;
                self.finish_bundle(variants)?
            }
            // Lossy tail: the aggregated state no longer distinguishes
            // variants, so erasure only touches the record.
            Bundle::Collapsed { state } => (
                Bundle::Collapsed {
                    state: state.clone(),
                },
                state.clone(),
            ),
        };

        let rho_bar = evolve_state(&mix, self.family.hamiltonian(), t_n)?;
        Ok(Self {
            family: self.family.clone(),
            realized,
            bundle,
            rho_bar,
            now: t_n,
            heis: self.heis.clone(),
            bundle_cap: self.bundle_cap,
        })
    }

    /// Erase the record of `slot_index` while actualizing `new_slot` with
    /// a definite outcome, as one transformation. Returns the new world
    /// and the outcome's aggregated probability.
    pub fn merge_with_event(
        &self,
        slot_index: usize,
        new_slot: EventSlot,
        outcome: usize,
    ) -> Result<(Self, f64)> {
        let (world, picked, p) = self.merge_with_event_inner(slot_index, new_slot, |_| outcome)?;
        debug_assert_eq!(picked, outcome);
        Ok((world, p))
    }

    /// [`Self::merge_with_event`] with the outcome drawn from the
    /// aggregated branch probabilities.
    pub fn merge_with_event_sampled<R: rand::Rng + ?Sized>(
        &self,
        slot_index: usize,
        new_slot: EventSlot,
        rng: &mut R,
    ) -> Result<(Self, usize, f64)> {
        let u: f64 = rng.gen();
        self.merge_with_event_inner(slot_index, new_slot, |probs| sample_index(probs, u))
    }

    fn merge_with_event_inner(
        &self,
        slot_index: usize,
        new_slot: EventSlot,
        choose: impl FnOnce(&[f64]) -> usize,
    ) -> Result<(Self, usize, f64)> {
        if new_slot.decomposition.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: new_slot.decomposition.dim(),
            });
        }
        if new_slot.time < self.now {
            return Err(Error::TimeReversed {
                now: self.now,
                requested: new_slot.time,
            });
        }
        self.check_erasable(slot_index)?;

        let h = self.family.hamiltonian().clone();
        let outcomes = new_slot.decomposition.outcomes();
        let u_back = h.unitary(-new_slot.time);
        let slot_heis: Vec<ComplexMatrix> = (0..outcomes)
            .map(|k| {
                new_slot
                    .decomposition
                    .projector(k)
                    .conjugated_by(&u_back)
                    .symmetrized()
            })
            .collect();

        match &self.bundle {
            Bundle::Chains(cs) => {
                let variants = self.expand_variants(cs, slot_index)?;
                let total_pre: f64 = variants.iter().map(|v| v.probability).sum();
                if total_pre <= 0.0 {
                    return Err(Error::EmptyBundle);
                }

                // Aggregated branch probabilities: every variant votes
                // with its pre-event probability.
                let mut probs = alloc::vec![0.0f64; outcomes];
                let mut step_w = alloc::vec![0.0f64; outcomes * variants.len()];
                for (vi, v) in variants.iter().enumerate() {
                    for k in 0..outcomes {
                        let w = slot_heis[k].mul_mat(v.state.matrix()).trace().re;
                        let w = if w < 0.0 && w >= -1e-12 { 0.0 } else { w };
                        step_w[vi * outcomes + k] = w;
                        probs[k] += v.probability * w;
                    }
                }
                for p in probs.iter_mut() {
                    *p /= total_pre;
                }

                let outcome = choose(&probs);
                if outcome >= outcomes {
                    return Err(Error::OutcomeOutOfRange {
                        slot: self.family.len(),
                        outcome,
                        count: outcomes,
                    });
                }
                let p_branch = probs[outcome];
                if p_branch <= tol::P_MIN {
                    return Err(Error::ZeroBranch {
                        probability: p_branch,
                    });
                }

                let mut next = Vec::with_capacity(variants.len());
                for (vi, v) in variants.into_iter().enumerate() {
                    let w = step_w[vi * outcomes + outcome];
                    if w <= 0.0 {
                        continue;
                    }
                    let (state, _) = conditional_state_step(&v.state, &slot_heis[outcome])
                        .expect("positive step weight");
                    let mut selector = v.selector;
                    selector.push(SlotOutcome::Chosen(outcome));
                    next.push(WeightedChain {
                        selector,
                        probability: v.probability * w,
                        weight: 0.0,
                        state,
                        op: v.op.mul_mat(&slot_heis[outcome]),
                    });
                }
                let (bundle, mix) = self.finish_bundle(next)?;
                let rho_bar = evolve_state(&mix, &h, new_slot.time)?;

                let mut family = self.family.clone();
                family.push_slot(new_slot)?;
                let mut realized = self.realized.clone();
                realized.set(slot_index, SlotOutcome::Erased);
                realized.push(SlotOutcome::Chosen(outcome));
                let mut heis = self.heis.clone();
                heis.push(slot_heis);

                Ok((
                    Self {
                        now: family.slots().last().map(|s| s.time).unwrap_or(self.now),
                        family,
                        realized,
                        bundle,
                        rho_bar,
                        heis,
                        bundle_cap: self.bundle_cap,
                    },
                    outcome,
                    p_branch,
                ))
            }
            // Lossy tail: erase the record, then branch the aggregated
            // state on the new event.
            Bundle::Collapsed { state } => {
                let mut probs = Vec::with_capacity(outcomes);
                for k in 0..outcomes {
                    let w = slot_heis[k].mul_mat(state.matrix()).trace().re;
                    probs.push(if w < 0.0 && w >= -1e-12 { 0.0 } else { w });
                }
                let outcome = choose(&probs);
                if outcome >= outcomes {
                    return Err(Error::OutcomeOutOfRange {
                        slot: self.family.len(),
                        outcome,
                        count: outcomes,
                    });
                }
                let p_branch = probs[outcome];
                if p_branch <= tol::P_MIN {
                    return Err(Error::ZeroBranch {
                        probability: p_branch,
                    });
                }
                let (state, _) = conditional_state_step(state, &slot_heis[outcome])?;
                let rho_bar = evolve_state(&state, &h, new_slot.time)?;

                let mut family = self.family.clone();
                family.push_slot(new_slot)?;
                let mut realized = self.realized.clone();
                realized.set(slot_index, SlotOutcome::Erased);
                realized.push(SlotOutcome::Chosen(outcome));
                let mut heis = self.heis.clone();
                heis.push(slot_heis);

                Ok((
                    Self {
                        now: family.slots().last().map(|s| s.time).unwrap_or(self.now),
                        family,
                        realized,
                        bundle: Bundle::Collapsed { state },
                        rho_bar,
                        heis,
                        bundle_cap: self.bundle_cap,
                    },
                    outcome,
                    p_branch,
                ))
            }
        }
    }

    /// Decoherence check for a prospective slot against the live bundle:
    /// the functional over (bundle chain, outcome) pairs, graded by
    /// `mode`. Returns `None` once the bundle has collapsed.
    pub fn prospective_consistency(
        &self,
        slot: &EventSlot,
        mode: ConsistencyMode,
        tolerance: f64,
    ) -> Result<Option<ConsistencyReport>> {
        let cs = match &self.bundle {
            Bundle::Chains(cs) => cs,
            Bundle::Collapsed { .. } => return Ok(None),
        };
        if slot.decomposition.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: slot.decomposition.dim(),
            });
        }
        let h = self.family.hamiltonian();
        let u_back = h.unitary(-slot.time);
        let outcomes = slot.decomposition.outcomes();
        let rho0 = self.family.initial_state().matrix();

        let mut selectors = Vec::with_capacity(cs.len() * outcomes);
        let mut ops = Vec::with_capacity(cs.len() * outcomes);
        for c in cs {
            for k in 0..outcomes {
                let e_t = slot
                    .decomposition
                    .projector(k)
                    .conjugated_by(&u_back)
                    .symmetrized();
                let mut sel = c.selector.clone();
                sel.push(SlotOutcome::Chosen(k));
                selectors.push(sel);
                ops.push(c.op.mul_mat(&e_t));
            }
        }
        let weighted: Vec<ComplexMatrix> = ops.iter().map(|c| rho0.mul_mat(c)).collect();
        let m = ops.len();
        let mut violations = 0;
        let mut worst: Option<(usize, usize, f64)> = None;
        for a in 0..m {
            for b in a + 1..m {
                let mut acc = C64::new(0.0, 0.0);
                for (x, y) in ops[b].data().iter().zip(weighted[a].data().iter()) {
                    acc += x.conj() * y;
                }
                let r = match mode {
                    ConsistencyMode::Weak => acc.re.abs(),
                    ConsistencyMode::Medium => acc.norm(),
                };
                if r > tolerance {
                    violations += 1;
                }
                if worst.map_or(true, |(_, _, w)| r > w) {
                    worst = Some((a, b, r));
                }
            }
        }
        Ok(Some(ConsistencyReport {
            mode,
            tolerance,
            chains: m,
            violations,
            worst: worst.map(|(a, b, r)| (selectors[a].clone(), selectors[b].clone(), r)),
            consistent: violations == 0,
        }))
    }

    // ------------------------------------------------------------------
    // internals
    // ------------------------------------------------------------------

    fn check_erasable(&self, slot_index: usize) -> Result<()> {
        match self.realized.get(slot_index) {
            Some(SlotOutcome::Chosen(_)) => Ok(()),
            _ => Err(Error::NotErasable { slot: slot_index }),
        }
    }

    /// Rebuild every way `slot_index` could have gone, for each chain in
    /// the current bundle. Zero-probability variants are dropped.
    fn expand_variants(
        &self,
        chains: &[WeightedChain],
        slot_index: usize,
    ) -> Result<Vec<WeightedChain>> {
        let outcomes = self.family.slot(slot_index).decomposition.outcomes();
        let mut out = Vec::with_capacity(chains.len() * outcomes);
        for c in chains {
            for k in 0..outcomes {
                let mut selector = c.selector.clone();
                selector.set(slot_index, SlotOutcome::Chosen(k));
                if let Some(v) = self.rebuild_chain(selector) {
                    out.push(v);
                }
            }
        }
        Ok(out)
    }

    /// Build a chain from scratch through the cached Heisenberg
    /// projectors. Returns `None` when its probability vanishes.
    fn rebuild_chain(&self, selector: ChainSelector) -> Option<WeightedChain> {
        let dim = self.dim();
        let mut op = ComplexMatrix::identity(dim);
        for (i, o) in selector.outcomes().iter().enumerate() {
            let k = match o {
                SlotOutcome::Chosen(k) => *k,
                SlotOutcome::Erased => unreachable!("variants are fully chosen"),
            };
            op = op.mul_mat(&self.heis[i][k]);
        }
        let m = op
            .adjoint()
            .mul_mat(self.family.initial_state().matrix())
            .mul_mat(&op);
        let mut p = m.trace().re;
        if p < 0.0 && p >= -1e-12 {
            p = 0.0;
        }
        if p <= 0.0 {
            return None;
        }
        Some(WeightedChain {
            selector,
            probability: p,
            weight: 0.0,
            state: DensityMatrix::from_update(m),
            op,
        })
    }

    /// Normalize weights, apply the probability floor, and collapse past
    /// the cap. Also returns the Heisenberg-frame mixture.
    fn finish_bundle(&self, variants: Vec<WeightedChain>) -> Result<(Bundle, DensityMatrix)> {
        let chains = normalize_weights(variants)?;
        let mut acc = ComplexMatrix::zeros(self.dim());
        for c in &chains {
            acc = &acc + &c.state.matrix().scale_re(c.weight);
        }
        let mix = DensityMatrix::from_update(acc);
        let bundle = if chains.len() > self.bundle_cap {
            Bundle::Collapsed { state: mix.clone() }
        } else {
            Bundle::Chains(chains)
        };
        Ok((bundle, mix))
    }
}

/// Normalize chain weights to their probabilities, dropping weights at or
/// below the floor and renormalizing.
fn normalize_weights(mut chains: Vec<WeightedChain>) -> Result<Vec<WeightedChain>> {
    let total: f64 = chains.iter().map(|c| c.probability).sum();
    if !(total > 0.0) {
        return Err(Error::EmptyBundle);
    }
    chains.retain(|c| c.probability / total > tol::P_MIN);
    let kept: f64 = chains.iter().map(|c| c.probability).sum();
    if !(kept > 0.0) {
        return Err(Error::EmptyBundle);
    }
    for c in chains.iter_mut() {
        c.weight = c.probability / kept;
    }
    Ok(chains)
}

/// Draw an index from unnormalized non-negative weights at quantile `u`.
fn sample_index(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
            acc += w;
            if u * total < acc {
                return i;
            }
        }
    }
    last_positive
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histories::history_probability;
    use crate::projector::ProjectorDecomposition;
    use crate::state::quadratic_entropy;
    use alloc::string::ToString;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn x_basis() -> ProjectorDecomposition {
        let plus = ComplexMatrix::from_fn(2, |_, _| C64::new(0.5, 0.0));
        let minus = ComplexMatrix::from_fn(2, |i, j| {
            if i == j {
                C64::new(0.5, 0.0)
            } else {
                C64::new(-0.5, 0.0)
            }
        });
        ProjectorDecomposition::new(alloc::vec![plus, minus], "x").unwrap()
    }

    fn coupled_hamiltonian(dim: usize) -> Hamiltonian {
        let mut hm = ComplexMatrix::zeros(dim);
        for i in 0..dim {
            hm.set(i, i, C64::new(0.3 * i as f64, 0.0));
        }
        for i in 0..dim - 1 {
            hm.set(i, i + 1, C64::new(0.4, -0.6));
            hm.set(i + 1, i, C64::new(0.4, 0.6));
        }
        Hamiltonian::new(hm).unwrap()
    }

    #[test]
    fn fresh_world_view() {
        let world = WorldState::init(
            DensityMatrix::maximally_mixed(2),
            Hamiltonian::zero(2),
            0.0,
        )
        .unwrap();
        assert_eq!(world.bundle_len(), 1);
        assert_eq!(world.weights(), alloc::vec![1.0]);
        assert!(world.realized().is_empty());
        assert!((world.entropy() - 2.0f64.ln()).abs() < 1e-12);
        assert!(!world.is_collapsed());
    }

    #[test]
    fn branching_sharpens_and_merging_restores() {
        let world = WorldState::init(
            DensityMatrix::maximally_mixed(2),
            Hamiltonian::zero(2),
            0.0,
        )
        .unwrap();
        let slot = EventSlot::new(1.0, ProjectorDecomposition::computational_basis(2));
        let (branched, p) = world.branch(slot, 0).unwrap();
        assert!((p - 0.5).abs() < 1e-14);
        assert!(branched.entropy() < 1e-12);
        assert_eq!(branched.realized().to_string(), "0");
        assert_eq!(branched.bundle_len(), 1);

        let merged = branched.merge_deterministic(0, 1.0).unwrap();
        assert_eq!(merged.realized().to_string(), "~");
        assert_eq!(merged.bundle_len(), 2);
        let w = merged.weights();
        assert!((w[0] - 0.5).abs() < 1e-13 && (w[1] - 0.5).abs() < 1e-13);
        assert!((merged.entropy() - 2.0f64.ln()).abs() < 1e-12);
        assert!(
            merged
                .rho_bar()
                .matrix()
                .max_abs_diff(DensityMatrix::maximally_mixed(2).matrix())
                < 1e-13
        );
    }

    #[test]
    fn nonzero_start_time_pulls_the_frame_back() {
        let h = coupled_hamiltonian(2);
        let rho0 = DensityMatrix::from_diagonal(&[0.8, 0.2]).unwrap();
        let world = WorldState::init(rho0.clone(), h.clone(), 2.0).unwrap();
        assert!(world.rho_bar().matrix().max_abs_diff(rho0.matrix()) < 1e-12);
        let frame = evolve_state(&rho0, &h, -2.0).unwrap();
        assert!(
            world
                .family()
                .initial_state()
                .matrix()
                .max_abs_diff(frame.matrix())
                < 1e-12
        );
        let (after, _) = world
            .branch(
                EventSlot::new(3.0, ProjectorDecomposition::computational_basis(2)),
                0,
            )
            .unwrap();
        assert!(
            after
                .recombined_state(after.now())
                .matrix()
                .max_abs_diff(after.rho_bar().matrix())
                < 1e-10
        );
    }

    #[test]
    fn sampled_branches_are_seeded() {
        let world = WorldState::init(
            DensityMatrix::maximally_mixed(2),
            Hamiltonian::zero(2),
            0.0,
        )
        .unwrap();
        let slot = || EventSlot::new(1.0, ProjectorDecomposition::computational_basis(2));
        let mut rng_a = ChaCha8Rng::seed_from_u64(11);
        let mut rng_b = ChaCha8Rng::seed_from_u64(11);
        let (_, k_a, p_a) = world.branch_sampled(slot(), &mut rng_a).unwrap();
        let (_, k_b, p_b) = world.branch_sampled(slot(), &mut rng_b).unwrap();
        assert_eq!(k_a, k_b);
        assert_eq!(p_a, p_b);
        assert!((p_a - 0.5).abs() < 1e-14);
    }

    #[test]
    fn impossible_outcomes_are_rejected() {
        let world =
            WorldState::init(DensityMatrix::pure_basis(2, 0), Hamiltonian::zero(2), 0.0).unwrap();
        let slot = EventSlot::new(1.0, ProjectorDecomposition::computational_basis(2));
        assert!(matches!(
            world.branch(slot, 1),
            Err(Error::ZeroBranch { .. })
        ));
    }

    #[test]
    fn erasure_requires_an_intact_record() {
        let world = WorldState::init(
            DensityMatrix::maximally_mixed(2),
            Hamiltonian::zero(2),
            0.0,
        )
        .unwrap();
        let (world, _) = world
            .branch(
                EventSlot::new(1.0, ProjectorDecomposition::computational_basis(2)),
                0,
            )
            .unwrap();
        assert!(matches!(
            world.merge_deterministic(5, 1.0),
            Err(Error::NotErasable { slot: 5 })
        ));
        let merged = world.merge_deterministic(0, 1.0).unwrap();
        assert!(matches!(
            merged.merge_deterministic(0, 1.0),
            Err(Error::NotErasable { slot: 0 })
        ));
    }

    #[test]
    fn time_reversal_is_rejected() {
        let world = WorldState::init(
            DensityMatrix::maximally_mixed(2),
            Hamiltonian::zero(2),
            0.0,
        )
        .unwrap();
        let (world, _) = world
            .branch(
                EventSlot::new(2.0, ProjectorDecomposition::computational_basis(2)),
                0,
            )
            .unwrap();
        assert!(matches!(
            world.branch(EventSlot::new(1.0, x_basis()), 0),
            Err(Error::TimeReversed { .. })
        ));
        assert!(matches!(
            world.merge_deterministic(0, 1.5),
            Err(Error::TimeReversed { .. })
        ));
    }

    #[test]
    fn fold_equals_erase_then_branch_at_equal_times() {
        let h = coupled_hamiltonian(4);
        let world = WorldState::init(DensityMatrix::maximally_mixed(4), h, 0.0).unwrap();
        let (world, _) = world
            .branch(EventSlot::new(1.0, ProjectorDecomposition::basis_split(4, 2)), 0)
            .unwrap();
        let (world, _) = world
            .branch(EventSlot::new(2.0, ProjectorDecomposition::basis_split(4, 1)), 1)
            .unwrap();

        let new_slot = || EventSlot::new(3.0, ProjectorDecomposition::basis_split(4, 3));
        let (folded, p_fold) = world.merge_with_event(0, new_slot(), 1).unwrap();
        let erased = world.merge_deterministic(0, 3.0).unwrap();
        let (sequential, p_seq) = erased.branch(new_slot(), 1).unwrap();

        assert!((p_fold - p_seq).abs() < 1e-12);
        assert!(
            folded
                .rho_bar()
                .matrix()
                .max_abs_diff(sequential.rho_bar().matrix())
                < 1e-10
        );
        let wf = folded.weights();
        let ws = sequential.weights();
        assert_eq!(wf.len(), ws.len());
        for (a, b) in wf.iter().zip(ws.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(folded.realized().to_string(), "~,1,1");
        assert_eq!(sequential.realized().to_string(), "~,1,1");
        assert!((folded.entropy() - sequential.entropy()).abs() < 1e-10);
    }

    #[test]
    fn fold_probability_matches_the_chain_ratio() {
        // The aggregated probability of the fold outcome equals the total
        // full-length chain mass over the total pre-event chain mass.
        let h = coupled_hamiltonian(2);
        let world = WorldState::init(DensityMatrix::maximally_mixed(2), h, 0.0).unwrap();
        let (world, _) = world
            .branch(
                EventSlot::new(1.0, ProjectorDecomposition::computational_basis(2)),
                0,
            )
            .unwrap();
        let new_slot = EventSlot::new(2.0, x_basis());
        let (folded, p) = world.merge_with_event(0, new_slot.clone(), 0).unwrap();

        let family = folded.family();
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..2 {
            num += history_probability(family, &ChainSelector::chosen(&[k, 0])).unwrap();
            den += history_probability(family, &ChainSelector::chosen(&[k])).unwrap();
        }
        assert!((p - num / den).abs() < 1e-12);
    }

    #[test]
    fn trivial_fold_reduces_to_plain_erasure() {
        let h = coupled_hamiltonian(2);
        let world = WorldState::init(DensityMatrix::maximally_mixed(2), h, 0.0).unwrap();
        let (world, _) = world
            .branch(
                EventSlot::new(1.0, ProjectorDecomposition::computational_basis(2)),
                0,
            )
            .unwrap();
        let trivial = EventSlot::new(2.0, ProjectorDecomposition::identity(2, "all"));
        let (folded, p) = world.merge_with_event(0, trivial, 0).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        let erased = world.merge_deterministic(0, 2.0).unwrap();
        assert!(
            folded
                .rho_bar()
                .matrix()
                .max_abs_diff(erased.rho_bar().matrix())
                < 1e-11
        );
        let wf = folded.weights();
        let we = erased.weights();
        for (a, b) in wf.iter().zip(we.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn bundle_collapse_past_the_cap() {
        let world = WorldState::init(
            DensityMatrix::maximally_mixed(2),
            Hamiltonian::zero(2),
            0.0,
        )
        .unwrap()
        .with_bundle_cap(2);
        let (world, _) = world
            .branch(
                EventSlot::new(1.0, ProjectorDecomposition::computational_basis(2)),
                0,
            )
            .unwrap();
        let (world, _) = world.branch(EventSlot::new(2.0, x_basis()), 0).unwrap();
        let world = world.merge_deterministic(0, 2.0).unwrap();
        assert_eq!(world.bundle_len(), 2);
        assert!(!world.is_collapsed());

        // Erasing the second slot wants 4 variants; the cap is 2.
        let world = world.merge_deterministic(1, 2.0).unwrap();
        assert!(world.is_collapsed());
        assert_eq!(world.bundle_len(), 1);
        assert_eq!(world.weights(), alloc::vec![1.0]);
        assert!(
            world
                .rho_bar()
                .matrix()
                .max_abs_diff(DensityMatrix::maximally_mixed(2).matrix())
                < 1e-12
        );

        // The collapsed world still branches, and record erasure keeps
        // working in its documented record-only form.
        let (world, k, p) = world
            .branch_sampled(
                EventSlot::new(3.0, ProjectorDecomposition::computational_basis(2)),
                &mut ChaCha8Rng::seed_from_u64(3),
            )
            .unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        assert!(world.is_collapsed());
        assert_eq!(world.realized().to_string(), alloc::format!("~,~,{k}"));
        let world = world.merge_deterministic(2, 4.0).unwrap();
        assert_eq!(world.realized().to_string(), "~,~,~");
        assert_eq!(world.realized().erased_slots(), alloc::vec![0, 1, 2]);
    }

    #[test]
    fn prospective_check_flags_interference_after_erasure() {
        let plus = DensityMatrix::new(ComplexMatrix::from_fn(2, |_, _| C64::new(0.5, 0.0))).unwrap();
        let world = WorldState::init(plus, Hamiltonian::zero(2), 0.0).unwrap();
        let (world, _) = world
            .branch(
                EventSlot::new(1.0, ProjectorDecomposition::computational_basis(2)),
                0,
            )
            .unwrap();

        // One chain, orthogonal outcomes: nothing can interfere.
        let probe = EventSlot::new(2.0, x_basis());
        let report = world
            .prospective_consistency(&probe, ConsistencyMode::Medium, 1e-9)
            .unwrap()
            .unwrap();
        assert!(report.consistent);

        // After erasure the two z-variants interfere at the x-readout.
        let world = world.merge_deterministic(0, 1.0).unwrap();
        let report = world
            .prospective_consistency(&probe, ConsistencyMode::Medium, 1e-9)
            .unwrap()
            .unwrap();
        assert!(!report.consistent);
        let (_, _, worst) = report
            .worst
            .map(|(a, b, r)| (a, b, r))
            .expect("off-diagonal pairs exist");
        assert!((worst - 0.25).abs() < 1e-12);
    }

    #[test]
    fn entropy_measures_agree_on_ordering_through_a_cycle() {
        // Both entropies drop under branching and rise under merging.
        let world = WorldState::init(
            DensityMatrix::maximally_mixed(2),
            Hamiltonian::zero(2),
            0.0,
        )
        .unwrap();
        let (branched, _) = world
            .branch(
                EventSlot::new(1.0, ProjectorDecomposition::computational_basis(2)),
                0,
            )
            .unwrap();
        let merged = branched.merge_deterministic(0, 1.0).unwrap();
        let s = |w: &WorldState| {
            (
                von_neumann_entropy(w.rho_bar()),
                quadratic_entropy(w.rho_bar()),
            )
        };
        let (s0, q0) = s(&world);
        let (s1, q1) = s(&branched);
        let (s2, q2) = s(&merged);
        assert!(s1 < s0 && q1 < q0);
        assert!(s2 > s1 && q2 > q1);
        assert!((s2 - s0).abs() < 1e-12);
    }
}
