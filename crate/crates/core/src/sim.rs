//! Seeded world simulator: a fixed cadence of projective events against a
//! record store of bounded capacity. When the store overflows, a record is
//! chosen for erasure and its history branches merge, either immediately or
//! folded into the next event.

use crate::decoherence::ConsistencyMode;
use crate::error::{Error, Result};
use crate::histories::EventSlot;
use crate::randgen::{
    child_seed, random_density, random_hamiltonian, random_projector_decomposition, seeded_rng,
};
use crate::state::DensityMatrix;
use crate::tol;
use crate::world::{WorldSnapshot, WorldState, DEFAULT_BUNDLE_CAP};
use alloc::vec::Vec;
use rand::Rng;

/// Default ceiling on exhaustive-mode leaves.
pub const DEFAULT_ENUMERATION_CAP: usize = 4096;

/// Entropy comparisons in summaries tolerate this much roundoff drift.
pub const MONOTONE_SLACK: f64 = 1e-12;

/// What happens when the record store runs over capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeMode {
    /// Nothing is ever erased; the store just grows.
    Off,
    /// The victim's branches merge immediately, with no new event.
    Deterministic,
    /// The erasure folds into the next event as one transformation.
    Evented,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    /// One realized outcome per event, drawn from the branch distribution.
    Sampled,
    /// Every outcome tracked, weighted by probability mass.
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    /// Maximally mixed.
    Uniform,
    /// Random density matrix of the given rank.
    Rank(usize),
}

/// Which intact record is erased on overflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErasurePolicy {
    Oldest,
    /// Protect the newest record, erase the one before it.
    NewestButOne,
    Random,
}

impl ErasurePolicy {
    pub fn pick<R: Rng + ?Sized>(&self, ledger: &RecordLedger, rng: &mut R) -> Option<usize> {
        let intact = ledger.intact();
        if intact.is_empty() {
            return None;
        }
        let i = match self {
            Self::Oldest => 0,
            Self::NewestButOne => intact.len().saturating_sub(2),
            Self::Random => rng.gen_range(0..intact.len()),
        };
        Some(intact[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Init,
    Branch,
    Merge,
    MergeBranch,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Init => "init",
            Self::Branch => "branch",
            Self::Merge => "merge",
            Self::MergeBranch => "merge_branch",
        }
    }
}

/// The classical record store: which event slots still have an intact
/// outcome on file, oldest first.
#[derive(Debug, Clone)]
pub struct RecordLedger {
    capacity: usize,
    intact: Vec<usize>,
}

impl RecordLedger {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            intact: Vec::new(),
        }
    }

    pub fn record(&mut self, slot: usize) {
        debug_assert!(!self.intact.contains(&slot), "slot recorded twice");
        self.intact.push(slot);
    }

    pub fn remove(&mut self, slot: usize) -> bool {
        match self.intact.iter().position(|&s| s == slot) {
            Some(i) => {
                self.intact.remove(i);
                true
            }
            None => false,
        }
    }

    pub fn intact(&self) -> &[usize] {
        &self.intact
    }

    pub fn occupancy(&self) -> usize {
        self.intact.len()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn over_capacity(&self) -> bool {
        self.intact.len() > self.capacity
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dim: usize,
    pub steps: usize,
    pub seed: u64,
    /// Outcomes per event; ranks are balanced over the dimension.
    pub outcomes_per_event: usize,
    /// Intact records allowed before a merge is forced.
    pub record_capacity: usize,
    pub merge_mode: MergeMode,
    pub mode: SimMode,
    pub hamiltonian_scale: f64,
    pub initial_state: InitialState,
    pub erasure_policy: ErasurePolicy,
    /// Check each prospective event against the live bundle.
    pub consistency_check: bool,
    pub consistency_tolerance: f64,
    /// Exhaustive mode refuses to track more leaves than this.
    pub enumeration_cap: usize,
    /// Bundle sizes past this collapse to the aggregated state.
    pub bundle_cap: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dim: 8,
            steps: 8,
            seed: 0,
            outcomes_per_event: 2,
            record_capacity: 2,
            merge_mode: MergeMode::Deterministic,
            mode: SimMode::Sampled,
            hamiltonian_scale: 1.0,
            initial_state: InitialState::Rank(2),
            erasure_policy: ErasurePolicy::Oldest,
            consistency_check: false,
            consistency_tolerance: 1e-6,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            bundle_cap: DEFAULT_BUNDLE_CAP,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason| Err(Error::BadConfig { field, reason });
        if self.dim < 2 {
            return bad("dim", "must be at least 2");
        }
        if self.steps == 0 {
            return bad("steps", "must be at least 1");
        }
        if self.outcomes_per_event == 0 || self.outcomes_per_event > self.dim {
            return bad("outcomes_per_event", "must be between 1 and dim");
        }
        if !self.hamiltonian_scale.is_finite() || self.hamiltonian_scale < 0.0 {
            return bad("hamiltonian_scale", "must be finite and non-negative");
        }
        if let InitialState::Rank(r) = self.initial_state {
            if r == 0 || r > self.dim {
                return bad("initial_state", "rank must be between 1 and dim");
            }
        }
        if !(self.consistency_tolerance > 0.0) || !self.consistency_tolerance.is_finite() {
            return bad("consistency_tolerance", "must be positive and finite");
        }
        if self.bundle_cap == 0 {
            return bad("bundle_cap", "must be at least 1");
        }
        if self.mode == SimMode::Exhaustive {
            // Worst-case leaf count, checked before any work happens.
            let mut needed = 1usize;
            for _ in 0..self.steps {
                needed = match needed.checked_mul(self.outcomes_per_event) {
                    Some(n) if n <= self.enumeration_cap => n,
                    _ => {
                        return bad(
                            "enumeration_cap",
                            "exhaustive expansion can exceed the cap",
                        )
                    }
                };
            }
        }
        Ok(())
    }
}

/// Ranks as equal as possible: `dim = 8, parts = 3` gives `[3, 3, 2]`.
pub fn balanced_ranks(dim: usize, parts: usize) -> Vec<usize> {
    assert!(parts >= 1 && parts <= dim, "parts must be in 1..=dim");
    let base = dim / parts;
    let extra = dim % parts;
    (0..parts).map(|i| base + usize::from(i < extra)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub step: usize,
    pub time: f64,
    pub event: EventKind,
    pub entropy: f64,
    /// Sampled: probability of the realized outcome (1 for pure merges).
    /// Exhaustive: total surviving probability mass.
    pub probability: f64,
    pub bundle_size: usize,
    pub ledger_occupancy: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyRecord {
    pub step: usize,
    pub worst: f64,
    pub violations: usize,
    pub consistent: bool,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    pub consistency: Vec<ConsistencyRecord>,
    /// Probability mass dropped by exhaustive pruning; 0 when sampling.
    pub mass_deficit: f64,
    /// An erasure was scheduled but the run ended before its event.
    pub pending_erasure: Option<usize>,
    /// End-of-run world view; absent in exhaustive mode, which tracks
    /// many worlds at once.
    pub final_snapshot: Option<WorldSnapshot>,
}

/// Run one world simulation. The trajectory is a pure function of the
/// config; equal configs give identical rows, bit for bit.
pub fn run_world(config: &SimConfig) -> Result<Trajectory> {
    config.validate()?;
    let mut master = seeded_rng(config.seed);
    // Stream derivation order is part of the output format; changing it
    // changes every seeded run.
    let h_seed = child_seed(&mut master);
    let init_seed = child_seed(&mut master);
    let decomp_seed = child_seed(&mut master);
    let outcome_seed = child_seed(&mut master);

    let h = random_hamiltonian(config.dim, config.hamiltonian_scale, &mut seeded_rng(h_seed));
    let rho0 = match config.initial_state {
        InitialState::Uniform => DensityMatrix::maximally_mixed(config.dim),
        InitialState::Rank(r) => random_density(config.dim, r, &mut seeded_rng(init_seed))?,
    };
    let world = WorldState::init(rho0, h, 0.0)?.with_bundle_cap(config.bundle_cap);
    let mut decomp_rng = seeded_rng(decomp_seed);
    let mut outcome_rng = seeded_rng(outcome_seed);
    match config.mode {
        SimMode::Sampled => run_sampled(config, world, &mut decomp_rng, &mut outcome_rng),
        SimMode::Exhaustive => run_exhaustive(config, world, &mut decomp_rng, &mut outcome_rng),
    }
}

fn sampled_row(
    step: usize,
    time: f64,
    event: EventKind,
    world: &WorldState,
    probability: f64,
    ledger: &RecordLedger,
) -> TrajectoryRow {
    TrajectoryRow {
        step,
        time,
        event,
        entropy: world.entropy(),
        probability,
        bundle_size: world.bundle_len(),
        ledger_occupancy: ledger.occupancy(),
    }
}

fn run_sampled<R: Rng + ?Sized>(
    config: &SimConfig,
    mut world: WorldState,
    decomp_rng: &mut R,
    outcome_rng: &mut R,
) -> Result<Trajectory> {
    let ranks = balanced_ranks(config.dim, config.outcomes_per_event);
    let mut ledger = RecordLedger::new(config.record_capacity);
    let mut pending: Option<usize> = None;
    let mut rows = alloc::vec![sampled_row(0, 0.0, EventKind::Init, &world, 1.0, &ledger)];
    let mut consistency = Vec::new();

    for step in 1..=config.steps {
        let t = step as f64;
        let dec = random_projector_decomposition(config.dim, &ranks, decomp_rng)
            .expect("balanced ranks partition the dimension");
        let slot = EventSlot::new(t, dec);

        if config.consistency_check {
            if let Some(rep) = world.prospective_consistency(
                &slot,
                ConsistencyMode::Medium,
                config.consistency_tolerance,
            )? {
                consistency.push(ConsistencyRecord {
                    step,
                    worst: rep.worst.map_or(0.0, |(_, _, r)| r),
                    violations: rep.violations,
                    consistent: rep.consistent,
                });
            }
        }

        match pending.take() {
            Some(victim) => {
                let (next, _, p) = world.merge_with_event_sampled(victim, slot, outcome_rng)?;
                world = next;
                ledger.record(world.family().len() - 1);
                rows.push(sampled_row(step, t, EventKind::MergeBranch, &world, p, &ledger));
            }
            None => {
                let (next, _, p) = world.branch_sampled(slot, outcome_rng)?;
                world = next;
                ledger.record(world.family().len() - 1);
                rows.push(sampled_row(step, t, EventKind::Branch, &world, p, &ledger));
                if config.merge_mode == MergeMode::Deterministic && ledger.over_capacity() {
                    let victim = config
                        .erasure_policy
                        .pick(&ledger, outcome_rng)
                        .expect("over-capacity ledger is nonempty");
                    world = world.merge_deterministic(victim, t)?;
                    ledger.remove(victim);
                    rows.push(sampled_row(step, t, EventKind::Merge, &world, 1.0, &ledger));
                }
            }
        }

        if config.merge_mode == MergeMode::Evented && ledger.over_capacity() {
            let victim = config
                .erasure_policy
                .pick(&ledger, outcome_rng)
                .expect("over-capacity ledger is nonempty");
            ledger.remove(victim);
            pending = Some(victim);
        }
    }

    Ok(Trajectory {
        rows,
        consistency,
        mass_deficit: 0.0,
        pending_erasure: pending,
        final_snapshot: Some(world.snapshot()),
    })
}

struct Leaf {
    world: WorldState,
    mass: f64,
}

fn exhaustive_row(
    step: usize,
    time: f64,
    event: EventKind,
    leaves: &[Leaf],
    ledger: &RecordLedger,
) -> TrajectoryRow {
    let mass: f64 = leaves.iter().map(|l| l.mass).sum();
    let entropy = leaves.iter().map(|l| l.mass * l.world.entropy()).sum::<f64>() / mass;
    TrajectoryRow {
        step,
        time,
        event,
        entropy,
        probability: mass,
        bundle_size: leaves.iter().map(|l| l.world.bundle_len()).max().unwrap_or(0),
        ledger_occupancy: ledger.occupancy(),
    }
}

fn run_exhaustive<R: Rng + ?Sized>(
    config: &SimConfig,
    world: WorldState,
    decomp_rng: &mut R,
    outcome_rng: &mut R,
) -> Result<Trajectory> {
    let ranks = balanced_ranks(config.dim, config.outcomes_per_event);
    let mut ledger = RecordLedger::new(config.record_capacity);
    let mut pending: Option<usize> = None;
    let mut deficit = 0.0;
    let mut leaves = alloc::vec![Leaf { world, mass: 1.0 }];
    let mut rows = alloc::vec![exhaustive_row(0, 0.0, EventKind::Init, &leaves, &ledger)];
    let mut consistency = Vec::new();

    for step in 1..=config.steps {
        let t = step as f64;
        let dec = random_projector_decomposition(config.dim, &ranks, decomp_rng)
            .expect("balanced ranks partition the dimension");

        if config.consistency_check {
            let probe = EventSlot::new(t, dec.clone());
            let mut worst = 0.0;
            let mut violations = 0;
            let mut any = false;
            for leaf in &leaves {
                if let Some(rep) = leaf.world.prospective_consistency(
                    &probe,
                    ConsistencyMode::Medium,
                    config.consistency_tolerance,
                )? {
                    any = true;
                    violations += rep.violations;
                    if let Some((_, _, r)) = rep.worst {
                        if r > worst {
                            worst = r;
                        }
                    }
                }
            }
            if any {
                consistency.push(ConsistencyRecord {
                    step,
                    worst,
                    violations,
                    consistent: violations == 0,
                });
            }
        }

        // The erasure decision is shared by every leaf, so the ledger
        // stays outcome-independent.
        let fold_victim = pending.take();
        let mut next_leaves = Vec::new();
        for leaf in &leaves {
            for k in 0..config.outcomes_per_event {
                let slot = EventSlot::new(t, dec.clone());
                let res = match fold_victim {
                    Some(v) => leaf.world.merge_with_event(v, slot, k),
                    None => leaf.world.branch(slot, k),
                };
                match res {
                    Ok((w, p)) => {
                        let mass = leaf.mass * p;
                        if mass <= tol::P_MIN {
                            deficit += mass;
                        } else {
                            next_leaves.push(Leaf { world: w, mass });
                        }
                    }
                    Err(Error::ZeroBranch { probability }) => {
                        deficit += leaf.mass * probability.max(0.0);
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        if next_leaves.is_empty() {
            return Err(Error::EmptyBundle);
        }
        if next_leaves.len() > config.enumeration_cap {
            return Err(Error::CapExceeded {
                needed: next_leaves.len(),
                cap: config.enumeration_cap,
            });
        }
        leaves = next_leaves;
        ledger.record(leaves[0].world.family().len() - 1);
        let kind = if fold_victim.is_some() {
            EventKind::MergeBranch
        } else {
            EventKind::Branch
        };
        rows.push(exhaustive_row(step, t, kind, &leaves, &ledger));

        if config.merge_mode == MergeMode::Deterministic && ledger.over_capacity() {
            let victim = config
                .erasure_policy
                .pick(&ledger, outcome_rng)
                .expect("over-capacity ledger is nonempty");
            for leaf in leaves.iter_mut() {
                leaf.world = leaf.world.merge_deterministic(victim, t)?;
            }
            ledger.remove(victim);
            rows.push(exhaustive_row(step, t, EventKind::Merge, &leaves, &ledger));
        }
        if config.merge_mode == MergeMode::Evented && ledger.over_capacity() {
            let victim = config
                .erasure_policy
                .pick(&ledger, outcome_rng)
                .expect("over-capacity ledger is nonempty");
            ledger.remove(victim);
            pending = Some(victim);
        }
    }

    Ok(Trajectory {
        rows,
        consistency,
        mass_deficit: deficit,
        pending_erasure: pending,
        final_snapshot: None,
    })
}

#[derive(Debug, Clone)]
pub struct StepStat {
    /// Row index within the trajectories (0 is the init row).
    pub row: usize,
    /// Trajectories long enough to have this row.
    pub present: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone)]
pub struct SimSummary {
    pub trajectories: usize,
    pub rows: Vec<StepStat>,
    /// Fraction of adjacent row pairs with non-decreasing entropy
    /// (within [`MONOTONE_SLACK`]).
    pub nondecreasing_fraction: f64,
    pub nonincreasing_fraction: f64,
    pub mean_initial_entropy: f64,
    pub mean_final_entropy: f64,
}

/// Aggregate entropy statistics over trajectories from repeated runs.
pub fn summarize(trajectories: &[Trajectory]) -> SimSummary {
    assert!(!trajectories.is_empty(), "nothing to summarize");
    let longest = trajectories.iter().map(|t| t.rows.len()).max().unwrap_or(0);
    let mut rows = Vec::with_capacity(longest);
    for r in 0..longest {
        let mut present = 0;
        let mut sum = 0.0;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for t in trajectories {
            if let Some(row) = t.rows.get(r) {
                present += 1;
                sum += row.entropy;
                min = min.min(row.entropy);
                max = max.max(row.entropy);
            }
        }
        rows.push(StepStat {
            row: r,
            present,
            mean: sum / present as f64,
            min,
            max,
        });
    }
    let mut up = 0usize;
    let mut down = 0usize;
    let mut transitions = 0usize;
    for t in trajectories {
        for w in t.rows.windows(2) {
            transitions += 1;
            if w[1].entropy >= w[0].entropy - MONOTONE_SLACK {
                up += 1;
            }
            if w[1].entropy <= w[0].entropy + MONOTONE_SLACK {
                down += 1;
            }
        }
    }
    let frac = |n: usize| {
        if transitions == 0 {
            1.0
        } else {
            n as f64 / transitions as f64
        }
    };
    SimSummary {
        trajectories: trajectories.len(),
        rows,
        nondecreasing_fraction: frac(up),
        nonincreasing_fraction: frac(down),
        mean_initial_entropy: trajectories.iter().map(|t| t.rows[0].entropy).sum::<f64>()
            / trajectories.len() as f64,
        mean_final_entropy: trajectories
            .iter()
            .map(|t| t.rows.last().expect("rows never empty").entropy)
            .sum::<f64>()
            / trajectories.len() as f64,
    }
}
