#![cfg_attr(not(feature = "std"), no_std)]

//! Simulation of a closed quantum world described by consistent histories,
//! where histories both branch (projective events) and merge (record decay).
//!
//! The crate is organized around a small set of dense complex-matrix
//! primitives ([`matrix`], [`eig`], [`state`], [`projector`]), the chain
//! operators and conditional states of a history family ([`histories`],
//! [`decoherence`]), the world-state bundle with its branch/merge evolutions
//! ([`world`]), numerical checks of the entropy inequalities that govern
//! those evolutions ([`verify`]), and a seeded record-saturation simulator
//! ([`sim`], [`randgen`]).
//!
//! Everything here is `no_std`-compatible (with `alloc`); IO, file formats
//! and the CLI live in the companion `histmerge-cli` crate.

extern crate alloc;

pub mod eig;
pub mod error;
pub mod matrix;
pub mod projector;
pub mod state;
pub mod validate;
pub mod decoherence;
pub mod histories;
pub mod randgen;
pub mod sim;
pub mod verify;
pub mod world;

/// Numerical tolerances used by constructors, validators and checkers.
///
/// Chosen for double-precision spectral methods at dimensions up to 64.
pub mod tol {
    /// Hermiticity residual bound (max-abs entry of `m - m†`).
    pub const HERM: f64 = 1e-9;
    /// Unit-trace residual bound for density matrices.
    pub const TRACE: f64 = 1e-9;
    /// Projector residual bound: idempotency, orthogonality, completeness.
    pub const PROJ: f64 = 1e-9;
    /// Density-matrix eigenvalues may dip this far below zero.
    pub const PSD: f64 = 1e-10;
    /// Eigenvalues at or below this are treated as exact zeros in entropy
    /// sums (`0 ln 0 = 0` by continuity).
    pub const EIG_FLOOR: f64 = 1e-12;
    /// Branch probabilities at or below this are treated as impossible;
    /// no conditional state exists for such a branch.
    pub const P_MIN: f64 = 1e-12;
    /// Slack below which an entropy inequality counts as violated.
    pub const VIOLATION: f64 = 1e-9;
    /// Allowed drift of a complete probability sum away from 1.
    pub const UNIT_SUM: f64 = 1e-12;
    /// Allowed gap between the one-shot conditional state and the
    /// step-by-step recursion that should equal it.
    pub const RECURSION: f64 = 1e-10;
}

pub use error::{Error, Result};
pub use matrix::{C64, ComplexMatrix};
pub use eig::{hermitian_eig, HermitianEig};
pub use state::{
    evolve_state, evolve_unitary, quadratic_entropy, von_neumann_entropy, DensityMatrix,
    Hamiltonian,
};
pub use projector::ProjectorDecomposition;
pub use validate::{Validate, ValidationReport, Violation, ViolationKind};
pub use histories::{
    chain_operator, conditional_state_direct, conditional_state_step, heisenberg_projector,
    history_probability, ChainSelector, EventSlot, HistoryFamily, SlotOutcome,
};
pub use decoherence::{
    check_consistency, decoherence_functional, decoherence_functional_with_cap, ConsistencyMode,
    ConsistencyReport, DecoherenceMatrix, DEFAULT_CHAIN_CAP,
};
pub use world::{WeightedChain, WorldSnapshot, WorldState, DEFAULT_BUNDLE_CAP};
pub use randgen::{
    random_density, random_family, random_hamiltonian, random_projector_decomposition,
    random_ranks, random_unitary, seeded_rng, standard_normal,
};
pub use verify::{
    check_branch_merge_inequality, check_groenewold_lindblad, check_proposition,
    check_quadratic_variant, run_family_suite, run_inequality_suite, run_proposition_suite,
    FailureRecord, InequalityKind, InequalityReport, InstanceDigest, PropositionReport,
    SuiteOutcome,
};
pub use sim::{
    balanced_ranks, run_world, summarize, ConsistencyRecord, ErasurePolicy, EventKind,
    InitialState, MergeMode, RecordLedger, SimConfig, SimMode, SimSummary, StepStat, Trajectory,
    TrajectoryRow, DEFAULT_ENUMERATION_CAP,
};
