//! Numerical checks of the entropy inequalities that govern branching and
//! merging, plus seeded ensemble suites that hammer them across random
//! instances. A violating instance is reported with enough seed data to
//! replay it exactly.

use crate::error::{Error, Result};
use crate::histories::{
    conditional_state_direct, conditional_state_step, heisenberg_projector, history_probability,
    HistoryFamily,
};
use crate::matrix::ComplexMatrix;
use crate::projector::ProjectorDecomposition;
use crate::randgen::{
    child_seed, random_density, random_family, random_projector_decomposition, random_ranks,
    seeded_rng,
};
use crate::state::{quadratic_entropy, von_neumann_entropy, DensityMatrix};
use crate::tol;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand::Rng;

/// Outcome of a single inequality check. `slack` is the margin by which
/// the inequality holds; negative slack beyond the tolerance is a
/// violation.
#[derive(Debug, Clone)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    pub tolerance: f64,
}

impl InequalityReport {
    fn from_slack(lhs: f64, rhs: f64, slack: f64, tolerance: f64) -> Self {
        Self {
            lhs,
            rhs,
            slack,
            holds: slack >= -tolerance,
            tolerance,
        }
    }
}

fn check_dims(rho: &DensityMatrix, d: &ProjectorDecomposition) -> Result<()> {
    if rho.dim() != d.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: d.dim(),
        });
    }
    Ok(())
}

/// Branch probabilities and conditional states `E ρ E / Tr(E ρ)`,
/// skipping outcomes of negligible probability.
fn branch_states(rho: &DensityMatrix, d: &ProjectorDecomposition) -> Vec<(f64, DensityMatrix)> {
    let mut out = Vec::with_capacity(d.outcomes());
    for k in 0..d.outcomes() {
        let e = d.projector(k);
        let w = e.mul_mat(rho.matrix()).trace().re;
        if w > tol::P_MIN {
            out.push((w, DensityMatrix::from_update(rho.matrix().sandwiched_by(e))));
        }
    }
    out
}

/// Measurement cannot raise the expected entropy: the probability-weighted
/// mean entropy of the branch states is at most the entropy of the input,
/// `Σ_k p_k s[ρ_k] ≤ s[ρ]`.
pub fn check_groenewold_lindblad(
    rho: &DensityMatrix,
    d: &ProjectorDecomposition,
    tolerance: f64,
) -> Result<InequalityReport> {
    check_dims(rho, d)?;
    let lhs: f64 = branch_states(rho, d)
        .iter()
        .map(|(p, s)| p * von_neumann_entropy(s))
        .sum();
    let rhs = von_neumann_entropy(rho);
    Ok(InequalityReport::from_slack(lhs, rhs, rhs - lhs, tolerance))
}

/// Merging the branches back into one mixture cannot lower the entropy:
/// `s[Σ_k E_k ρ E_k] ≥ s[ρ]`.
pub fn check_branch_merge_inequality(
    rho: &DensityMatrix,
    d: &ProjectorDecomposition,
    tolerance: f64,
) -> Result<InequalityReport> {
    check_dims(rho, d)?;
    let mut m = ComplexMatrix::zeros(rho.dim());
    for k in 0..d.outcomes() {
        m = &m + &rho.matrix().sandwiched_by(d.projector(k));
    }
    let merged = DensityMatrix::from_update(m);
    let lhs = von_neumann_entropy(rho);
    let rhs = von_neumann_entropy(&merged);
    Ok(InequalityReport::from_slack(lhs, rhs, rhs - lhs, tolerance))
}

/// The quadratic entropy `-Tr ρ²` obeys the same measurement inequality
/// as the von Neumann entropy: `Σ_k p_k s'[ρ_k] ≤ s'[ρ]`.
pub fn check_quadratic_variant(
    rho: &DensityMatrix,
    d: &ProjectorDecomposition,
    tolerance: f64,
) -> Result<InequalityReport> {
    check_dims(rho, d)?;
    let lhs: f64 = branch_states(rho, d)
        .iter()
        .map(|(p, s)| p * quadratic_entropy(s))
        .sum();
    let rhs = quadratic_entropy(rho);
    Ok(InequalityReport::from_slack(lhs, rhs, rhs - lhs, tolerance))
}

/// Depth-averaged conditional entropies of a history family.
#[derive(Debug, Clone)]
pub struct PropositionReport {
    /// `averages[l]` is `Σ_sel P(sel) s[ρ_sel]` over depth-`l` prefixes;
    /// index 0 is the entropy of the initial state.
    pub averages: Vec<f64>,
    /// Largest adjacent-depth increase, `max_l (A_{l+1} - A_l)`.
    pub worst_increase: f64,
    pub non_increasing: bool,
    pub tolerance: f64,
}

/// Check that the probability-averaged entropy over a family's branches
/// never increases with depth.
pub fn check_proposition(
    family: &HistoryFamily,
    cap: usize,
    tolerance: f64,
) -> Result<PropositionReport> {
    let mut averages = Vec::with_capacity(family.len() + 1);
    for depth in 0..=family.len() {
        let mut avg = 0.0;
        for sel in family.prefix_selectors(depth, cap)? {
            let p = history_probability(family, &sel)?;
            if p > tol::P_MIN {
                avg += p * von_neumann_entropy(&conditional_state_direct(family, &sel)?);
            }
        }
        averages.push(avg);
    }
    let worst_increase = averages
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(PropositionReport {
        non_increasing: worst_increase <= tolerance,
        averages,
        worst_increase,
        tolerance,
    })
}

/// Enough data to regenerate one ensemble instance.
#[derive(Debug, Clone)]
pub struct InstanceDigest {
    /// Seed of the instance's own RNG stream (not the ensemble seed).
    pub seed: u64,
    /// Index within the ensemble.
    pub instance: usize,
    pub dim: usize,
    /// Free-form shape info: state rank, projector ranks.
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct FailureRecord {
    pub digest: InstanceDigest,
    pub slack: f64,
    pub detail: String,
}

/// Aggregate result of one verification suite.
#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub instances: usize,
    /// Individual comparisons evaluated (several per instance for some
    /// suites).
    pub checks: usize,
    pub violations: usize,
    /// Smallest margin seen across all checks; negative means some check
    /// came out on the wrong side by that much.
    pub worst_slack: f64,
    /// Violating instances, capped at [`MAX_FAILURES`].
    pub failures: Vec<FailureRecord>,
}

/// Cap on stored failure records per suite.
pub const MAX_FAILURES: usize = 16;

impl SuiteOutcome {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            instances: 0,
            checks: 0,
            violations: 0,
            worst_slack: f64::INFINITY,
            failures: Vec::new(),
        }
    }

    fn push_check(&mut self, slack: f64, violated: bool, failure: impl FnOnce() -> FailureRecord) {
        self.checks += 1;
        if slack < self.worst_slack {
            self.worst_slack = slack;
        }
        if violated {
            self.violations += 1;
            if self.failures.len() < MAX_FAILURES {
                self.failures.push(failure());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InequalityKind {
    GroenewoldLindblad,
    BranchMerge,
    Quadratic,
}

impl InequalityKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::GroenewoldLindblad => "groenewold_lindblad",
            Self::BranchMerge => "branch_merge",
            Self::Quadratic => "quadratic",
        }
    }
}

/// Run one inequality over `instances` random (state, decomposition)
/// pairs, cycling through `dims`. Fully determined by `seed`.
pub fn run_inequality_suite(
    kind: InequalityKind,
    dims: &[usize],
    instances: usize,
    seed: u64,
    tolerance: f64,
) -> SuiteOutcome {
    assert!(!dims.is_empty(), "need at least one dimension");
    assert!(dims.iter().all(|&d| d >= 2), "dimensions must be at least 2");
    let mut outcome = SuiteOutcome::new(kind.name());
    let mut master = seeded_rng(seed);
    for i in 0..instances {
        let sub = child_seed(&mut master);
        let mut rng = seeded_rng(sub);
        let dim = dims[i % dims.len()];
        let rank = rng.gen_range(1..=dim);
        let rho = random_density(dim, rank, &mut rng).expect("rank in range");
        let parts = rng.gen_range(2..=dim.min(4));
        let ranks = random_ranks(dim, parts, &mut rng);
        let d = random_projector_decomposition(dim, &ranks, &mut rng).expect("ranks partition dim");
        let report = match kind {
            InequalityKind::GroenewoldLindblad => check_groenewold_lindblad(&rho, &d, tolerance),
            InequalityKind::BranchMerge => check_branch_merge_inequality(&rho, &d, tolerance),
            InequalityKind::Quadratic => check_quadratic_variant(&rho, &d, tolerance),
        }
        .expect("dimensions match by construction");
        outcome.instances += 1;
        outcome.push_check(report.slack, !report.holds, || FailureRecord {
            digest: InstanceDigest {
                seed: sub,
                instance: i,
                dim,
                note: format!("state rank {rank}, projector ranks {ranks:?}"),
            },
            slack: report.slack,
            detail: format!("lhs {} vs rhs {}", report.lhs, report.rhs),
        });
    }
    outcome
}

/// Per random family: total probability over complete histories must be 1
/// (within [`tol::UNIT_SUM`]), and the one-shot conditional state must
/// match the step-by-step recursion (within [`tol::RECURSION`]).
pub fn run_family_suite(instances: usize, seed: u64, cap: usize) -> SuiteOutcome {
    let mut outcome = SuiteOutcome::new("families");
    let mut master = seeded_rng(seed);
    for i in 0..instances {
        let sub = child_seed(&mut master);
        let mut rng = seeded_rng(sub);
        let dim = rng.gen_range(2..=8);
        let family = random_family(dim, 4, &mut rng);
        let digest = |note: String| InstanceDigest {
            seed: sub,
            instance: i,
            dim,
            note,
        };
        let selectors = family.full_selectors(cap).expect("family fits under cap");
        let mut total = 0.0;
        let mut best = selectors[0].clone();
        let mut best_p = -1.0;
        for sel in &selectors {
            let p = history_probability(&family, sel).expect("selector is complete");
            total += p;
            if p > best_p {
                best_p = p;
                best = sel.clone();
            }
        }
        let sum_gap = (total - 1.0).abs();
        outcome.push_check(tol::UNIT_SUM - sum_gap, sum_gap > tol::UNIT_SUM, || {
            FailureRecord {
                digest: digest(format!("{} slots", family.len())),
                slack: tol::UNIT_SUM - sum_gap,
                detail: format!("probabilities sum to {total}"),
            }
        });

        // The most likely history always clears the zero-branch cutoff.
        let direct = conditional_state_direct(&family, &best).expect("best branch is nonzero");
        let mut state = family.initial_state().clone();
        let mut w_prod = 1.0;
        for (idx, out) in best.outcomes().iter().enumerate() {
            let k = out.chosen().expect("full selector");
            let slot = family.slot(idx);
            let e = heisenberg_projector(
                slot.decomposition.projector(k),
                family.hamiltonian(),
                slot.time,
            );
            let (next, w) = conditional_state_step(&state, &e).expect("best branch is nonzero");
            state = next;
            w_prod *= w;
        }
        let gap = state
            .matrix()
            .max_abs_diff(direct.matrix())
            .max((w_prod - best_p).abs());
        outcome.push_check(tol::RECURSION - gap, gap > tol::RECURSION, || FailureRecord {
            digest: digest(format!("selector {best}")),
            slack: tol::RECURSION - gap,
            detail: format!("recursion and direct forms differ by {gap:.3e}"),
        });
        outcome.instances += 1;
    }
    outcome
}

/// Depth-monotonicity of averaged branch entropies over random families.
pub fn run_proposition_suite(
    instances: usize,
    seed: u64,
    cap: usize,
    tolerance: f64,
) -> SuiteOutcome {
    let mut outcome = SuiteOutcome::new("proposition");
    let mut master = seeded_rng(seed);
    for i in 0..instances {
        let sub = child_seed(&mut master);
        let mut rng = seeded_rng(sub);
        let dim = rng.gen_range(2..=8);
        let family = random_family(dim, 4, &mut rng);
        let report = check_proposition(&family, cap, tolerance).expect("family fits under cap");
        outcome.instances += 1;
        for w in report.averages.windows(2) {
            let slack = w[0] - w[1];
            outcome.push_check(slack, slack < -tolerance, || FailureRecord {
                digest: InstanceDigest {
                    seed: sub,
                    instance: i,
                    dim,
                    note: format!("{} slots", family.len()),
                },
                slack,
                detail: format!("averaged entropy rose from {} to {}", w[0], w[1]),
            });
        }
    }
    outcome
}
