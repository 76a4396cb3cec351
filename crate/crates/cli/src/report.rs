//! Serializable shapes for everything the CLI emits: verification
//! summaries, simulation summaries, world snapshots, family reports,
//! and the trajectory CSV.

use std::io::Write;

use anyhow::Result;
use histmerge_core::{
    ConsistencyMode, ConsistencyReport, SimSummary, SuiteOutcome, Trajectory, WorldSnapshot,
};
use serde::Serialize;

use crate::schema::{ConfigJson, MatrixJson};

#[derive(Debug, Serialize)]
pub struct FailureJson {
    pub seed: u64,
    pub instance: usize,
    pub dim: usize,
    pub note: String,
    pub slack: f64,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct SuiteJson {
    pub name: String,
    pub instances: usize,
    pub checks: usize,
    pub violations: usize,
    pub worst_slack: f64,
    pub failures: Vec<FailureJson>,
}

impl From<&SuiteOutcome> for SuiteJson {
    fn from(s: &SuiteOutcome) -> Self {
        Self {
            name: s.name.to_string(),
            instances: s.instances,
            checks: s.checks,
            violations: s.violations,
            worst_slack: s.worst_slack,
            failures: s
                .failures
                .iter()
                .map(|f| FailureJson {
                    seed: f.digest.seed,
                    instance: f.digest.instance,
                    dim: f.digest.dim,
                    note: f.digest.note.clone(),
                    slack: f.slack,
                    detail: f.detail.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct VerifyConfigJson {
    pub suite: String,
    pub instances: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub dims: Vec<usize>,
}

/// Top-level verify output: ensemble totals plus per-suite detail.
#[derive(Debug, Serialize)]
pub struct VerifyJson {
    pub config: VerifyConfigJson,
    pub checks: usize,
    pub instances: usize,
    pub violations: usize,
    pub worst_slack: f64,
    pub suites: Vec<SuiteJson>,
}

impl VerifyJson {
    pub fn new(config: VerifyConfigJson, outcomes: &[SuiteOutcome]) -> Self {
        Self {
            config,
            checks: outcomes.iter().map(|s| s.checks).sum(),
            instances: outcomes.iter().map(|s| s.instances).sum(),
            violations: outcomes.iter().map(|s| s.violations).sum(),
            worst_slack: outcomes
                .iter()
                .map(|s| s.worst_slack)
                .fold(f64::INFINITY, f64::min),
            suites: outcomes.iter().map(SuiteJson::from).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct StepJson {
    pub row: usize,
    pub present: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Serialize)]
pub struct SummaryJson {
    pub trajectories: usize,
    pub nondecreasing_fraction: f64,
    pub nonincreasing_fraction: f64,
    pub mean_initial_entropy: f64,
    pub mean_final_entropy: f64,
    pub steps: Vec<StepJson>,
}

impl From<&SimSummary> for SummaryJson {
    fn from(s: &SimSummary) -> Self {
        Self {
            trajectories: s.trajectories,
            nondecreasing_fraction: s.nondecreasing_fraction,
            nonincreasing_fraction: s.nonincreasing_fraction,
            mean_initial_entropy: s.mean_initial_entropy,
            mean_final_entropy: s.mean_final_entropy,
            steps: s
                .rows
                .iter()
                .map(|r| StepJson {
                    row: r.row,
                    present: r.present,
                    mean: r.mean,
                    min: r.min,
                    max: r.max,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TrialJson {
    pub trial: usize,
    pub seed: u64,
    pub rows: usize,
    pub mass_deficit: f64,
    pub pending_erasure: Option<usize>,
    /// Steps whose consistency check flagged at least one pair.
    pub inconsistent_steps: usize,
}

impl TrialJson {
    pub fn new(trial: usize, seed: u64, t: &Trajectory) -> Self {
        Self {
            trial,
            seed,
            rows: t.rows.len(),
            mass_deficit: t.mass_deficit,
            pending_erasure: t.pending_erasure,
            inconsistent_steps: t.consistency.iter().filter(|c| !c.consistent).count(),
        }
    }
}

/// Top-level simulate output: the resolved config, what was written,
/// and ensemble statistics.
#[derive(Debug, Serialize)]
pub struct SimulateJson {
    pub config: ConfigJson,
    pub trials: usize,
    pub outputs: Vec<String>,
    pub per_trial: Vec<TrialJson>,
    pub summary: SummaryJson,
}

/// End-of-run world snapshot for one sampled trial.
#[derive(Debug, Serialize)]
pub struct SnapshotJson {
    pub trial: usize,
    pub seed: u64,
    pub time: f64,
    pub entropy: f64,
    /// Realized selector; outcome indices separated by commas, `~` where
    /// the record was erased.
    pub realized: String,
    pub weights: Vec<f64>,
    pub bundle_size: usize,
    pub collapsed: bool,
    pub rho_bar: MatrixJson,
}

impl SnapshotJson {
    pub fn new(trial: usize, seed: u64, s: &WorldSnapshot) -> Self {
        Self {
            trial,
            seed,
            time: s.time,
            entropy: s.entropy,
            realized: s.realized.to_string(),
            weights: s.weights.clone(),
            bundle_size: s.bundle_size,
            collapsed: s.collapsed,
            rho_bar: MatrixJson::from_matrix(s.rho_bar.matrix()),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct WorstPairJson {
    pub a: String,
    pub b: String,
    pub residual: f64,
}

/// `family --action check` verdict.
#[derive(Debug, Serialize)]
pub struct FamilyCheckJson {
    pub action: String,
    pub mode: String,
    pub tolerance: f64,
    pub chains: usize,
    pub violations: usize,
    pub worst: Option<WorstPairJson>,
    pub consistent: bool,
}

impl FamilyCheckJson {
    pub fn new(r: &ConsistencyReport) -> Self {
        Self {
            action: "check".to_string(),
            mode: mode_name(r.mode).to_string(),
            tolerance: r.tolerance,
            chains: r.chains,
            violations: r.violations,
            worst: r.worst.as_ref().map(|(a, b, residual)| WorstPairJson {
                a: a.to_string(),
                b: b.to_string(),
                residual: *residual,
            }),
            consistent: r.consistent,
        }
    }
}

pub fn mode_name(mode: ConsistencyMode) -> &'static str {
    match mode {
        ConsistencyMode::Weak => "weak",
        ConsistencyMode::Medium => "medium",
    }
}

#[derive(Debug, Serialize)]
pub struct ChainProbJson {
    pub selector: String,
    pub probability: f64,
}

/// `family --action probabilities` table.
#[derive(Debug, Serialize)]
pub struct ProbabilitiesJson {
    pub action: String,
    pub chains: Vec<ChainProbJson>,
    pub total: f64,
}

/// `family --action decoherence` matrix over complete histories.
#[derive(Debug, Serialize)]
pub struct DecoherenceJson {
    pub action: String,
    pub selectors: Vec<String>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// Write one trajectory as CSV. Floats use shortest-roundtrip display,
/// so equal runs write equal bytes.
pub fn write_csv<W: Write>(mut w: W, t: &Trajectory) -> Result<()> {
    writeln!(
        w,
        "step,time,event,entropy,probability,bundle_size,ledger_occupancy"
    )?;
    for r in &t.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.step,
            r.time,
            r.event.name(),
            r.entropy,
            r.probability,
            r.bundle_size,
            r.ledger_occupancy
        )?;
    }
    Ok(())
}
