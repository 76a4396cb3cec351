//! JSON schemas for the file formats the CLI reads and echoes: matrix
//! literals, family specification files, and simulation configs.
//!
//! Every input struct denies unknown fields so a typo fails loudly with
//! the offending field named, instead of silently falling back to a
//! default.

use anyhow::{bail, Context, Result};
use histmerge_core::{
    ComplexMatrix, DensityMatrix, ErasurePolicy, EventSlot, Hamiltonian, HistoryFamily,
    InitialState, MergeMode, ProjectorDecomposition, SimConfig, SimMode, C64,
};
use serde::{Deserialize, Serialize};

/// Matrix literal: `{"dim": n, "re": [[...]], "im": [[...]]}`.
///
/// `im` may be omitted for real matrices. Rows are outer, columns inner.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    /// Validate shape and build the matrix. `field` prefixes any
    /// diagnostic so errors point into the enclosing document.
    pub fn to_matrix(&self, field: &str) -> Result<ComplexMatrix> {
        check_grid(&self.re, self.dim, field, "re")?;
        if let Some(im) = &self.im {
            check_grid(im, self.dim, field, "im")?;
        }
        Ok(ComplexMatrix::from_fn(self.dim, |i, j| {
            let re = self.re[i][j];
            let im = self.im.as_ref().map_or(0.0, |m| m[i][j]);
            C64::new(re, im)
        }))
    }

    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let dim = m.dim();
        let grid = |f: fn(C64) -> f64| {
            (0..dim)
                .map(|i| (0..dim).map(|j| f(m.at(i, j))).collect())
                .collect()
        };
        Self {
            dim,
            re: grid(|z| z.re),
            im: Some(grid(|z| z.im)),
        }
    }
}

fn check_grid(rows: &[Vec<f64>], dim: usize, field: &str, part: &str) -> Result<()> {
    if rows.len() != dim {
        bail!(
            "{field}.{part}: expected {dim} rows, found {}",
            rows.len()
        );
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            bail!(
                "{field}.{part}[{i}]: expected {dim} columns, found {}",
                row.len()
            );
        }
    }
    Ok(())
}

/// One event slot of a family file: a time and its projectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotJson {
    pub time: f64,
    pub projectors: Vec<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// A family specification file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyJson {
    pub initial_state: MatrixJson,
    pub hamiltonian: MatrixJson,
    pub slots: Vec<SlotJson>,
}

impl FamilyJson {
    pub fn to_family(&self) -> Result<HistoryFamily> {
        let rho = DensityMatrix::new(self.initial_state.to_matrix("initial_state")?)
            .context("initial_state")?;
        let h = Hamiltonian::new(self.hamiltonian.to_matrix("hamiltonian")?)
            .context("hamiltonian")?;
        let mut slots = Vec::with_capacity(self.slots.len());
        for (i, slot) in self.slots.iter().enumerate() {
            let mut projectors = Vec::with_capacity(slot.projectors.len());
            for (k, p) in slot.projectors.iter().enumerate() {
                projectors.push(p.to_matrix(&format!("slots[{i}].projectors[{k}]"))?);
            }
            let label = slot.label.clone().unwrap_or_else(|| format!("slot{i}"));
            let decomposition = ProjectorDecomposition::new(projectors, label)
                .with_context(|| format!("slots[{i}].projectors"))?;
            slots.push(EventSlot::new(slot.time, decomposition));
        }
        HistoryFamily::new(rho, h, slots).context("family")
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeModeJson {
    Off,
    Deterministic,
    Evented,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimModeJson {
    Sampled,
    Exhaustive,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErasurePolicyJson {
    Oldest,
    NewestButOne,
    Random,
}

/// `"uniform"` or `{"rank": k}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialStateJson {
    Named(UniformTag),
    Rank { rank: usize },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UniformTag {
    Uniform,
}

/// Simulation config file. Fields mirror the library's `SimConfig`
/// one for one; omitted fields take the library defaults, which also
/// makes this the shape of the resolved-config echo in summaries.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigJson {
    pub dim: usize,
    pub steps: usize,
    pub seed: u64,
    pub outcomes_per_event: usize,
    pub record_capacity: usize,
    pub merge_mode: MergeModeJson,
    pub mode: SimModeJson,
    pub hamiltonian_scale: f64,
    pub initial_state: InitialStateJson,
    pub erasure_policy: ErasurePolicyJson,
    pub consistency_check: bool,
    pub consistency_tolerance: f64,
    pub enumeration_cap: usize,
    pub bundle_cap: usize,
}

impl Default for ConfigJson {
    fn default() -> Self {
        SimConfig::default().into()
    }
}

impl From<SimConfig> for ConfigJson {
    fn from(c: SimConfig) -> Self {
        Self {
            dim: c.dim,
            steps: c.steps,
            seed: c.seed,
            outcomes_per_event: c.outcomes_per_event,
            record_capacity: c.record_capacity,
            merge_mode: match c.merge_mode {
                MergeMode::Off => MergeModeJson::Off,
                MergeMode::Deterministic => MergeModeJson::Deterministic,
                MergeMode::Evented => MergeModeJson::Evented,
            },
            mode: match c.mode {
                SimMode::Sampled => SimModeJson::Sampled,
                SimMode::Exhaustive => SimModeJson::Exhaustive,
            },
            hamiltonian_scale: c.hamiltonian_scale,
            initial_state: match c.initial_state {
                InitialState::Uniform => InitialStateJson::Named(UniformTag::Uniform),
                InitialState::Rank(rank) => InitialStateJson::Rank { rank },
            },
            erasure_policy: match c.erasure_policy {
                ErasurePolicy::Oldest => ErasurePolicyJson::Oldest,
                ErasurePolicy::NewestButOne => ErasurePolicyJson::NewestButOne,
                ErasurePolicy::Random => ErasurePolicyJson::Random,
            },
            consistency_check: c.consistency_check,
            consistency_tolerance: c.consistency_tolerance,
            enumeration_cap: c.enumeration_cap,
            bundle_cap: c.bundle_cap,
        }
    }
}

impl From<ConfigJson> for SimConfig {
    fn from(c: ConfigJson) -> Self {
        Self {
            dim: c.dim,
            steps: c.steps,
            seed: c.seed,
            outcomes_per_event: c.outcomes_per_event,
            record_capacity: c.record_capacity,
            merge_mode: match c.merge_mode {
                MergeModeJson::Off => MergeMode::Off,
                MergeModeJson::Deterministic => MergeMode::Deterministic,
                MergeModeJson::Evented => MergeMode::Evented,
            },
            mode: match c.mode {
                SimModeJson::Sampled => SimMode::Sampled,
                SimModeJson::Exhaustive => SimMode::Exhaustive,
            },
            hamiltonian_scale: c.hamiltonian_scale,
            initial_state: match c.initial_state {
                InitialStateJson::Named(UniformTag::Uniform) => InitialState::Uniform,
                InitialStateJson::Rank { rank } => InitialState::Rank(rank),
            },
            erasure_policy: match c.erasure_policy {
                ErasurePolicyJson::Oldest => ErasurePolicy::Oldest,
                ErasurePolicyJson::NewestButOne => ErasurePolicy::NewestButOne,
                ErasurePolicyJson::Random => ErasurePolicy::Random,
            },
            consistency_check: c.consistency_check,
            consistency_tolerance: c.consistency_tolerance,
            enumeration_cap: c.enumeration_cap,
            bundle_cap: c.bundle_cap,
        }
    }
}
