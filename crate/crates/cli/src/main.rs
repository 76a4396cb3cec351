//! `histmerge`: verification suites, seeded world simulations, and
//! family-file analysis from the command line.
//!
//! Machine output (JSON, CSV) goes to the designated file or standard
//! out; human messages go to standard error. Exit codes are the
//! machine contract: 0 success, 1 file or schema trouble, 2 usage,
//! 3 a verification or consistency violation.

mod report;
mod schema;

use std::fs::{self, File};
use std::io::BufWriter;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use histmerge_core::{
    check_consistency, decoherence_functional, history_probability, run_family_suite,
    run_inequality_suite, run_proposition_suite, run_world, summarize, ConsistencyMode,
    InequalityKind, SimConfig, SimMode, SuiteOutcome, Trajectory, DEFAULT_CHAIN_CAP,
};
use serde::Serialize;

use report::{
    ChainProbJson, DecoherenceJson, FamilyCheckJson, ProbabilitiesJson, SimulateJson,
    SnapshotJson, SummaryJson, TrialJson, VerifyConfigJson, VerifyJson,
};
use schema::{ConfigJson, FamilyJson};

#[derive(Parser)]
#[command(
    name = "histmerge",
    version,
    about = "Branching and merging histories: entropy verification and world simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run randomized entropy-inequality and history-calculus suites.
    Verify {
        /// Which suite to run.
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Instances per dimension for inequality suites; total
        /// instances for the families and proposition suites.
        #[arg(long, default_value_t = 500)]
        instances: usize,
        /// Ensemble seed (precedence: this flag, then HISTMERGE_SEED,
        /// then 0).
        #[arg(long)]
        seed: Option<u64>,
        /// Worst slack a check may go negative by before it counts as
        /// a violation.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        /// Dimensions the inequality suites cycle through.
        #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3, 4, 6, 8])]
        dims: Vec<usize>,
        /// Write the JSON report here instead of standard out.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run seeded world simulations and write trajectory CSVs.
    Simulate {
        /// Simulation config JSON; omitted fields take defaults.
        #[arg(long)]
        config: PathBuf,
        /// Trajectory CSV path; with several trials, the trial index
        /// lands before the extension (run.csv, run.0.csv, run.1.csv).
        #[arg(long)]
        out: PathBuf,
        /// Independent trials; trial i runs with seed + i.
        #[arg(long, default_value_t = 1)]
        trials: usize,
        /// Worker threads (default: logical processors). Output is
        /// identical whatever the worker count.
        #[arg(long)]
        jobs: Option<NonZeroUsize>,
        /// Seed override (precedence: this flag, then HISTMERGE_SEED,
        /// then the config file).
        #[arg(long)]
        seed: Option<u64>,
        /// Also write per-trial final world snapshots (JSON array).
        /// Sampled mode only.
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
    /// Analyze a family specification file.
    Family {
        /// Family JSON (initial_state, hamiltonian, slots).
        #[arg(long)]
        spec: PathBuf,
        /// check: consistency verdict; probabilities: per-history
        /// table; decoherence: the full functional.
        #[arg(long, value_enum, default_value_t = Action::Check)]
        action: Action,
        /// Consistency flavor: weak tests real parts, medium tests
        /// magnitudes.
        #[arg(long, value_enum, default_value_t = Mode::Medium)]
        mode: Mode,
        /// Largest off-diagonal residual still counted consistent.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Gl,
    BranchMerge,
    Quadratic,
    Families,
    Proposition,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum Action {
    Check,
    Probabilities,
    Decoherence,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Weak,
    Medium,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Verify {
            suite,
            instances,
            seed,
            tolerance,
            dims,
            out,
        } => cmd_verify(suite, instances, seed, tolerance, dims, out.as_deref()),
        Command::Simulate {
            config,
            out,
            trials,
            jobs,
            seed,
            snapshots,
        } => cmd_simulate(&config, &out, trials, jobs, seed, snapshots.as_deref()),
        Command::Family {
            spec,
            action,
            mode,
            tolerance,
        } => cmd_family(&spec, action, mode, tolerance),
    }
}

/// Documented precedence: flag, then HISTMERGE_SEED, then the file (or
/// the built-in default when there is no file).
fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("HISTMERGE_SEED") {
        Ok(raw) => raw
            .trim()
            .parse()
            .with_context(|| format!("HISTMERGE_SEED: not an unsigned integer: {raw:?}")),
        Err(std::env::VarError::NotPresent) => Ok(file.unwrap_or(0)),
        Err(e) => Err(e).context("HISTMERGE_SEED"),
    }
}

fn cmd_verify(
    suite: Suite,
    instances: usize,
    seed: Option<u64>,
    tolerance: f64,
    dims: Vec<usize>,
    out: Option<&Path>,
) -> Result<ExitCode> {
    if instances == 0 {
        bail!("instances: must be at least 1");
    }
    if !tolerance.is_finite() || tolerance < 0.0 {
        bail!("tolerance: must be finite and non-negative");
    }
    if dims.is_empty() {
        bail!("dims: need at least one dimension");
    }
    if let Some(&d) = dims.iter().find(|&&d| d < 2) {
        bail!("dims: dimension {d} is below 2");
    }
    let seed = resolve_seed(seed, None)?;

    let kinds = match suite {
        Suite::All => vec![
            Suite::Gl,
            Suite::BranchMerge,
            Suite::Quadratic,
            Suite::Families,
            Suite::Proposition,
        ],
        one => vec![one],
    };
    let outcomes: Vec<SuiteOutcome> = kinds
        .iter()
        .map(|kind| match kind {
            Suite::Gl => run_inequality_suite(
                InequalityKind::GroenewoldLindblad,
                &dims,
                instances * dims.len(),
                seed,
                tolerance,
            ),
            Suite::BranchMerge => run_inequality_suite(
                InequalityKind::BranchMerge,
                &dims,
                instances * dims.len(),
                seed,
                tolerance,
            ),
            Suite::Quadratic => run_inequality_suite(
                InequalityKind::Quadratic,
                &dims,
                instances * dims.len(),
                seed,
                tolerance,
            ),
            Suite::Families => run_family_suite(instances, seed, DEFAULT_CHAIN_CAP),
            Suite::Proposition => {
                run_proposition_suite(instances, seed, DEFAULT_CHAIN_CAP, tolerance)
            }
            Suite::All => unreachable!("expanded above"),
        })
        .collect();

    let config = VerifyConfigJson {
        suite: suite_name(suite).to_string(),
        instances,
        seed,
        tolerance,
        dims,
    };
    let summary = VerifyJson::new(config, &outcomes);
    write_json(out, &summary)?;
    for s in &outcomes {
        eprintln!(
            "{}: {} checks, {} violations, worst slack {}",
            s.name, s.checks, s.violations, s.worst_slack
        );
    }
    Ok(exit_unless(summary.violations == 0))
}

fn suite_name(suite: Suite) -> &'static str {
    match suite {
        Suite::Gl => "gl",
        Suite::BranchMerge => "branch-merge",
        Suite::Quadratic => "quadratic",
        Suite::Families => "families",
        Suite::Proposition => "proposition",
        Suite::All => "all",
    }
}

fn cmd_simulate(
    config_path: &Path,
    out: &Path,
    trials: usize,
    jobs: Option<NonZeroUsize>,
    seed: Option<u64>,
    snapshots: Option<&Path>,
) -> Result<ExitCode> {
    if trials == 0 {
        bail!("trials: must be at least 1");
    }
    let text = fs::read_to_string(config_path)
        .with_context(|| format!("reading {}", config_path.display()))?;
    let parsed: ConfigJson =
        parse_json(&text).with_context(|| config_path.display().to_string())?;
    let mut cfg: SimConfig = parsed.into();
    cfg.seed = resolve_seed(seed, Some(cfg.seed))?;
    cfg.validate().context("config")?;
    if snapshots.is_some() && cfg.mode == SimMode::Exhaustive {
        bail!(
            "snapshots: exhaustive mode tracks every branch at once; \
             there is no single final world to snapshot"
        );
    }

    let workers = jobs
        .map(NonZeroUsize::get)
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, NonZeroUsize::get));
    let trajectories = run_trials(&cfg, trials, workers)?;

    let mut outputs = Vec::with_capacity(trials + 1);
    for (i, t) in trajectories.iter().enumerate() {
        let path = trial_path(out, i, trials);
        let file =
            File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        report::write_csv(BufWriter::new(file), t)
            .with_context(|| format!("writing {}", path.display()))?;
        outputs.push(path.display().to_string());
        eprintln!("wrote {}", path.display());
    }
    if let Some(snap_path) = snapshots {
        let snaps: Vec<SnapshotJson> = trajectories
            .iter()
            .enumerate()
            .filter_map(|(i, t)| {
                let snap = t.final_snapshot.as_ref()?;
                Some(SnapshotJson::new(i, trial_seed(cfg.seed, i), snap))
            })
            .collect();
        write_json(Some(snap_path), &snaps)?;
        outputs.push(snap_path.display().to_string());
        eprintln!("wrote {}", snap_path.display());
    }

    let summary = summarize(&trajectories);
    let echo = SimulateJson {
        config: cfg.clone().into(),
        trials,
        outputs,
        per_trial: trajectories
            .iter()
            .enumerate()
            .map(|(i, t)| TrialJson::new(i, trial_seed(cfg.seed, i), t))
            .collect(),
        summary: SummaryJson::from(&summary),
    };
    write_json(None, &echo)?;
    Ok(ExitCode::SUCCESS)
}

fn trial_seed(base: u64, trial: usize) -> u64 {
    base.wrapping_add(trial as u64)
}

/// run.csv stays run.csv for one trial, and becomes run.0.csv,
/// run.1.csv, ... when there are several.
fn trial_path(base: &Path, trial: usize, trials: usize) -> PathBuf {
    if trials == 1 {
        return base.to_path_buf();
    }
    match base.extension() {
        Some(ext) => base.with_extension(format!("{trial}.{}", ext.to_string_lossy())),
        None => base.with_extension(trial.to_string()),
    }
}

/// Workers claim trial indices from a shared counter and park results
/// by index, so the output order never depends on completion order.
fn run_trials(base: &SimConfig, trials: usize, workers: usize) -> Result<Vec<Trajectory>> {
    let slots: Vec<Mutex<Option<histmerge_core::Result<Trajectory>>>> =
        (0..trials).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    thread::scope(|scope| {
        for _ in 0..workers.min(trials) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= trials {
                    break;
                }
                let mut cfg = base.clone();
                cfg.seed = trial_seed(base.seed, i);
                let result = run_world(&cfg);
                *slots[i].lock().expect("no panics hold this lock") = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .enumerate()
        .map(|(i, slot)| {
            slot.into_inner()
                .expect("no panics hold this lock")
                .expect("every index below `trials` was claimed")
                .map_err(|e| anyhow!("trial {i}: {e}"))
        })
        .collect()
}

fn cmd_family(spec: &Path, action: Action, mode: Mode, tolerance: f64) -> Result<ExitCode> {
    if !tolerance.is_finite() || tolerance < 0.0 {
        bail!("tolerance: must be finite and non-negative");
    }
    let text =
        fs::read_to_string(spec).with_context(|| format!("reading {}", spec.display()))?;
    let parsed: FamilyJson = parse_json(&text).with_context(|| spec.display().to_string())?;
    let family = parsed.to_family()?;

    match action {
        Action::Check => {
            let mode = match mode {
                Mode::Weak => ConsistencyMode::Weak,
                Mode::Medium => ConsistencyMode::Medium,
            };
            let verdict = check_consistency(&family, mode, tolerance).context("check")?;
            write_json(None, &FamilyCheckJson::new(&verdict))?;
            Ok(exit_unless(verdict.consistent))
        }
        Action::Probabilities => {
            let selectors = family
                .full_selectors(DEFAULT_CHAIN_CAP)
                .context("probabilities")?;
            let chains = selectors
                .iter()
                .map(|sel| {
                    Ok(ChainProbJson {
                        selector: sel.to_string(),
                        probability: history_probability(&family, sel)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let total = chains.iter().map(|c| c.probability).sum();
            let table = ProbabilitiesJson {
                action: "probabilities".to_string(),
                chains,
                total,
            };
            write_json(None, &table)?;
            Ok(ExitCode::SUCCESS)
        }
        Action::Decoherence => {
            let d = decoherence_functional(&family).context("decoherence")?;
            let n = d.len();
            let grid = |f: fn(histmerge_core::C64) -> f64| {
                (0..n)
                    .map(|a| (0..n).map(|b| f(d.at(a, b))).collect())
                    .collect()
            };
            let matrix = DecoherenceJson {
                action: "decoherence".to_string(),
                selectors: d.selectors().iter().map(|s| s.to_string()).collect(),
                re: grid(|z| z.re),
                im: grid(|z| z.im),
            };
            write_json(None, &matrix)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn exit_unless(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}

/// Deserialize with field paths in the diagnostics, so a bad entry is
/// reported as, say, `slots[1].projectors[0].re` and not just a line
/// number.
fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de)
        .map_err(|e| anyhow!("{}: {}", e.path(), e.inner()))
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}
