use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use spl_core::harness::{
    audit_lemma_invariants, check_agent_oracle, check_agent_rationality, check_forbidden_region,
    check_mistake_bound, detect_cycle, phases, read_jsonl, replay, run_experiment, write_csv,
    write_jsonl, AgentConfig, AuditMode, BoundCheck, BoundId, PhaseSummary, Transcript, Violation,
};
use spl_core::learners::{LearnerConfig, PhaseEvent};
use spl_core::streams::{generate_separable_stream, save_stream, Fixture, StreamSpec};
use spl_core::types::{CostModel, FeatureVector};

use crate::config::{default_length, parse_fixture, resolve_seed, LearnerKind, RunConfig};
use crate::verify::{self, Suite};
use crate::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "spl",
    version,
    about = "Perceptron learners against strategic agents"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Play one learner against agents on a stream and summarize the run.
    Run(Box<RunArgs>),
    /// Write a stream to JSONL.
    Gen(GenArgs),
    /// Run a grid of generated experiments, one CSV row per cell and seed.
    Sweep(SweepArgs),
    /// Re-execute a JSONL transcript and compare round by round.
    Replay(ReplayArgs),
    /// Run the invariant and bound checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON file with the same keys as the flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunConfig,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Built-in stream instead of a generated one.
    #[arg(long, value_parser = parse_fixture, conflicts_with_all = ["d", "radius", "gamma", "w_star"])]
    pub fixture: Option<Fixture>,
    /// Dimension.
    #[arg(long)]
    pub d: Option<usize>,
    /// Bound on the point norms.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Margin.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Number of records.
    #[arg(long, default_value_t = 1000)]
    pub length: usize,
    /// Base seed; falls back to SPL_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Separator direction; drawn at random when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub w_star: Option<Vec<f64>>,
    /// Fraction of positive labels.
    #[arg(long, default_value_t = 0.5)]
    pub label_mix: f64,
    /// Draw the separator from the nonnegative orthant.
    #[arg(long)]
    pub coordinate_sign_constraint: bool,
    /// Output JSONL.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value = "strategic-l2")]
    pub learner: LearnerKind,
    /// Hidden budgets; also the published budget of known-cost learners.
    #[arg(long, value_delimiter = ',', required = true)]
    pub alpha: Vec<f64>,
    /// Margins.
    #[arg(long, value_delimiter = ',', required = true)]
    pub gamma: Vec<f64>,
    /// Norm bounds.
    #[arg(long, value_delimiter = ',', required = true)]
    pub radius: Vec<f64>,
    /// Dimensions.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub d: Vec<usize>,
    /// Seeds per cell: `seed, seed+1, ...`.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// Base seed; falls back to SPL_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Stream length; defaults to ten times the cell's mistake bound.
    #[arg(long)]
    pub length: Option<usize>,
    /// Output CSV.
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// JSONL transcript written by `run --jsonl`.
    pub transcript: PathBuf,
    /// Write the re-executed transcript as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    /// Random runs per property check.
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    /// Base seed; falls back to SPL_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, hide = true)]
    pub mutation: Option<crate::config::MutationArg>,
}

impl Cli {
    pub fn execute(self) -> CliResult<()> {
        match self.command {
            Command::Run(args) => cmd_run(*args),
            Command::Gen(args) => cmd_gen(args),
            Command::Sweep(args) => cmd_sweep(args),
            Command::Replay(args) => cmd_replay(args),
            Command::Verify(args) => cmd_verify(args),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct EventCounts {
    pub phase_up: usize,
    pub phase_down: usize,
}

impl EventCounts {
    pub fn of(transcript: &Transcript) -> Self {
        let count = |e| transcript.rounds.iter().filter(|r| r.event == e).count();
        EventCounts {
            phase_up: count(PhaseEvent::PhaseUp),
            phase_down: count(PhaseEvent::PhaseDown),
        }
    }

    pub fn total(&self) -> usize {
        self.phase_up + self.phase_down
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum BoundOutcome {
    Checked(BoundCheck),
    Unavailable { error: String },
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ViolationCounts {
    pub forbidden_region: usize,
    pub agent: usize,
    pub audit: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub learner: LearnerConfig,
    pub agent: AgentConfig,
    pub rounds: usize,
    pub total_mistakes: u64,
    pub phase_events: EventCounts,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub phases: Vec<PhaseSummary>,
    pub bounds: BTreeMap<BoundId, BoundOutcome>,
    pub cycle_period: Option<usize>,
    pub violations: ViolationCounts,
    pub audit_modes: BTreeMap<AuditMode, usize>,
    /// The first few violations of each kind, for a quick look.
    pub violation_samples: Vec<Violation>,
}

fn bounds_for(learner: &LearnerConfig) -> &'static [BoundId] {
    match learner {
        LearnerConfig::Classic | LearnerConfig::StrategicL2 { .. } => &[BoundId::Theorem1],
        LearnerConfig::StrategicL1 { .. } => &[BoundId::Theorem3],
        LearnerConfig::UnknownL2 { .. } | LearnerConfig::UnknownL1Single { .. } => {
            &[BoundId::PerPhase, BoundId::UnknownTotal]
        }
    }
}

const SAMPLES_PER_KIND: usize = 3;

/// Everything `run` reports about a transcript.
pub fn summarize(
    transcript: &Transcript,
    max_period: usize,
    oracle: Option<(f64, f64)>,
) -> CliResult<Summary> {
    let meta = &transcript.meta;
    let bounds = bounds_for(&meta.learner)
        .iter()
        .map(|&id| {
            let outcome = match check_mistake_bound(transcript, id) {
                Ok(c) => BoundOutcome::Checked(c),
                Err(e) => BoundOutcome::Unavailable {
                    error: e.to_string(),
                },
            };
            (id, outcome)
        })
        .collect();
    let unknown = matches!(
        meta.learner,
        LearnerConfig::UnknownL2 { .. } | LearnerConfig::UnknownL1Single { .. }
    );
    let forbidden = check_forbidden_region(transcript);
    // In-band points are how the unknown-cost search detects an
    // overestimate; only the ones it failed to act on count.
    let forbidden: Vec<Violation> = if unknown {
        forbidden
            .into_iter()
            .filter(|v| transcript.rounds[v.t].event != PhaseEvent::PhaseDown)
            .collect()
    } else {
        forbidden
    };
    let agent = check_agent_rationality(transcript);
    let audit = audit_lemma_invariants(transcript, meta.w_star.as_ref());
    let oracle = match oracle {
        Some((step, radius)) => Some(check_agent_oracle(transcript, step, radius)?),
        None => None,
    };
    let mut samples = Vec::new();
    for group in [&forbidden, &agent, &audit.violations] {
        samples.extend(group.iter().take(SAMPLES_PER_KIND).cloned());
    }
    if let Some(o) = &oracle {
        samples.extend(o.iter().take(SAMPLES_PER_KIND).cloned());
    }
    Ok(Summary {
        learner: meta.learner.clone(),
        agent: meta.agent.clone(),
        rounds: transcript.rounds.len(),
        total_mistakes: transcript.total_mistakes,
        phase_events: EventCounts::of(transcript),
        phases: if unknown {
            phases(transcript)
        } else {
            Vec::new()
        },
        bounds,
        cycle_period: detect_cycle(transcript, max_period.max(1)),
        violations: ViolationCounts {
            forbidden_region: forbidden.len(),
            agent: agent.len(),
            audit: audit.violations.len(),
            oracle: oracle.as_ref().map(Vec::len),
        },
        audit_modes: audit.modes,
        violation_samples: samples,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let file = File::create(path).map_err(|e| spl_core::Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")
        .and_then(|_| out.flush())
        .map_err(|e| spl_core::Error::io(path, e).into())
}

pub fn cmd_run(args: RunArgs) -> CliResult<()> {
    let config = match &args.config {
        Some(path) => args.run.overriding(RunConfig::from_file(path)?),
        None => args.run,
    };
    let resolved = config.resolve()?;
    let transcript = run_experiment(
        &resolved.learner,
        resolved.options,
        &resolved.agent,
        &resolved.stream,
        resolved.rounds,
    )?;
    if let Some(path) = &config.out {
        write_csv(&transcript, path)?;
    }
    if let Some(path) = &config.jsonl {
        write_jsonl(&transcript, path)?;
    }
    let summary = summarize(&transcript, resolved.max_period, resolved.oracle)?;
    if let Some(path) = &config.summary {
        write_json(path, &summary)?;
    }
    emit(serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

#[derive(Serialize)]
struct GenReport {
    records: usize,
    radius: f64,
    w_star: Option<FeatureVector>,
}

pub fn cmd_gen(args: GenArgs) -> CliResult<()> {
    let stream = match args.fixture {
        Some(f) => f.stream(args.length),
        None => {
            let need = |name: &str| CliError::Usage(format!("gen needs --{name} (or --fixture)"));
            let radius = args.radius.ok_or_else(|| need("radius"))?;
            let gamma = args.gamma.ok_or_else(|| need("gamma"))?;
            let d = args
                .d
                .or(args.w_star.as_ref().map(Vec::len))
                .ok_or_else(|| need("d"))?;
            let mut spec = StreamSpec::new(d, radius, gamma, args.length, resolve_seed(args.seed)?);
            spec.w_star = args.w_star.map(FeatureVector::try_new).transpose()?;
            spec.label_mix = args.label_mix;
            spec.coordinate_sign_constraint = args.coordinate_sign_constraint;
            generate_separable_stream(&spec)?
        }
    };
    save_stream(&args.out, &stream.records)?;
    let report = GenReport {
        records: stream.len(),
        radius: stream.radius,
        w_star: stream.w_star,
    };
    emit(serde_json::to_string(&report)?)?;
    Ok(())
}

/// One row of `sweep.csv`.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub learner: String,
    pub alpha: f64,
    pub gamma: f64,
    pub radius: f64,
    pub d: usize,
    pub seed: u64,
    pub rounds: usize,
    pub mistakes: Option<u64>,
    pub bound_id: String,
    pub bound: Option<f64>,
    pub holds: Option<bool>,
    pub phase_events: Option<usize>,
    /// `ok`, or the error that stopped the cell.
    pub status: String,
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    alpha: f64,
    gamma: f64,
    radius: f64,
    d: usize,
    seed: u64,
}

fn sweep_cell(kind: LearnerKind, length: Option<usize>, cell: Cell) -> SweepRow {
    let learner_name = kind
        .to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default();
    let Cell {
        alpha,
        gamma,
        radius,
        d,
        seed,
    } = cell;
    let (learner, cost, bound_id) = match kind {
        LearnerKind::Classic => (
            LearnerConfig::Classic,
            CostModel::L2 { alpha },
            BoundId::Theorem1,
        ),
        LearnerKind::StrategicL2 => (
            LearnerConfig::StrategicL2 { alpha },
            CostModel::L2 { alpha },
            BoundId::Theorem1,
        ),
        LearnerKind::StrategicL1 => (
            LearnerConfig::StrategicL1 {
                alphas: vec![alpha; d],
                r: radius,
            },
            CostModel::WeightedL1 {
                alphas: vec![alpha; d],
            },
            BoundId::Theorem3,
        ),
        LearnerKind::UnknownL2 => (
            LearnerConfig::UnknownL2 { r: radius, gamma },
            CostModel::L2 { alpha },
            BoundId::UnknownTotal,
        ),
        LearnerKind::UnknownL1Single => {
            let mut alphas = vec![0.0; d];
            alphas[0] = alpha;
            (
                LearnerConfig::UnknownL1Single { r: radius, gamma },
                CostModel::WeightedL1 { alphas },
                BoundId::UnknownTotal,
            )
        }
    };
    let mut row = SweepRow {
        learner: learner_name,
        alpha,
        gamma,
        radius,
        d,
        seed,
        rounds: 0,
        mistakes: None,
        bound_id: serde_json::to_value(bound_id)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
        bound: None,
        holds: None,
        phase_events: None,
        status: "ok".into(),
    };
    let length = length.unwrap_or_else(|| default_length(kind, d, radius, gamma, Some(&cost)));
    let outcome = (|| -> spl_core::Result<(Transcript, BoundCheck)> {
        let mut spec = StreamSpec::new(d, radius, gamma, length, seed);
        spec.coordinate_sign_constraint = kind == LearnerKind::StrategicL1;
        let stream = generate_separable_stream(&spec)?;
        let tr = run_experiment(
            &learner,
            Default::default(),
            &AgentConfig::rational(cost.clone()),
            &stream,
            length.max(1),
        )?;
        let check = check_mistake_bound(&tr, bound_id)?;
        Ok((tr, check))
    })();
    match outcome {
        Ok((tr, check)) => {
            row.rounds = tr.rounds.len();
            row.mistakes = Some(tr.total_mistakes);
            row.bound = Some(check.bound);
            row.holds = Some(check.holds);
            row.phase_events = Some(EventCounts::of(&tr).total());
        }
        Err(e) => row.status = e.to_string(),
    }
    row
}

/// Rows in grid order (alpha outermost, then gamma, radius, d, seed).
pub fn sweep_rows(args: &SweepArgs) -> CliResult<Vec<SweepRow>> {
    let base = resolve_seed(args.seed)?;
    let mut cells = Vec::new();
    for &alpha in &args.alpha {
        for &gamma in &args.gamma {
            for &radius in &args.radius {
                for &d in &args.d {
                    if d == 0 {
                        return Err(CliError::Usage("--d values must be at least 1".into()));
                    }
                    for k in 0..args.seeds {
                        cells.push(Cell {
                            alpha,
                            gamma,
                            radius,
                            d,
                            seed: base.wrapping_add(k),
                        });
                    }
                }
            }
        }
    }
    Ok(cells
        .into_par_iter()
        .map(|c| sweep_cell(args.learner, args.length, c))
        .collect())
}

pub fn cmd_sweep(args: SweepArgs) -> CliResult<()> {
    let rows = sweep_rows(&args)?;
    let path = &args.out;
    let file = File::create(path).map_err(|e| spl_core::Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| spl_core::Error::io(path, e))?;
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    emit(format!(
        "{} rows written to {} ({failed} cells failed)",
        rows.len(),
        path.display()
    ))
}

/// Prints one line to stdout. A closed pipe (`spl run | head`) is not an error.
fn emit(text: impl std::fmt::Display) -> CliResult<()> {
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(spl_core::Error::io("<stdout>", e).into())
        }
        _ => Ok(()),
    }
}

const MISMATCHES_SHOWN: usize = 10;

pub fn cmd_replay(args: ReplayArgs) -> CliResult<()> {
    let recorded = read_jsonl(&args.transcript)?;
    let outcome = replay(&recorded)?;
    if let Some(path) = &args.out {
        write_csv(&outcome.transcript, path)?;
    }
    if outcome.matches() {
        emit(format!(
            "replay identical: {} rounds",
            recorded.rounds.len()
        ))
    } else {
        let shown: Vec<String> = outcome
            .mismatches
            .iter()
            .take(MISMATCHES_SHOWN)
            .map(|t| t.to_string())
            .collect();
        Err(CliError::Check(format!(
            "{} of {} rounds differ, t = {}",
            outcome.mismatches.len(),
            recorded.rounds.len(),
            shown.join(", ")
        )))
    }
}

pub fn cmd_verify(args: VerifyArgs) -> CliResult<()> {
    let seed = resolve_seed(args.seed)?;
    let report = verify::run_suite(args.suite, args.seeds, seed, args.mutation.map(Into::into));
    emit(report.lines().collect::<Vec<_>>().join("\n"))?;
    let failed = report.failed();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "{} of {} checks failed",
            failed.len(),
            report.gating()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DEFAULT_MAX_PERIOD;

    fn sweep_args(alpha: Vec<f64>) -> SweepArgs {
        SweepArgs {
            learner: LearnerKind::StrategicL2,
            alpha,
            gamma: vec![0.5, 1.0, 2.0],
            radius: vec![4.0],
            d: vec![2],
            seeds: 5,
            seed: Some(3),
            length: Some(200),
            out: PathBuf::from("unused.csv"),
        }
    }

    #[test]
    fn sweep_rows_cover_grid_times_seeds() {
        let rows = sweep_rows(&sweep_args(vec![0.5, 1.0, 2.0])).unwrap();
        assert_eq!(rows.len(), 45);
        assert!(rows
            .iter()
            .all(|r| r.status == "ok" && r.holds == Some(true)));
        assert_eq!((rows[0].alpha, rows[0].gamma, rows[0].seed), (0.5, 0.5, 3));
        assert_eq!(
            (rows[44].alpha, rows[44].gamma, rows[44].seed),
            (2.0, 2.0, 7)
        );
    }

    #[test]
    fn sweep_bound_grows_with_alpha() {
        let rows = sweep_rows(&sweep_args(vec![0.5, 1.0, 2.0])).unwrap();
        for lo in 0..15 {
            let (a, b, c) = (&rows[lo], &rows[lo + 15], &rows[lo + 30]);
            assert!(a.bound < b.bound && b.bound < c.bound);
        }
    }

    #[test]
    fn infeasible_cell_is_reported_in_its_row() {
        let mut args = sweep_args(vec![1.0]);
        args.radius = vec![0.25];
        args.gamma = vec![1.0];
        args.seeds = 1;
        let rows = sweep_rows(&args).unwrap();
        assert!(rows[0].status.contains("infeasible"), "{}", rows[0].status);
        assert_eq!(rows[0].mistakes, None);
    }

    #[test]
    fn summary_of_the_inseparable_fixture() {
        let cfg = RunConfig {
            learner: Some(LearnerKind::StrategicL2),
            fixture: Some(Fixture::Example2),
            rounds: Some(400),
            max_period: Some(DEFAULT_MAX_PERIOD),
            ..Default::default()
        };
        let r = cfg.resolve().unwrap();
        let tr = run_experiment(&r.learner, r.options, &r.agent, &r.stream, r.rounds).unwrap();
        let s = summarize(&tr, r.max_period, None).unwrap();
        assert_eq!(s.cycle_period, Some(4));
        assert_eq!(s.total_mistakes, 400);
        assert!(matches!(
            s.bounds[&BoundId::Theorem1],
            BoundOutcome::Unavailable { .. }
        ));
        assert_eq!(s.violations.agent, 0);
    }
}
