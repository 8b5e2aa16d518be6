//! Run configuration: command-line flags and JSON config files share one
//! schema, with flags overriding file values key by key.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use spl_core::harness::{unknown_total_bound, AgentConfig};
use spl_core::learners::{InitialPrediction, LearnerConfig, LearnerOptions, Mutation};
use spl_core::streams::{
    generate_separable_stream, load_stream, Fixture, Stream, StreamSource, StreamSpec,
};
use spl_core::types::{CostModel, FeatureVector};

use crate::{CliError, CliResult};

/// Environment variable consulted when no seed is given.
pub const SEED_ENV: &str = "SPL_SEED";

/// Cap on the length of generated streams sized from a mistake bound.
pub const MAX_DEFAULT_LENGTH: usize = 1_000_000;

pub const DEFAULT_MAX_PERIOD: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerKind {
    Classic,
    StrategicL2,
    StrategicL1,
    UnknownL2,
    UnknownL1Single,
}

impl LearnerKind {
    pub fn is_unknown_cost(self) -> bool {
        matches!(self, LearnerKind::UnknownL2 | LearnerKind::UnknownL1Single)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentArg {
    #[default]
    Rational,
    Replay,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialArg {
    Positive,
    Negative,
}

impl From<InitialArg> for InitialPrediction {
    fn from(a: InitialArg) -> Self {
        match a {
            InitialArg::Positive => InitialPrediction::Positive,
            InitialArg::Negative => InitialPrediction::Negative,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutationArg {
    FlipSurrogateSign,
    SkipCorrection,
    ZeroEta,
}

impl From<MutationArg> for Mutation {
    fn from(m: MutationArg) -> Self {
        match m {
            MutationArg::FlipSurrogateSign => Mutation::FlipSurrogateSign,
            MutationArg::SkipCorrection => Mutation::SkipCorrection,
            MutationArg::ZeroEta => Mutation::ZeroEta,
        }
    }
}

pub fn parse_fixture(s: &str) -> Result<Fixture, String> {
    s.parse().map_err(|e: spl_core::Error| e.to_string())
}

/// Seed from the flag, then the config file, then `SPL_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::Usage(format!(
                "{SEED_ENV} must be an unsigned 64-bit integer, got {v:?}"
            ))
        }),
        Err(_) => Ok(0),
    }
}

/// Every key of a run. Flags and config-file keys match one to one
/// (`--true-alpha` is `"true-alpha"`).
#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    /// Learning algorithm.
    #[arg(long, value_enum)]
    pub learner: Option<LearnerKind>,
    /// Budget the known-cost l2 learner publishes.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Per-coordinate budgets of the l1 learner (comma separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alphas: Option<Vec<f64>>,
    /// Bound on the true-point norms.
    #[arg(long)]
    #[serde(alias = "R")]
    pub radius: Option<f64>,
    /// Margin of the separable stream.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// How agents respond: best response, or the recorded points of a stream file.
    #[arg(long, value_enum)]
    pub agent: Option<AgentArg>,
    /// The agents' hidden l2 budget.
    #[arg(long)]
    pub true_alpha: Option<f64>,
    /// The agents' hidden per-coordinate budgets.
    #[arg(long, value_delimiter = ',')]
    pub true_alphas: Option<Vec<f64>>,
    /// Built-in stream: example1-original, example1-footnote or example2.
    #[arg(long, value_parser = parse_fixture)]
    pub fixture: Option<Fixture>,
    /// JSONL stream of `{"z": [...], "label": +1|-1}` records.
    #[arg(long)]
    pub stream_file: Option<PathBuf>,
    /// Separator direction for generated streams; a certified separator for
    /// stream files.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub w_star: Option<Vec<f64>>,
    /// Dimension of a generated stream.
    #[arg(long)]
    pub d: Option<usize>,
    /// Length of a generated stream.
    #[arg(long)]
    pub length: Option<usize>,
    /// Fraction of positive labels in a generated stream.
    #[arg(long)]
    pub label_mix: Option<f64>,
    /// Draw the separator from the nonnegative orthant.
    #[arg(long)]
    #[serde(default)]
    pub coordinate_sign_constraint: bool,
    /// Generator seed; falls back to SPL_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Rounds to play; required for fixtures.
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Transcript CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Transcript JSONL (exact, replayable).
    #[arg(long)]
    pub jsonl: Option<PathBuf>,
    /// Summary JSON; printed to stdout either way.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Prediction on a zero weight vector.
    #[arg(long, value_enum)]
    pub initial_prediction: Option<InitialArg>,
    /// Longest period the cycle detector looks for.
    #[arg(long)]
    pub max_period: Option<usize>,
    /// Also compare each response with the grid oracle at this spacing.
    #[arg(long)]
    pub oracle_step: Option<f64>,
    /// Half-width of the oracle grid; defaults to the largest budget.
    #[arg(long, requires = "oracle_step")]
    pub oracle_radius: Option<f64>,
    #[arg(long, value_enum, hide = true)]
    pub mutation: Option<MutationArg>,
}

macro_rules! or_file {
    ($flags:ident, $file:ident; $($f:ident),*) => {
        RunConfig {
            $($f: $flags.$f.or($file.$f),)*
            coordinate_sign_constraint: $flags.coordinate_sign_constraint || $file.coordinate_sign_constraint,
        }
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> CliResult<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| spl_core::Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::Core(spl_core::Error::Parse {
                path: path.to_path_buf(),
                line: e.line(),
                message: e.to_string(),
            })
        })
    }

    /// Flags win over file values.
    pub fn overriding(self, file: RunConfig) -> RunConfig {
        let flags = self;
        or_file!(flags, file; learner, alpha, alphas, radius, gamma, agent, true_alpha, true_alphas,
            fixture, stream_file, w_star, d, length, label_mix, seed, rounds, out, jsonl, summary,
            initial_prediction, max_period, oracle_step, oracle_radius, mutation)
    }

    pub fn resolve(&self) -> CliResult<Resolved> {
        let kind = self
            .learner
            .ok_or_else(|| CliError::Usage("--learner is required".into()))?;
        if kind.is_unknown_cost() && (self.radius.is_none() || self.gamma.is_none()) {
            return Err(CliError::Usage(format!(
                "{} requires --radius and --gamma",
                kind.to_possible_value()
                    .map(|v| v.get_name().to_string())
                    .unwrap_or_default()
            )));
        }
        if self.fixture.is_some() && self.stream_file.is_some() {
            return Err(CliError::Usage(
                "--fixture and --stream-file are mutually exclusive".into(),
            ));
        }
        let agent_kind = self.agent.unwrap_or_default();
        let explicit = self.true_cost(kind)?;
        let implied = self.implied_cost(kind);
        let stream = self.stream(kind, explicit.as_ref().or(implied.as_ref()))?;
        let cost = match agent_kind {
            AgentArg::Replay => None,
            AgentArg::Rational => Some(
                explicit
                    .or(stream.cost_model.clone())
                    .or(implied)
                    .ok_or_else(|| {
                        CliError::Usage(
                            "the agents' budget is unknown: pass --true-alpha or --true-alphas"
                                .into(),
                        )
                    })?,
            ),
        };
        let learner = self.learner_config(kind, &stream, cost.as_ref())?;
        let agent = match cost {
            None => AgentConfig::replay(),
            Some(c) => AgentConfig::rational(c),
        };
        let initial_prediction = match self.initial_prediction {
            Some(p) => p.into(),
            None if matches!(kind, LearnerKind::Classic | LearnerKind::StrategicL2) => {
                stream.initial_prediction
            }
            None => InitialPrediction::Positive,
        };
        let options = LearnerOptions {
            mutation: self.mutation.map(Into::into),
            initial_prediction,
        };
        let rounds = match self.rounds {
            Some(0) => return Err(CliError::Usage("--rounds must be at least 1".into())),
            Some(r) => r,
            None => stream.len().max(1),
        };
        let oracle = match (self.oracle_step, self.oracle_radius) {
            (Some(step), radius) => Some((step, radius.unwrap_or_else(|| agent.cost.max_alpha()))),
            (None, _) => None,
        };
        Ok(Resolved {
            kind,
            learner,
            options,
            agent,
            stream,
            rounds,
            max_period: self.max_period.unwrap_or(DEFAULT_MAX_PERIOD),
            oracle,
        })
    }

    /// Agents of a known-cost run move with the budget the learner publishes,
    /// unless a fixture or a flag says otherwise.
    fn implied_cost(&self, kind: LearnerKind) -> Option<CostModel> {
        match kind {
            LearnerKind::StrategicL2 => self.alpha.map(|alpha| CostModel::L2 { alpha }),
            LearnerKind::StrategicL1 => self
                .alphas
                .clone()
                .map(|alphas| CostModel::WeightedL1 { alphas }),
            _ => None,
        }
    }

    fn true_cost(&self, kind: LearnerKind) -> CliResult<Option<CostModel>> {
        let cost = match (&self.true_alpha, &self.true_alphas) {
            (Some(_), Some(_)) => {
                return Err(CliError::Usage(
                    "--true-alpha and --true-alphas are mutually exclusive".into(),
                ))
            }
            // Single-direction agents can only move along the first axis.
            (Some(a), None) if kind == LearnerKind::UnknownL1Single => {
                let d = self.d.or(self.w_star.as_ref().map(Vec::len));
                match d {
                    Some(d) => {
                        let mut alphas = vec![0.0; d];
                        alphas[0] = *a;
                        Some(CostModel::WeightedL1 { alphas })
                    }
                    None => None,
                }
            }
            (Some(a), None) => Some(CostModel::L2 { alpha: *a }),
            (None, Some(v)) => Some(CostModel::WeightedL1 { alphas: v.clone() }),
            (None, None) => None,
        };
        if let Some(c) = &cost {
            c.validate()?;
        }
        Ok(cost)
    }

    fn stream(&self, kind: LearnerKind, cost: Option<&CostModel>) -> CliResult<Stream> {
        if let Some(fixture) = self.fixture {
            let rounds = self.rounds.ok_or_else(|| {
                CliError::Usage(format!(
                    "--rounds is required for the {fixture} fixture, which cycles"
                ))
            })?;
            return Ok(fixture.stream(rounds));
        }
        if let Some(path) = &self.stream_file {
            let records = load_stream(path)?;
            let mut stream = Stream::from_records(
                StreamSource::File {
                    path: path.display().to_string(),
                },
                records,
            );
            if let Some(w) = &self.w_star {
                stream.w_star = Some(FeatureVector::try_new(w.clone())?);
            }
            if let Some(r) = self.radius {
                stream.radius = r;
            }
            return Ok(stream);
        }
        let radius = self
            .radius
            .ok_or_else(|| CliError::Usage("generated streams need --radius".into()))?;
        let gamma = self
            .gamma
            .ok_or_else(|| CliError::Usage("generated streams need --gamma".into()))?;
        let d = self
            .d
            .or(self.w_star.as_ref().map(Vec::len))
            .or(self.alphas.as_ref().map(Vec::len))
            .or(self.true_alphas.as_ref().map(Vec::len))
            .ok_or_else(|| CliError::Usage("generated streams need --d".into()))?;
        let length = match self.length {
            Some(n) => n,
            None => default_length(kind, d, radius, gamma, cost),
        };
        let mut spec = StreamSpec::new(d, radius, gamma, length, resolve_seed(self.seed)?);
        spec.w_star = self
            .w_star
            .clone()
            .map(FeatureVector::try_new)
            .transpose()?;
        if let Some(mix) = self.label_mix {
            spec.label_mix = mix;
        }
        // The l1 guarantees assume a coordinatewise nonnegative separator.
        spec.coordinate_sign_constraint = self.coordinate_sign_constraint
            || matches!(
                kind,
                LearnerKind::StrategicL1 | LearnerKind::UnknownL1Single
            );
        Ok(generate_separable_stream(&spec)?)
    }

    fn learner_config(
        &self,
        kind: LearnerKind,
        stream: &Stream,
        cost: Option<&CostModel>,
    ) -> CliResult<LearnerConfig> {
        Ok(match kind {
            LearnerKind::Classic => LearnerConfig::Classic,
            LearnerKind::StrategicL2 => {
                let alpha = match (self.alpha, cost) {
                    (Some(a), _) => a,
                    (None, Some(CostModel::L2 { alpha })) => *alpha,
                    _ => return Err(CliError::Usage("strategic-l2 requires --alpha".into())),
                };
                LearnerConfig::StrategicL2 { alpha }
            }
            LearnerKind::StrategicL1 => {
                let alphas = match (&self.alphas, cost) {
                    (Some(a), _) => a.clone(),
                    (None, Some(CostModel::WeightedL1 { alphas })) => alphas.clone(),
                    _ => return Err(CliError::Usage("strategic-l1 requires --alphas".into())),
                };
                LearnerConfig::StrategicL1 {
                    alphas,
                    r: self.radius.unwrap_or(stream.radius),
                }
            }
            LearnerKind::UnknownL2 => LearnerConfig::UnknownL2 {
                r: self.radius.unwrap_or_default(),
                gamma: self.gamma.unwrap_or_default(),
            },
            LearnerKind::UnknownL1Single => LearnerConfig::UnknownL1Single {
                r: self.radius.unwrap_or_default(),
                gamma: self.gamma.unwrap_or_default(),
            },
        })
    }
}

/// Ten times the mistake bound that applies to the run, capped at
/// [`MAX_DEFAULT_LENGTH`].
pub fn default_length(
    kind: LearnerKind,
    d: usize,
    radius: f64,
    gamma: f64,
    cost: Option<&CostModel>,
) -> usize {
    let alpha = cost.map(CostModel::max_alpha).unwrap_or(0.0);
    let w_sq = 1.0 / (gamma * gamma);
    let bound = match kind {
        LearnerKind::StrategicL1 => (1.0 + (d as f64 + 1.0) * (radius + alpha).powi(2)) * w_sq,
        LearnerKind::UnknownL2 | LearnerKind::UnknownL1Single => unknown_total_bound(radius, gamma),
        LearnerKind::Classic | LearnerKind::StrategicL2 => (radius + alpha).powi(2) * w_sq,
    };
    let n = (10.0 * bound).ceil();
    if n.is_finite() && n >= 1.0 {
        (n as usize).min(MAX_DEFAULT_LENGTH)
    } else {
        MAX_DEFAULT_LENGTH
    }
}

/// A run ready to execute.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub kind: LearnerKind,
    pub learner: LearnerConfig,
    pub options: LearnerOptions,
    pub agent: AgentConfig,
    pub stream: Stream,
    pub rounds: usize,
    pub max_period: usize,
    /// Grid step and half-width of the optional oracle comparison.
    pub oracle: Option<(f64, f64)>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RunConfig {
        RunConfig {
            learner: Some(LearnerKind::StrategicL2),
            fixture: Some(Fixture::Example2),
            rounds: Some(8),
            ..Default::default()
        }
    }

    #[test]
    fn fixture_supplies_cost_and_initial_prediction() {
        let r = base().resolve().unwrap();
        assert_eq!(r.learner, LearnerConfig::StrategicL2 { alpha: 5.0 });
        assert_eq!(r.agent.cost, CostModel::L2 { alpha: 5.0 });
        assert_eq!(r.options.initial_prediction, InitialPrediction::Negative);
        assert_eq!(r.rounds, 8);
    }

    #[test]
    fn flags_override_file_values() {
        let file: RunConfig =
            serde_json::from_str(r#"{"learner": "classic", "alpha": 2.0, "R": 3.0, "seed": 9}"#)
                .unwrap();
        let flags = RunConfig {
            alpha: Some(1.0),
            ..Default::default()
        };
        let merged = flags.overriding(file);
        assert_eq!(merged.learner, Some(LearnerKind::Classic));
        assert_eq!(merged.alpha, Some(1.0));
        assert_eq!(merged.radius, Some(3.0));
        assert_eq!(merged.seed, Some(9));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"lerner": "classic"}"#).is_err());
    }

    #[test]
    fn unknown_cost_needs_radius_and_gamma() {
        let cfg = RunConfig {
            learner: Some(LearnerKind::UnknownL2),
            radius: Some(2.0),
            ..base()
        };
        assert!(matches!(cfg.resolve(), Err(CliError::Usage(_))));
    }

    #[test]
    fn fixtures_need_rounds() {
        let cfg = RunConfig {
            rounds: None,
            ..base()
        };
        assert!(matches!(cfg.resolve(), Err(CliError::Usage(_))));
    }

    #[test]
    fn single_direction_agents_move_along_the_first_axis() {
        let cfg = RunConfig {
            learner: Some(LearnerKind::UnknownL1Single),
            fixture: None,
            radius: Some(2.0),
            gamma: Some(0.5),
            d: Some(3),
            length: Some(10),
            true_alpha: Some(0.7),
            ..base()
        };
        let r = cfg.resolve().unwrap();
        assert_eq!(
            r.agent.cost,
            CostModel::WeightedL1 {
                alphas: vec![0.7, 0.0, 0.0]
            }
        );
        assert_eq!(r.stream.len(), 10);
    }

    #[test]
    fn default_length_is_ten_bounds() {
        let cost = CostModel::L2 { alpha: 2.0 };
        assert_eq!(
            default_length(LearnerKind::StrategicL2, 2, 5.0, 1.0, Some(&cost)),
            490
        );
        assert_eq!(
            default_length(LearnerKind::UnknownL2, 2, 10.0, 0.01, None),
            MAX_DEFAULT_LENGTH
        );
    }

    #[test]
    fn l1_learners_get_a_nonnegative_separator() {
        let cfg = RunConfig {
            learner: Some(LearnerKind::StrategicL1),
            alphas: Some(vec![0.5, 0.25, 0.5]),
            radius: Some(2.0),
            gamma: Some(0.25),
            seed: Some(3),
            ..Default::default()
        };
        let w = cfg.resolve().unwrap().stream.w_star.unwrap();
        assert!(w.coords().iter().all(|c| *c >= 0.0));
    }
}
