//! Runs a learner against agents on a stream and checks the transcript.
//!
//! Each round the agent best-responds to the rule the learner published,
//! the learner predicts on the observed point, the truth is revealed and the
//! learner updates. Learners never see the true point `z`.

mod checks;
mod io;

use serde::{Deserialize, Serialize};

use crate::agents::{best_response, DecisionRule};
use crate::error::{Error, Result};
use crate::learners::{LearnerConfig, LearnerOptions, OnlineLearner, PhaseEvent};
use crate::streams::{Stream, StreamSource};
use crate::types::{CostModel, FeatureVector, Label};

pub use checks::{
    audit_lemma_invariants, check_agent_oracle, check_agent_rationality, check_forbidden_region,
    check_mistake_bound, detect_cycle, phase_bound_checks, phases, unknown_total_bound, AuditMode,
    AuditReport, BoundCheck, BoundId, PhaseBoundCheck, PhaseRegime, PhaseSummary, Violation,
};
pub use io::{read_jsonl, replay, write_csv, write_jsonl, ReplayOutcome, CSV_HEADER};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    /// Best-responds to the published rule.
    #[default]
    Rational,
    /// Shows its true point unchanged; the stream already holds observed
    /// points.
    Replay,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub kind: AgentKind,
    /// The agents' true costs, hidden from the learner.
    pub cost: CostModel,
}

impl AgentConfig {
    pub fn rational(cost: CostModel) -> Self {
        AgentConfig {
            kind: AgentKind::Rational,
            cost,
        }
    }

    pub fn replay() -> Self {
        AgentConfig {
            kind: AgentKind::Replay,
            cost: CostModel::L2 { alpha: 0.0 },
        }
    }

    /// Budget the agents actually move with; 0 for replayed points.
    /// For `l1` costs this is the first coordinate's budget.
    pub fn effective_alpha(&self) -> f64 {
        match (&self.kind, &self.cost) {
            (AgentKind::Replay, _) => 0.0,
            (_, CostModel::L2 { alpha }) => *alpha,
            (_, CostModel::WeightedL1 { alphas }) => alphas.first().copied().unwrap_or(0.0),
        }
    }
}

/// Everything needed to rerun an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub stream: StreamSource,
    pub learner: LearnerConfig,
    #[serde(default)]
    pub options: LearnerOptions,
    pub agent: AgentConfig,
    pub max_rounds: usize,
    pub d: usize,
    /// Certified separator of the true points, if known.
    pub w_star: Option<FeatureVector>,
    /// Bound on `|z|`.
    pub radius: f64,
}

/// One round of the protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: usize,
    pub z: FeatureVector,
    pub x: FeatureVector,
    /// Surrogate used in the update; absent when no update happened.
    pub x_tilde: Option<FeatureVector>,
    pub prediction: Label,
    pub truth: Label,
    pub mistake: bool,
    /// Learner weights at the end of the round (after any phase restart).
    pub w_after: FeatureVector,
    /// Budget the learner published for this round.
    pub alpha_published: f64,
    /// Phase in which the prediction was made.
    pub phase: u32,
    pub event: PhaseEvent,
    pub agent_cost: f64,
    /// Weights of the published rule.
    pub w_before: FeatureVector,
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub rejects_all: bool,
    /// Weights right after the update, before any phase restart.
    pub w_updated: Option<FeatureVector>,
    pub mus: Option<Vec<f64>>,
    pub eta: Option<f64>,
    pub dir_index: Option<usize>,
    #[serde(default)]
    pub band_violation: bool,
}

impl RoundRecord {
    pub fn rule(&self) -> DecisionRule {
        DecisionRule {
            w: self.w_before.clone(),
            threshold: self.threshold,
            rejects_all: self.rejects_all,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub meta: RunMeta,
    pub rounds: Vec<RoundRecord>,
    pub total_mistakes: u64,
}

fn learner_dim(config: &LearnerConfig) -> Option<usize> {
    match config {
        LearnerConfig::StrategicL1 { alphas, .. } => Some(alphas.len()),
        _ => None,
    }
}

/// Plays `min(max_rounds, stream length)` rounds.
pub fn run_experiment(
    learner: &LearnerConfig,
    options: LearnerOptions,
    agent: &AgentConfig,
    stream: &Stream,
    max_rounds: usize,
) -> Result<Transcript> {
    if max_rounds == 0 {
        return Err(Error::InvalidParameter(
            "max_rounds must be at least 1".into(),
        ));
    }
    agent.cost.validate()?;
    let d = stream
        .dim()
        .or_else(|| learner_dim(learner))
        .or(match &agent.cost {
            CostModel::WeightedL1 { alphas } => Some(alphas.len()),
            CostModel::L2 { .. } => None,
        })
        .unwrap_or(1);
    if let CostModel::WeightedL1 { alphas } = &agent.cost {
        if alphas.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: alphas.len(),
            });
        }
    }
    let mut model = learner.build(d, options)?;
    let meta = RunMeta {
        stream: stream.source.clone(),
        learner: learner.clone(),
        options,
        agent: agent.clone(),
        max_rounds,
        d,
        w_star: stream.w_star.clone(),
        radius: stream.radius,
    };

    let mut rounds = Vec::with_capacity(max_rounds.min(stream.len()));
    let mut total_mistakes = 0;
    for (t, record) in stream.records.iter().take(max_rounds).enumerate() {
        record.z.check_dim(d)?;
        let rule = model.rule();
        let (x, agent_cost) = match agent.kind {
            AgentKind::Rational => {
                let m = best_response(&record.z, &rule, &agent.cost)?;
                (m.x, m.cost)
            }
            AgentKind::Replay => (record.z.clone(), 0.0),
        };
        let alpha_published = model.alpha_published();
        let phase = model.phase_index();
        let report = model.step(&x, record.label);
        total_mistakes += report.mistake as u64;
        rounds.push(RoundRecord {
            t,
            z: record.z.clone(),
            x,
            x_tilde: report.surrogate,
            prediction: report.prediction,
            truth: record.label,
            mistake: report.mistake,
            w_after: model.weights().clone(),
            alpha_published,
            phase,
            event: report.event,
            agent_cost,
            w_before: rule.w,
            threshold: rule.threshold,
            rejects_all: rule.rejects_all,
            w_updated: report.w_updated,
            mus: report.mus,
            eta: report.eta,
            dir_index: report.dir_index,
            band_violation: report.band_violation,
        });
    }
    Ok(Transcript {
        meta,
        rounds,
        total_mistakes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::InitialPrediction;
    use crate::streams::Fixture;

    #[test]
    fn inseparable_fixture_trajectory() {
        let stream = Fixture::Example2.stream(5);
        let options = LearnerOptions {
            initial_prediction: stream.initial_prediction,
            ..Default::default()
        };
        let agent = AgentConfig::rational(stream.cost_model.clone().unwrap());
        let tr = run_experiment(
            &LearnerConfig::StrategicL2 { alpha: 5.0 },
            options,
            &agent,
            &stream,
            5,
        )
        .unwrap();
        let ws: Vec<FeatureVector> = tr.rounds.iter().map(|r| r.w_after.clone()).collect();
        let expected: Vec<FeatureVector> = [
            [-4.0, -3.0],
            [-7.0, 1.0],
            [-4.0, 3.0],
            [-7.0, -1.0],
            [-4.0, -3.0],
        ]
        .into_iter()
        .map(FeatureVector::from)
        .collect();
        assert_eq!(ws, expected);
        assert_eq!(tr.total_mistakes, 5);
        // z_1 moves onto the threshold and is pulled back
        assert_eq!(tr.rounds[1].x, [-1.0, -7.0].into());
        assert_eq!(tr.rounds[1].x_tilde, Some([3.0, -4.0].into()));
        assert_eq!(tr.rounds[3].x_tilde, Some([3.0, 4.0].into()));
    }

    #[test]
    fn empty_stream_gives_empty_transcript() {
        let stream = Stream::from_records(StreamSource::Transcript, vec![]);
        let agent = AgentConfig::rational(CostModel::L2 { alpha: 1.0 });
        let tr = run_experiment(
            &LearnerConfig::Classic,
            Default::default(),
            &agent,
            &stream,
            10,
        )
        .unwrap();
        assert!(tr.rounds.is_empty());
        assert_eq!(tr.total_mistakes, 0);
    }

    #[test]
    fn agent_dimension_must_match() {
        let stream = Fixture::Example2.stream(3);
        let agent = AgentConfig::rational(CostModel::WeightedL1 {
            alphas: vec![1.0; 3],
        });
        let err = run_experiment(
            &LearnerConfig::Classic,
            Default::default(),
            &agent,
            &stream,
            3,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn mistakes_match_flags() {
        let stream = Fixture::Example1Original.stream(30);
        let agent = AgentConfig::rational(stream.cost_model.clone().unwrap());
        let options = LearnerOptions {
            initial_prediction: InitialPrediction::Negative,
            ..Default::default()
        };
        let tr = run_experiment(&LearnerConfig::Classic, options, &agent, &stream, 30).unwrap();
        for r in &tr.rounds {
            assert_eq!(r.mistake, r.prediction != r.truth);
            assert_eq!(r.x_tilde.is_some(), r.w_updated.is_some());
        }
        assert_eq!(
            tr.total_mistakes,
            tr.rounds.iter().filter(|r| r.mistake).count() as u64
        );
    }
}
