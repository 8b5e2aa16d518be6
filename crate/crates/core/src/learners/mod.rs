//! Online learners: the classic Perceptron and its strategic variants.
//!
//! Every learner publishes a [`DecisionRule`] before a round, then predicts on
//! the observed point and updates on a mistake. Steps mutate the state in
//! place; all states are `Clone` so callers can keep snapshots.

mod classic;
mod l1;
mod l2;
mod unknown;

use serde::{Deserialize, Serialize};

use crate::agents::DecisionRule;
use crate::error::{Error, Result};
use crate::types::{FeatureVector, Label};

pub use classic::{classic_step, ClassicPerceptron};
pub use l1::{correction_step, eta_for, surrogate_l1, tie_break, FixedDirectionL1, StrategicL1};
pub use l2::{surrogate_l2, StrategicL2};
pub use unknown::{mistake_budget, PhaseLearner, UnknownCost};

/// Deliberate faults used to show the invariant checks are not vacuous.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    /// Push negative surrogates further along the manipulation direction
    /// instead of pulling them back.
    FlipSurrogateSign,
    /// Leave negative coordinates of the `l1` learner's weights in place.
    SkipCorrection,
    /// Use `eta = 0` in the tie-breaking step.
    ZeroEta,
}

/// What a learner predicts before its first update. The strategic
/// algorithms start all-positive; `Negative` reproduces runs narrated with a
/// classifier that rejects everything until it first updates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialPrediction {
    #[default]
    Positive,
    Negative,
}

impl InitialPrediction {
    pub(crate) fn zero_rule(self, d: usize) -> DecisionRule {
        match self {
            InitialPrediction::Positive => DecisionRule::all_positive(d),
            InitialPrediction::Negative => DecisionRule::all_negative(d),
        }
    }
}

/// Build-time switches shared by all learners.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnerOptions {
    #[serde(default)]
    pub mutation: Option<Mutation>,
    #[serde(default)]
    pub initial_prediction: InitialPrediction,
}

/// Outcome of a phase of the unknown-cost search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseEvent {
    #[default]
    None,
    PhaseUp,
    PhaseDown,
}

impl PhaseEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseEvent::None => "none",
            PhaseEvent::PhaseUp => "phase_up",
            PhaseEvent::PhaseDown => "phase_down",
        }
    }
}

/// Everything a learner did in one round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub prediction: Label,
    pub mistake: bool,
    /// Weights of the published rule.
    pub w_before: FeatureVector,
    /// Threshold of the published rule.
    pub threshold: f64,
    /// Point added to (positives) or subtracted from (negatives) `w`;
    /// present iff an update happened.
    pub surrogate: Option<FeatureVector>,
    /// Weights right after the update, before any phase reset.
    pub w_updated: Option<FeatureVector>,
    /// Correction multipliers of the `l1` learners.
    pub mus: Option<Vec<f64>>,
    /// Tie-breaking perturbation used in this update.
    pub eta: Option<f64>,
    /// Manipulation direction the prediction assumed.
    pub dir_index: Option<usize>,
    /// The update needed a surrogate for a point inside the forbidden band,
    /// where none is defined; the observed point was used as is.
    pub band_violation: bool,
    pub event: PhaseEvent,
}

impl StepReport {
    pub(crate) fn predicted(rule: &DecisionRule, x: &FeatureVector, truth: Label) -> Self {
        let prediction = rule.classify(x);
        StepReport {
            prediction,
            mistake: prediction != truth,
            w_before: rule.w.clone(),
            threshold: rule.threshold,
            surrogate: None,
            w_updated: None,
            mus: None,
            eta: None,
            dir_index: None,
            band_violation: false,
            event: PhaseEvent::None,
        }
    }
}

/// Compact learner state for transcripts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerSnapshot {
    pub w: FeatureVector,
    pub alpha_published: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir_index: Option<usize>,
    pub phase_index: u32,
    pub phase_mistakes: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_budget: Option<u64>,
}

pub trait OnlineLearner {
    fn dim(&self) -> usize;
    /// Rule published to the agent of the coming round.
    fn rule(&self) -> DecisionRule;
    fn step(&mut self, x: &FeatureVector, truth: Label) -> StepReport;
    fn weights(&self) -> &FeatureVector;
    fn alpha_published(&self) -> f64;
    fn phase_index(&self) -> u32 {
        0
    }
    fn snapshot(&self) -> LearnerSnapshot;
}

/// Which algorithm to run, with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case")]
pub enum LearnerConfig {
    Classic,
    StrategicL2 {
        alpha: f64,
    },
    /// `r` bounds the true-point norms and sets the tie-breaking `eta`.
    StrategicL1 {
        alphas: Vec<f64>,
        r: f64,
    },
    UnknownL2 {
        r: f64,
        gamma: f64,
    },
    UnknownL1Single {
        r: f64,
        gamma: f64,
    },
}

impl LearnerConfig {
    pub fn id(&self) -> &'static str {
        match self {
            LearnerConfig::Classic => "classic",
            LearnerConfig::StrategicL2 { .. } => "strategic-l2",
            LearnerConfig::StrategicL1 { .. } => "strategic-l1",
            LearnerConfig::UnknownL2 { .. } => "unknown-l2",
            LearnerConfig::UnknownL1Single { .. } => "unknown-l1-single",
        }
    }

    pub fn build(&self, d: usize, options: LearnerOptions) -> Result<Learner> {
        if d == 0 {
            return Err(Error::InvalidParameter(
                "dimension must be at least 1".into(),
            ));
        }
        let LearnerOptions {
            mutation,
            initial_prediction,
        } = options;
        if initial_prediction == InitialPrediction::Negative
            && !matches!(
                self,
                LearnerConfig::Classic | LearnerConfig::StrategicL2 { .. }
            )
        {
            return Err(Error::InvalidParameter(format!(
                "{} always starts by predicting positive",
                self.id()
            )));
        }
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )))
            }
        };
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        Ok(match self {
            LearnerConfig::Classic => Learner::Classic(
                ClassicPerceptron::new(d).with_initial_prediction(initial_prediction),
            ),
            LearnerConfig::StrategicL2 { alpha } => {
                nonneg("alpha", *alpha)?;
                Learner::StrategicL2(
                    StrategicL2::new(d, *alpha, mutation)
                        .with_initial_prediction(initial_prediction),
                )
            }
            LearnerConfig::StrategicL1 { alphas, r } => {
                if alphas.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        actual: alphas.len(),
                    });
                }
                for a in alphas {
                    nonneg("alpha", *a)?;
                }
                nonneg("r", *r)?;
                Learner::StrategicL1(StrategicL1::new(alphas.clone(), *r, mutation))
            }
            LearnerConfig::UnknownL2 { r, gamma } => {
                positive("r", *r)?;
                positive("gamma", *gamma)?;
                Learner::UnknownL2(UnknownCost::new(
                    StrategicL2::new(d, 0.0, mutation),
                    *r,
                    *gamma,
                ))
            }
            LearnerConfig::UnknownL1Single { r, gamma } => {
                positive("r", *r)?;
                positive("gamma", *gamma)?;
                Learner::UnknownL1Single(UnknownCost::new(
                    FixedDirectionL1::new(d, 0.0, mutation),
                    *r,
                    *gamma,
                ))
            }
        })
    }
}

/// Any of the learners, behind one [`OnlineLearner`] implementation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case")]
pub enum Learner {
    Classic(ClassicPerceptron),
    StrategicL2(StrategicL2),
    StrategicL1(StrategicL1),
    UnknownL2(UnknownCost<StrategicL2>),
    UnknownL1Single(UnknownCost<FixedDirectionL1>),
}

macro_rules! dispatch {
    ($self:expr, $l:ident => $e:expr) => {
        match $self {
            Learner::Classic($l) => $e,
            Learner::StrategicL2($l) => $e,
            Learner::StrategicL1($l) => $e,
            Learner::UnknownL2($l) => $e,
            Learner::UnknownL1Single($l) => $e,
        }
    };
}

impl OnlineLearner for Learner {
    fn dim(&self) -> usize {
        dispatch!(self, l => l.dim())
    }
    fn rule(&self) -> DecisionRule {
        dispatch!(self, l => l.rule())
    }
    fn step(&mut self, x: &FeatureVector, truth: Label) -> StepReport {
        dispatch!(self, l => l.step(x, truth))
    }
    fn weights(&self) -> &FeatureVector {
        dispatch!(self, l => l.weights())
    }
    fn alpha_published(&self) -> f64 {
        dispatch!(self, l => l.alpha_published())
    }
    fn phase_index(&self) -> u32 {
        dispatch!(self, l => l.phase_index())
    }
    fn snapshot(&self) -> LearnerSnapshot {
        dispatch!(self, l => l.snapshot())
    }
}
