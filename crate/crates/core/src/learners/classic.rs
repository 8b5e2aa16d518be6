use serde::{Deserialize, Serialize};

use super::{InitialPrediction, LearnerSnapshot, OnlineLearner, StepReport};
use crate::agents::DecisionRule;
use crate::types::{Classifier, FeatureVector, Label};

/// The textbook Perceptron: predict `sgn(x·w)`, add `±x` on a mistake.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicPerceptron {
    pub classifier: Classifier,
    #[serde(default)]
    pub initial_prediction: InitialPrediction,
}

impl ClassicPerceptron {
    pub fn new(d: usize) -> Self {
        ClassicPerceptron {
            classifier: Classifier::zero(d),
            initial_prediction: InitialPrediction::Positive,
        }
    }

    pub fn with_initial_prediction(mut self, initial: InitialPrediction) -> Self {
        self.initial_prediction = initial;
        self
    }
}

/// One round of the classic Perceptron on a bare [`Classifier`].
pub fn classic_step(state: &Classifier, x: &FeatureVector, truth: Label) -> (Label, Classifier) {
    let prediction = DecisionRule::new(state.w.clone(), 0.0).classify(x);
    if prediction == truth {
        return (prediction, state.clone());
    }
    let w = state.w.add_scaled(truth.sign(), x);
    (prediction, Classifier { w })
}

impl OnlineLearner for ClassicPerceptron {
    fn dim(&self) -> usize {
        self.classifier.w.dim()
    }

    fn rule(&self) -> DecisionRule {
        if self.classifier.w.is_zero() {
            self.initial_prediction.zero_rule(self.dim())
        } else {
            DecisionRule::new(self.classifier.w.clone(), 0.0)
        }
    }

    fn step(&mut self, x: &FeatureVector, truth: Label) -> StepReport {
        let mut report = StepReport::predicted(&self.rule(), x, truth);
        if report.mistake {
            self.classifier.w = self.classifier.w.add_scaled(truth.sign(), x);
            report.surrogate = Some(x.clone());
            report.w_updated = Some(self.classifier.w.clone());
        }
        report
    }

    fn weights(&self) -> &FeatureVector {
        &self.classifier.w
    }

    fn alpha_published(&self) -> f64 {
        0.0
    }

    fn snapshot(&self) -> LearnerSnapshot {
        LearnerSnapshot {
            w: self.classifier.w.clone(),
            alpha_published: 0.0,
            alpha_lo: None,
            dir_index: None,
            phase_index: 0,
            phase_mistakes: 0,
            phase_budget: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_updates() {
        // manipulated C seen at (0,-1) while w = (1,0)
        let (pred, next) = classic_step(
            &Classifier {
                w: [1.0, 0.0].into(),
            },
            &[0.0, -1.0].into(),
            Label::Negative,
        );
        assert_eq!(pred, Label::Positive);
        assert_eq!(next.w, [1.0, 1.0].into());
        // B cannot reach the boundary of w = (1,1)
        let (pred, next) = classic_step(&next, &[0.0, -1.0].into(), Label::Positive);
        assert_eq!(pred, Label::Negative);
        assert_eq!(next.w, [1.0, 0.0].into());
    }

    #[test]
    fn correct_prediction_keeps_state() {
        let state = Classifier {
            w: [1.0, 0.0].into(),
        };
        let (pred, next) = classic_step(&state, &[2.0, 5.0].into(), Label::Positive);
        assert_eq!(pred, Label::Positive);
        assert_eq!(next, state);
    }

    #[test]
    fn all_negative_start_adds_the_first_positive() {
        let mut p = ClassicPerceptron::new(2).with_initial_prediction(InitialPrediction::Negative);
        let r = p.step(&[1.0, 0.0].into(), Label::Positive);
        assert!(r.mistake);
        assert_eq!(p.weights(), &FeatureVector::from([1.0, 0.0]));
    }

    #[test]
    fn zero_weights_predict_positive() {
        let mut p = ClassicPerceptron::new(2);
        let r = p.step(&[-1.0, 0.0].into(), Label::Negative);
        assert_eq!(r.prediction, Label::Positive);
        assert!(r.mistake);
        assert_eq!(p.weights(), &FeatureVector::from([1.0, 0.0]));
    }
}
