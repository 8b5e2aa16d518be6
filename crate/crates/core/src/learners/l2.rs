use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{
    InitialPrediction, LearnerSnapshot, Mutation, OnlineLearner, PhaseLearner, StepReport,
};
use crate::agents::DecisionRule;
use crate::error::{Error, Result};
use crate::types::{compare_to_threshold, FeatureVector, Label};

/// Surrogate point for an `l2` update.
///
/// A negative point on the manipulation hyperplane `x·w/|w| = alpha` is pulled
/// back by `alpha` along `w/|w|`; every other admissible point is returned
/// unchanged. Points strictly between the zero hyperplane and the threshold
/// cannot come from a rational agent and yield [`Error::ForbiddenBand`].
pub fn surrogate_l2(
    x: &FeatureVector,
    w: &FeatureVector,
    alpha: f64,
    truth: Label,
) -> Result<FeatureVector> {
    pull_back(x, w, alpha, truth, 1.0)
}

fn pull_back(
    x: &FeatureVector,
    w: &FeatureVector,
    alpha: f64,
    truth: Label,
    sign: f64,
) -> Result<FeatureVector> {
    x.check_dim(w.dim())?;
    let norm = w.norm();
    if norm == 0.0 {
        return Err(Error::UndefinedMargin);
    }
    match compare_to_threshold(x, w, alpha) {
        Ordering::Equal if truth == Label::Negative => Ok(x.add_scaled(-sign * alpha / norm, w)),
        Ordering::Equal | Ordering::Greater => Ok(x.clone()),
        Ordering::Less if compare_to_threshold(x, w, 0.0) != Ordering::Greater => Ok(x.clone()),
        Ordering::Less => Err(Error::ForbiddenBand {
            margin: x.dot(w) / norm,
            threshold: alpha,
        }),
    }
}

/// Strategic Perceptron for `l2` costs with (published) budget `alpha`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategicL2 {
    pub w: FeatureVector,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation: Option<Mutation>,
    #[serde(default)]
    pub initial_prediction: InitialPrediction,
}

impl StrategicL2 {
    pub fn new(d: usize, alpha: f64, mutation: Option<Mutation>) -> Self {
        StrategicL2 {
            w: FeatureVector::zeros(d),
            alpha,
            mutation,
            initial_prediction: InitialPrediction::Positive,
        }
    }

    pub fn with_initial_prediction(mut self, initial: InitialPrediction) -> Self {
        self.initial_prediction = initial;
        self
    }
}

impl OnlineLearner for StrategicL2 {
    fn dim(&self) -> usize {
        self.w.dim()
    }

    fn rule(&self) -> DecisionRule {
        if self.w.is_zero() {
            self.initial_prediction.zero_rule(self.w.dim())
        } else {
            DecisionRule::new(self.w.clone(), self.alpha)
        }
    }

    fn step(&mut self, x: &FeatureVector, truth: Label) -> StepReport {
        let mut report = StepReport::predicted(&self.rule(), x, truth);
        if !report.mistake {
            return report;
        }
        let surrogate = if self.w.is_zero() {
            x.clone()
        } else {
            let sign = if self.mutation == Some(Mutation::FlipSurrogateSign) {
                -1.0
            } else {
                1.0
            };
            match pull_back(x, &self.w, self.alpha, truth, sign) {
                Ok(s) => s,
                Err(_) => {
                    report.band_violation = true;
                    x.clone()
                }
            }
        };
        self.w = self.w.add_scaled(truth.sign(), &surrogate);
        report.surrogate = Some(surrogate);
        report.w_updated = Some(self.w.clone());
        report
    }

    fn weights(&self) -> &FeatureVector {
        &self.w
    }

    fn alpha_published(&self) -> f64 {
        self.alpha
    }

    fn snapshot(&self) -> LearnerSnapshot {
        LearnerSnapshot {
            w: self.w.clone(),
            alpha_published: self.alpha,
            alpha_lo: None,
            dir_index: None,
            phase_index: 0,
            phase_mistakes: 0,
            phase_budget: None,
        }
    }
}

impl PhaseLearner for StrategicL2 {
    fn restart(&mut self, alpha: f64) {
        self.w = FeatureVector::zeros(self.w.dim());
        self.alpha = alpha;
    }

    fn in_band(&self, x: &FeatureVector) -> bool {
        crate::types::strictly_between(x, &self.w, 0.0, self.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv<const N: usize>(v: [f64; N]) -> FeatureVector {
        v.into()
    }

    #[test]
    fn surrogates_of_the_inseparable_example() {
        let s = surrogate_l2(&fv([-1.0, -7.0]), &fv([-4.0, -3.0]), 5.0, Label::Negative).unwrap();
        assert_eq!(s, fv([3.0, -4.0]));
        let s = surrogate_l2(&fv([-1.0, 7.0]), &fv([-4.0, 3.0]), 5.0, Label::Negative).unwrap();
        assert_eq!(s, fv([3.0, 4.0]));
        let s = surrogate_l2(&fv([3.0, 2.0]), &fv([-7.0, 1.0]), 5.0, Label::Positive).unwrap();
        assert_eq!(s, fv([3.0, 2.0]));
    }

    #[test]
    fn positives_on_the_hyperplane_are_kept() {
        let s = surrogate_l2(&fv([-1.0, -7.0]), &fv([-4.0, -3.0]), 5.0, Label::Positive).unwrap();
        assert_eq!(s, fv([-1.0, -7.0]));
    }

    #[test]
    fn band_points_have_no_surrogate() {
        let err = surrogate_l2(&fv([1.0, 0.0]), &fv([1.0, 0.0]), 5.0, Label::Positive).unwrap_err();
        assert!(matches!(err, Error::ForbiddenBand { .. }));
        assert!(surrogate_l2(
            &fv([1.0, 0.0]),
            &FeatureVector::zeros(2),
            5.0,
            Label::Positive
        )
        .is_err());
    }

    #[test]
    fn inseparable_trajectory() {
        let mut l =
            StrategicL2::new(2, 5.0, None).with_initial_prediction(InitialPrediction::Negative);
        let stream = [
            (fv([-4.0, -3.0]), Label::Positive),
            (fv([-1.0, -7.0]), Label::Negative),
            (fv([3.0, 2.0]), Label::Positive),
            (fv([-1.0, 7.0]), Label::Negative),
            (fv([3.0, -2.0]), Label::Positive),
        ];
        let expected = [
            [-4.0, -3.0],
            [-7.0, 1.0],
            [-4.0, 3.0],
            [-7.0, -1.0],
            [-4.0, -3.0],
        ];
        for ((x, y), w) in stream.iter().zip(&expected) {
            let r = l.step(x, *y);
            assert!(r.mistake);
            assert_eq!(l.w, FeatureVector::from(*w));
        }
    }

    #[test]
    fn all_positive_start_ignores_a_leading_positive() {
        let mut l = StrategicL2::new(2, 5.0, None);
        assert!(!l.step(&fv([-4.0, -3.0]), Label::Positive).mistake);
        assert!(l.w.is_zero());
    }

    #[test]
    fn zero_weight_branch_subtracts_the_point() {
        let mut l = StrategicL2::new(2, 1.0, None);
        let r = l.step(&fv([0.5, -2.0]), Label::Positive);
        assert!(!r.mistake);
        let r = l.step(&fv([0.5, -2.0]), Label::Negative);
        assert!(r.mistake);
        assert_eq!(l.w, fv([-0.5, 2.0]));
        assert_eq!(r.surrogate, Some(fv([0.5, -2.0])));
    }
}
