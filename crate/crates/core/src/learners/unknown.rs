//! Search over the unknown manipulation budget.
//!
//! The controller runs a fresh inner learner per guess `alpha'`. An observed
//! point strictly inside the band `0 < x·w/|w| < threshold` can only appear
//! when the guess is too large, so it bisects down toward the last lower
//! bound `alpha''`. Too many mistakes in one phase mean the guess is too
//! small, and the guess doubles (at least to `gamma/2`, at most `R`).

use serde::{Deserialize, Serialize};

use super::{LearnerSnapshot, OnlineLearner, PhaseEvent, StepReport};
use crate::agents::DecisionRule;
use crate::types::{FeatureVector, Label};

/// An inner learner the controller can restart with a new budget guess.
pub trait PhaseLearner: OnlineLearner + Clone {
    /// Forget the weights and start over with budget `alpha`.
    fn restart(&mut self, alpha: f64);
    /// `x` lies strictly between the zero hyperplane and the published
    /// threshold. Never true while `w = 0`.
    fn in_band(&self, x: &FeatureVector) -> bool;
}

/// Mistakes allowed in one phase with guess `alpha_guess`:
/// `floor(4(R + alpha' + gamma/2)^2 / gamma^2)`.
pub fn mistake_budget(r: f64, alpha_guess: f64, gamma: f64) -> u64 {
    let raw = 4.0 * (r + alpha_guess + gamma / 2.0).powi(2) / (gamma * gamma);
    // keep exact integers from rounding down a step
    (raw * (1.0 + 1e-12)).floor() as u64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnknownCost<I> {
    /// `alpha''`: every guess at or below it has been ruled too small.
    pub alpha_lo: f64,
    /// `alpha'`: the guess published this phase.
    pub alpha_guess: f64,
    pub inner: I,
    pub phase_mistakes: u64,
    pub phase_budget: u64,
    pub r_known: f64,
    pub gamma: f64,
    pub phase_index: u32,
}

impl<I: PhaseLearner> UnknownCost<I> {
    pub fn new(mut inner: I, r: f64, gamma: f64) -> Self {
        inner.restart(0.0);
        UnknownCost {
            alpha_lo: 0.0,
            alpha_guess: 0.0,
            inner,
            phase_mistakes: 0,
            phase_budget: mistake_budget(r, 0.0, gamma),
            r_known: r,
            gamma,
            phase_index: 0,
        }
    }

    fn start_phase(&mut self, alpha: f64) {
        self.alpha_guess = alpha;
        self.inner.restart(alpha);
        self.phase_mistakes = 0;
        self.phase_budget = mistake_budget(self.r_known, alpha, self.gamma);
        self.phase_index += 1;
    }
}

impl<I: PhaseLearner> OnlineLearner for UnknownCost<I> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn rule(&self) -> DecisionRule {
        self.inner.rule()
    }

    fn step(&mut self, x: &FeatureVector, truth: Label) -> StepReport {
        if self.inner.in_band(x) {
            let mut report = StepReport::predicted(&self.inner.rule(), x, truth);
            report.event = PhaseEvent::PhaseDown;
            let mid = (self.alpha_lo + self.alpha_guess) / 2.0;
            self.start_phase(mid);
            return report;
        }
        let mut report = self.inner.step(x, truth);
        if report.mistake {
            self.phase_mistakes += 1;
            if self.phase_mistakes > self.phase_budget {
                report.event = PhaseEvent::PhaseUp;
                self.alpha_lo = self.alpha_guess;
                let next = (2.0 * self.alpha_guess)
                    .max(self.gamma / 2.0)
                    .min(self.r_known);
                self.start_phase(next);
            }
        }
        report
    }

    fn weights(&self) -> &FeatureVector {
        self.inner.weights()
    }

    fn alpha_published(&self) -> f64 {
        self.alpha_guess
    }

    fn phase_index(&self) -> u32 {
        self.phase_index
    }

    fn snapshot(&self) -> LearnerSnapshot {
        let inner = self.inner.snapshot();
        LearnerSnapshot {
            w: inner.w,
            alpha_published: self.alpha_guess,
            alpha_lo: Some(self.alpha_lo),
            dir_index: inner.dir_index,
            phase_index: self.phase_index,
            phase_mistakes: self.phase_mistakes,
            phase_budget: Some(self.phase_budget),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{FixedDirectionL1, StrategicL2};
    use proptest::prelude::*;

    fn fv<const N: usize>(v: [f64; N]) -> FeatureVector {
        v.into()
    }

    #[test]
    fn budgets() {
        // 4(1 + 0.5)^2 = 9
        assert_eq!(mistake_budget(1.0, 0.0, 1.0), 9);
        // 4(1 + 1)^2 / 4 = 4
        assert_eq!(mistake_budget(1.0, 0.0, 2.0), 4);
    }

    #[test]
    fn first_phase_up_jumps_to_half_gamma() {
        let mut c = UnknownCost::new(StrategicL2::new(1, 0.0, None), 10.0, 1.0);
        let budget = c.phase_budget;
        let mut events = vec![];
        // w flips between 0 and -1, wrong every round
        for k in 0..=budget {
            let x = if k % 2 == 0 { fv([1.0]) } else { fv([-1.0]) };
            events.push(c.step(&x, Label::Negative).event);
        }
        assert_eq!(*events.last().unwrap(), PhaseEvent::PhaseUp);
        assert_eq!(c.alpha_lo, 0.0);
        assert_eq!(c.alpha_guess, 0.5);
        assert!(c.inner.w.is_zero());
        assert_eq!(c.phase_index, 1);
    }

    #[test]
    fn phase_down_bisects() {
        let gamma = 1.0;
        let mut c = UnknownCost::new(StrategicL2::new(2, 0.0, None), 10.0, gamma);
        c.alpha_lo = gamma / 2.0;
        c.start_phase(2.0 * gamma);
        c.inner.w = fv([1.0, 0.0]);
        let r = c.step(&fv([1.0, 3.0]), Label::Positive);
        assert_eq!(r.event, PhaseEvent::PhaseDown);
        assert_eq!(c.alpha_guess, 1.25 * gamma);
        assert_eq!(c.alpha_lo, gamma / 2.0);
        assert!(c.inner.w.is_zero());
        assert_eq!(c.phase_mistakes, 0);
    }

    #[test]
    fn guess_is_clamped_to_r() {
        let mut c = UnknownCost::new(StrategicL2::new(1, 0.0, None), 1.0, 1.0);
        c.start_phase(0.8);
        c.phase_mistakes = c.phase_budget;
        c.inner.w = fv([1.0]);
        // predicted positive, truly negative
        let r = c.step(&fv([3.0]), Label::Negative);
        assert_eq!(r.event, PhaseEvent::PhaseUp);
        assert_eq!(c.alpha_guess, 1.0);
        assert_eq!(c.alpha_lo, 0.8);
    }

    #[test]
    fn one_dimension_l2_and_single_direction_agree() {
        let mut a = UnknownCost::new(StrategicL2::new(1, 0.0, None), 3.0, 0.5);
        let mut b = UnknownCost::new(FixedDirectionL1::new(1, 0.0, None), 3.0, 0.5);
        let pts = [2.0, -1.0, 0.7, -0.2, 1.5, 0.1, -2.5, 0.3, 2.9, -0.6];
        for k in 0..400 {
            let v = pts[k % pts.len()] * (1.0 + (k as f64) / 1000.0);
            // positive direction, so the single-direction correction never fires
            let y = if v > 0.0 {
                Label::Positive
            } else {
                Label::Negative
            };
            let x = fv([v]);
            let ra = a.step(&x, y);
            let rb = b.step(&x, y);
            assert_eq!(ra.prediction, rb.prediction, "round {k}");
            assert_eq!(ra.event, rb.event, "round {k}");
            assert_eq!(a.alpha_guess, b.alpha_guess);
            assert_eq!(a.inner.w, b.inner.w);
        }
    }

    proptest! {
        #[test]
        fn budget_is_monotone(r in 0.1f64..50.0, a in 0.0f64..50.0, g in 0.05f64..5.0, d in 0.0f64..5.0) {
            prop_assert!(mistake_budget(r, a, g) <= mistake_budget(r, a + d, g));
            prop_assert!(mistake_budget(r, a, g) <= mistake_budget(r + d, a, g));
            prop_assert!(mistake_budget(r, a, g + d) <= mistake_budget(r, a, g));
        }
    }
}
