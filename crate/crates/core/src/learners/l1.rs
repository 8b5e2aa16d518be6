//! Learners for weighted `l1` manipulation costs.
//!
//! Agents facing weighted `l1` costs move along one coordinate axis, the one
//! maximizing `alpha_j·|w_j|`. The learner keeps every coordinate of `w`
//! nonnegative (correction step) so agents only move along `+e_j`, and nudges
//! `w` by `eta·e_i` (tie-breaking step) so the agents' axis `i` is unique and
//! known to the learner.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{LearnerSnapshot, Mutation, OnlineLearner, PhaseLearner, StepReport};
use crate::agents::DecisionRule;
use crate::error::{Error, Result};
use crate::types::{compare_to_threshold, strictly_between, FeatureVector, Label};

/// Zeroes the negative coordinates of `w`. Returns the corrected vector and
/// the multipliers `mu_j = max(0, -w_j)` that were added along each `e_j`.
pub fn correction_step(w: &FeatureVector) -> (FeatureVector, Vec<f64>) {
    let mus: Vec<f64> = w.coords().iter().map(|&c| (-c).max(0.0)).collect();
    let corrected = w
        .coords()
        .iter()
        .zip(&mus)
        .map(|(&c, &mu)| if mu > 0.0 { 0.0 } else { c })
        .collect::<Vec<_>>();
    (corrected.into(), mus)
}

/// Picks `i = argmax_j alpha_j·w_j` (lowest index on ties) and returns it with
/// `w + eta·e_i`. After the step `i` is the strict argmax whenever
/// `alpha_i > 0` and `eta > 0`.
pub fn tie_break(w: &FeatureVector, alphas: &[f64], eta: f64) -> Result<(usize, FeatureVector)> {
    if w.is_zero() {
        return Err(Error::UndefinedMargin);
    }
    if alphas.len() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            actual: alphas.len(),
        });
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (j, (&wj, &aj)) in w.coords().iter().zip(alphas).enumerate() {
        let score = aj * wj;
        if score > best.1 {
            best = (j, score);
        }
    }
    let i = best.0;
    let mut next = w.clone();
    next.coords_mut()[i] += eta;
    Ok((i, next))
}

/// Tie-breaking step size, computed from the norm of `w` before the update.
pub fn eta_for(w_norm: f64, r: f64, alpha_max: f64) -> f64 {
    1.0 / (4.0 * w_norm + 8.0 * (r + alpha_max) + 2.0)
}

/// Surrogate point for an `l1` update along axis `i`: a negative point on the
/// manipulation hyperplane `x·w/|w| = alpha_i·w_i/|w|` is moved back by
/// `alpha_i` along `e_i`; everything else is returned unchanged.
pub fn surrogate_l1(
    x: &FeatureVector,
    w: &FeatureVector,
    alphas: &[f64],
    i: usize,
    truth: Label,
) -> Result<FeatureVector> {
    x.check_dim(w.dim())?;
    if w.is_zero() {
        return Err(Error::UndefinedMargin);
    }
    let alpha_i = *alphas.get(i).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "direction {i} out of range for {} budgets",
            alphas.len()
        ))
    })?;
    Ok(axis_pull_back(x, w, alpha_i, i, truth, 1.0))
}

fn axis_threshold(w: &FeatureVector, alpha_i: f64, i: usize) -> f64 {
    alpha_i * w.coords()[i] / w.norm()
}

fn axis_pull_back(
    x: &FeatureVector,
    w: &FeatureVector,
    alpha_i: f64,
    i: usize,
    truth: Label,
    sign: f64,
) -> FeatureVector {
    let on_plane = compare_to_threshold(x, w, axis_threshold(w, alpha_i, i)) == Ordering::Equal;
    let mut s = x.clone();
    if on_plane && truth == Label::Negative {
        s.coords_mut()[i] -= sign * alpha_i;
    }
    s
}

/// Strategic Perceptron for known weighted `l1` costs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategicL1 {
    pub w: FeatureVector,
    pub alphas: Vec<f64>,
    /// Manipulation axis; `Some` iff `w != 0`.
    pub dir_index: Option<usize>,
    pub eta_last: f64,
    /// Bound on true-point norms, used for `eta`.
    pub r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation: Option<Mutation>,
}

impl StrategicL1 {
    pub fn new(alphas: Vec<f64>, r: f64, mutation: Option<Mutation>) -> Self {
        StrategicL1 {
            w: FeatureVector::zeros(alphas.len()),
            alphas,
            dir_index: None,
            eta_last: 0.0,
            r,
            mutation,
        }
    }

    fn alpha_max(&self) -> f64 {
        self.alphas.iter().copied().fold(0.0, f64::max)
    }
}

impl OnlineLearner for StrategicL1 {
    fn dim(&self) -> usize {
        self.w.dim()
    }

    fn rule(&self) -> DecisionRule {
        match self.dir_index {
            Some(i) if !self.w.is_zero() => {
                DecisionRule::new(self.w.clone(), axis_threshold(&self.w, self.alphas[i], i))
            }
            _ => DecisionRule::all_positive(self.w.dim()),
        }
    }

    fn step(&mut self, x: &FeatureVector, truth: Label) -> StepReport {
        let mut report = StepReport::predicted(&self.rule(), x, truth);
        report.dir_index = self.dir_index;
        if !report.mistake {
            return report;
        }
        let eta = match self.mutation {
            Some(Mutation::ZeroEta) => 0.0,
            _ => eta_for(self.w.norm(), self.r, self.alpha_max()),
        };
        let surrogate = match self.dir_index {
            Some(i) if !self.w.is_zero() => {
                let sign = if self.mutation == Some(Mutation::FlipSurrogateSign) {
                    -1.0
                } else {
                    1.0
                };
                let t = axis_threshold(&self.w, self.alphas[i], i);
                if truth == Label::Positive && strictly_between(x, &self.w, 0.0, t) {
                    report.band_violation = true;
                }
                axis_pull_back(x, &self.w, self.alphas[i], i, truth, sign)
            }
            _ => x.clone(),
        };
        let updated = self.w.add_scaled(truth.sign(), &surrogate);
        let (corrected, mus) = if self.mutation == Some(Mutation::SkipCorrection) {
            let d = updated.dim();
            (updated, vec![0.0; d])
        } else {
            correction_step(&updated)
        };
        report.surrogate = Some(surrogate);
        report.mus = Some(mus);
        match tie_break(&corrected, &self.alphas, eta) {
            Ok((i, next)) => {
                self.w = next;
                self.dir_index = Some(i);
                self.eta_last = eta;
                report.eta = Some(eta);
            }
            Err(_) => {
                // back to predicting everything positive
                self.w = corrected;
                self.dir_index = None;
            }
        }
        report.w_updated = Some(self.w.clone());
        report
    }

    fn weights(&self) -> &FeatureVector {
        &self.w
    }

    fn alpha_published(&self) -> f64 {
        self.dir_index.map_or(0.0, |i| self.alphas[i])
    }

    fn snapshot(&self) -> LearnerSnapshot {
        LearnerSnapshot {
            w: self.w.clone(),
            alpha_published: self.alpha_published(),
            alpha_lo: None,
            dir_index: self.dir_index,
            phase_index: 0,
            phase_mistakes: 0,
            phase_budget: None,
        }
    }
}

/// `l1` learner whose agents can only move along `e_1` (all other
/// coordinates have zero budget). The axis is fixed, so there is no
/// tie-breaking, and only the first coordinate is corrected. Used as the
/// inner learner of the single-direction unknown-cost search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedDirectionL1 {
    pub w: FeatureVector,
    /// Published budget along `e_1`.
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation: Option<Mutation>,
}

impl FixedDirectionL1 {
    pub fn new(d: usize, alpha: f64, mutation: Option<Mutation>) -> Self {
        FixedDirectionL1 {
            w: FeatureVector::zeros(d),
            alpha,
            mutation,
        }
    }

    fn threshold(&self) -> f64 {
        axis_threshold(&self.w, self.alpha, 0)
    }
}

impl OnlineLearner for FixedDirectionL1 {
    fn dim(&self) -> usize {
        self.w.dim()
    }

    fn rule(&self) -> DecisionRule {
        if self.w.is_zero() {
            DecisionRule::all_positive(self.w.dim())
        } else {
            DecisionRule::new(self.w.clone(), self.threshold())
        }
    }

    fn step(&mut self, x: &FeatureVector, truth: Label) -> StepReport {
        let mut report = StepReport::predicted(&self.rule(), x, truth);
        report.dir_index = Some(0);
        if !report.mistake {
            return report;
        }
        let surrogate = if self.w.is_zero() {
            x.clone()
        } else {
            if truth == Label::Positive && self.in_band(x) {
                report.band_violation = true;
            }
            let sign = if self.mutation == Some(Mutation::FlipSurrogateSign) {
                -1.0
            } else {
                1.0
            };
            axis_pull_back(x, &self.w, self.alpha, 0, truth, sign)
        };
        let mut updated = self.w.add_scaled(truth.sign(), &surrogate);
        let mut mus = vec![0.0; updated.dim()];
        if self.mutation != Some(Mutation::SkipCorrection) {
            let first = updated.coords()[0];
            if first < 0.0 {
                mus[0] = -first;
                updated.coords_mut()[0] = 0.0;
            }
        }
        self.w = updated;
        report.surrogate = Some(surrogate);
        report.mus = Some(mus);
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
            dir_index: Some(0),
            phase_index: 0,
            phase_mistakes: 0,
            phase_budget: None,
        }
    }
}

impl PhaseLearner for FixedDirectionL1 {
    fn restart(&mut self, alpha: f64) {
        self.w = FeatureVector::zeros(self.w.dim());
        self.alpha = alpha;
    }

    /// `0 < x·w/|w| < alpha·w_1/|w|`; empty when `w_1 <= 0`.
    fn in_band(&self, x: &FeatureVector) -> bool {
        !self.w.is_zero() && strictly_between(x, &self.w, 0.0, self.threshold())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv<const N: usize>(v: [f64; N]) -> FeatureVector {
        v.into()
    }

    #[test]
    fn correction_zeroes_negatives() {
        let (w, mus) = correction_step(&fv([-2.0, 3.0]));
        assert_eq!(w, fv([0.0, 3.0]));
        assert_eq!(mus, vec![2.0, 0.0]);
        let (w, mus) = correction_step(&fv([1.0, 4.0]));
        assert_eq!(w, fv([1.0, 4.0]));
        assert_eq!(mus, vec![0.0, 0.0]);
    }

    #[test]
    fn tie_break_picks_the_best_axis() {
        let (i, w) = tie_break(&fv([1.0, 1.0]), &[2.0, 1.0], 0.1).unwrap();
        assert_eq!(i, 0);
        assert_eq!(w, fv([1.1, 1.0]));
    }

    #[test]
    fn symmetric_tie_goes_to_the_first_axis() {
        let alphas = [1.0, 1.0];
        let (i, w) = tie_break(&fv([1.0, 1.0]), &alphas, 0.1).unwrap();
        assert_eq!(i, 0);
        assert_eq!(w, fv([1.1, 1.0]));
        let scores: Vec<f64> = w.coords().iter().zip(&alphas).map(|(a, b)| a * b).collect();
        assert!(scores[0] > scores[1]);
    }

    #[test]
    fn tie_break_rejects_zero() {
        assert!(tie_break(&fv([0.0, 0.0]), &[1.0, 1.0], 0.1).is_err());
    }

    #[test]
    fn eta_formula() {
        assert_eq!(eta_for(1.0, 2.0, 3.0), 1.0 / (4.0 + 40.0 + 2.0));
    }

    #[test]
    fn l1_surrogate_recovers_full_moves() {
        let w = fv([1.0, 0.5]);
        let alphas = [2.0, 1.0];
        // threshold alpha_1·w_1/|w|; x = z + 2·e_1 lands on it from z = (-1, 2)
        let x = fv([1.0, 2.0]);
        assert_eq!(
            compare_to_threshold(&x, &w, axis_threshold(&w, 2.0, 0)),
            Ordering::Equal
        );
        let s = surrogate_l1(&x, &w, &alphas, 0, Label::Negative).unwrap();
        assert_eq!(s, fv([-1.0, 2.0]));
        assert_eq!(
            surrogate_l1(&x, &w, &alphas, 0, Label::Positive).unwrap(),
            x
        );
        let above = fv([3.0, 2.0]);
        assert_eq!(
            surrogate_l1(&above, &w, &alphas, 0, Label::Negative).unwrap(),
            above
        );
    }

    #[test]
    fn zero_mode_updates_then_corrects() {
        let mut l = StrategicL1::new(vec![1.0, 1.0], 2.0, None);
        let r = l.step(&fv([1.0, -2.0]), Label::Negative);
        assert!(r.mistake);
        // -x = (-1, 2) corrected to (0, 2), then eta added on axis 2
        assert_eq!(r.mus, Some(vec![1.0, 0.0]));
        assert_eq!(l.dir_index, Some(1));
        let eta = eta_for(0.0, 2.0, 1.0);
        assert_eq!(l.w, fv([0.0, 2.0 + eta]));
    }

    #[test]
    fn all_negative_update_returns_to_zero_mode() {
        let mut l = StrategicL1::new(vec![1.0, 1.0], 2.0, None);
        // -x has no positive coordinate
        l.step(&fv([1.0, 2.0]), Label::Negative);
        assert!(l.w.is_zero());
        assert_eq!(l.dir_index, None);
        assert_eq!(l.rule().classify(&fv([-5.0, -5.0])), Label::Positive);
    }

    #[test]
    fn fixed_direction_band() {
        let mut l = FixedDirectionL1::new(2, 1.0, None);
        l.w = fv([1.0, 1.0]);
        // threshold = 1·1/sqrt(2)
        assert!(l.in_band(&fv([0.3, 0.0])));
        assert!(!l.in_band(&fv([1.0, 0.0])));
        l.w = fv([0.0, 1.0]);
        assert!(!l.in_band(&fv([0.0, 0.3])));
    }
}
