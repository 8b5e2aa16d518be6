//! Geometric primitives shared by agents, learners and the harness.
//!
//! Vectors are dense `f64`. Exact equalities of the form `x·w/|w| = T` are
//! evaluated on the raw form `x·w` vs `T·|w|` with the relative tolerance
//! [`EPS_EQ`], see [`compare_to_threshold`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative tolerance for "lies on the hyperplane" decisions.
pub const EPS_EQ: f64 = 1e-9;

/// A point (or weight vector) in `R^d`.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    /// Wraps coordinates without validation. Use [`FeatureVector::try_new`]
    /// for untrusted input.
    pub fn new(coords: Vec<f64>) -> Self {
        FeatureVector(coords)
    }

    pub fn try_new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidVector("dimension must be at least 1".into()));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidVector(format!(
                "coordinate {i} is not finite ({})",
                coords[i]
            )));
        }
        Ok(FeatureVector(coords))
    }

    pub fn zeros(d: usize) -> Self {
        FeatureVector(vec![0.0; d])
    }

    /// The `i`-th standard basis vector scaled by `scale`.
    pub fn basis(d: usize, i: usize, scale: f64) -> Self {
        let mut v = vec![0.0; d];
        v[i] = scale;
        FeatureVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn scaled(&self, s: f64) -> FeatureVector {
        FeatureVector(self.0.iter().map(|c| c * s).collect())
    }

    /// `self + s·other`
    pub fn add_scaled(&self, s: f64, other: &FeatureVector) -> FeatureVector {
        debug_assert_eq!(self.dim(), other.dim());
        FeatureVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + s * b)
                .collect(),
        )
    }

    pub fn distance(&self, other: &FeatureVector) -> f64 {
        (self - other).norm()
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                actual: self.dim(),
            })
        }
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(v: Vec<f64>) -> Self {
        FeatureVector(v)
    }
}

impl<const N: usize> From<[f64; N]> for FeatureVector {
    fn from(v: [f64; N]) -> Self {
        FeatureVector(v.to_vec())
    }
}

impl Add for &FeatureVector {
    type Output = FeatureVector;
    fn add(self, rhs: &FeatureVector) -> FeatureVector {
        self.add_scaled(1.0, rhs)
    }
}

impl Sub for &FeatureVector {
    type Output = FeatureVector;
    fn sub(self, rhs: &FeatureVector) -> FeatureVector {
        self.add_scaled(-1.0, rhs)
    }
}

impl Neg for &FeatureVector {
    type Output = FeatureVector;
    fn neg(self) -> FeatureVector {
        self.scaled(-1.0)
    }
}

impl fmt::Display for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Binary label, serialized as `+1` / `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    pub fn from_i64(v: i64) -> Option<Label> {
        match v {
            1 => Some(Label::Positive),
            -1 => Some(Label::Negative),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Positive => write!(f, "+1"),
            Label::Negative => write!(f, "-1"),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.as_i8())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        Label::from_i64(v)
            .ok_or_else(|| serde::de::Error::custom(format!("label must be +1 or -1, got {v}")))
    }
}

/// A homogeneous linear classifier. `w = 0` predicts everything positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub w: FeatureVector,
}

impl Classifier {
    pub fn zero(d: usize) -> Self {
        Classifier {
            w: FeatureVector::zeros(d),
        }
    }
}

/// The separator the true points are generated from, with margin `1/|w*|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub w_star: FeatureVector,
    pub gamma: f64,
}

impl GroundTruth {
    pub fn new(w_star: FeatureVector) -> Result<Self> {
        let n = w_star.norm();
        if n == 0.0 {
            return Err(Error::InvalidParameter("w* must be nonzero".into()));
        }
        Ok(GroundTruth {
            w_star,
            gamma: 1.0 / n,
        })
    }
}

/// True manipulation cost. `alpha` is the largest affordable movement
/// (reciprocal of the per-unit cost). For the weighted variant, `alpha_j = 0`
/// marks a coordinate that cannot be moved at all.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostModel {
    L2 { alpha: f64 },
    WeightedL1 { alphas: Vec<f64> },
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        let ok = |a: f64| a.is_finite() && a >= 0.0;
        match self {
            CostModel::L2 { alpha } if !ok(*alpha) => Err(Error::InvalidParameter(format!(
                "l2 budget must be finite and nonnegative, got {alpha}"
            ))),
            CostModel::WeightedL1 { alphas } if alphas.is_empty() => {
                Err(Error::InvalidParameter("empty l1 budget vector".into()))
            }
            CostModel::WeightedL1 { alphas } => match alphas.iter().find(|a| !ok(**a)) {
                Some(a) => Err(Error::InvalidParameter(format!(
                    "l1 budgets must be finite and nonnegative, got {a}"
                ))),
                None => Ok(()),
            },
            CostModel::L2 { .. } => Ok(()),
        }
    }

    /// Largest single-direction budget.
    pub fn max_alpha(&self) -> f64 {
        match self {
            CostModel::L2 { alpha } => *alpha,
            CostModel::WeightedL1 { alphas } => alphas.iter().copied().fold(0.0, f64::max),
        }
    }
}

/// `x·w / |w|`.
pub fn normalized_margin(w: &FeatureVector, x: &FeatureVector) -> Result<f64> {
    x.check_dim(w.dim())?;
    let n = w.norm();
    if n == 0.0 {
        return Err(Error::UndefinedMargin);
    }
    Ok(x.dot(w) / n)
}

/// `sgn` with `sgn(0) = +`.
pub fn sign_predict(value: f64) -> Label {
    if value >= 0.0 {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// `a ≈ b` under [`EPS_EQ`], scaled by `max(1, |a|, |b|)`.
pub fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= EPS_EQ * 1f64.max(a.abs()).max(b.abs())
}

/// Compares `x·w/|w|` against `threshold` through the raw form
/// `x·w` vs `threshold·|w|`. Values within [`EPS_EQ`] compare `Equal`.
/// A zero `w` compares `Equal` against every threshold.
pub fn compare_to_threshold(x: &FeatureVector, w: &FeatureVector, threshold: f64) -> Ordering {
    let norm = w.norm();
    if norm == 0.0 {
        return Ordering::Equal;
    }
    compare_raw(x.dot(w), threshold * norm)
}

pub(crate) fn compare_raw(raw: f64, target: f64) -> Ordering {
    if approx_eq(raw, target) {
        Ordering::Equal
    } else if raw < target {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

/// True iff `lo < x·w/|w| < hi` strictly, beyond the equality tolerance.
pub fn strictly_between(x: &FeatureVector, w: &FeatureVector, lo: f64, hi: f64) -> bool {
    let norm = w.norm();
    if norm == 0.0 {
        return false;
    }
    let raw = x.dot(w);
    compare_raw(raw, lo * norm) == Ordering::Greater
        && compare_raw(raw, hi * norm) == Ordering::Less
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn margin_of_worked_examples() {
        let m = normalized_margin(&[-4.0, -3.0].into(), &[-1.0, -7.0].into()).unwrap();
        assert_eq!(m, 5.0);
        let m = normalized_margin(&[1.0, 0.0].into(), &[0.0, 0.0].into()).unwrap();
        assert_eq!(m, 0.0);
        let m = normalized_margin(&[3.0, 4.0].into(), &[1.0, 1.0].into()).unwrap();
        assert!((m - 1.4).abs() < 1e-15);
    }

    #[test]
    fn margin_rejects_zero_weight() {
        let err = normalized_margin(&FeatureVector::zeros(2), &[1.0, 2.0].into()).unwrap_err();
        assert!(matches!(err, Error::UndefinedMargin));
        assert!(err.to_string().contains("undefined margin"));
    }

    #[test]
    fn margin_rejects_dimension_mismatch() {
        let err = normalized_margin(&[1.0, 0.0].into(), &[1.0].into()).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                actual: 1
            }
        ));
    }

    #[test]
    fn sign_at_zero_is_positive() {
        assert_eq!(sign_predict(0.0), Label::Positive);
        assert_eq!(sign_predict(-0.0), Label::Positive);
        assert_eq!(sign_predict(-0.3), Label::Negative);
        assert_eq!(sign_predict(1e-12), Label::Positive);
    }

    #[test]
    fn label_serializes_as_signed_integer() {
        assert_eq!(serde_json::to_string(&Label::Negative).unwrap(), "-1");
        assert_eq!(serde_json::from_str::<Label>("1").unwrap(), Label::Positive);
        assert!(serde_json::from_str::<Label>("0").is_err());
    }

    #[test]
    fn try_new_validates() {
        assert!(FeatureVector::try_new(vec![]).is_err());
        assert!(FeatureVector::try_new(vec![1.0, f64::NAN]).is_err());
        assert!(FeatureVector::try_new(vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn threshold_comparison_absorbs_rounding() {
        let w: FeatureVector = [1.0, 1.0].into();
        // lands on the threshold up to one ulp of error
        let x: FeatureVector = [0.1 + 0.2, 0.0].into();
        assert_eq!(
            compare_to_threshold(&x, &w, 0.3 / 2f64.sqrt()),
            Ordering::Equal
        );
        assert_eq!(compare_to_threshold(&x, &w, 1.0), Ordering::Less);
        assert_eq!(
            compare_to_threshold(&x, &FeatureVector::zeros(2), 5.0),
            Ordering::Equal
        );
    }

    #[test]
    fn cost_model_validation() {
        assert!(CostModel::L2 { alpha: -1.0 }.validate().is_err());
        assert!(CostModel::WeightedL1 {
            alphas: vec![1.0, f64::INFINITY]
        }
        .validate()
        .is_err());
        assert!(CostModel::WeightedL1 {
            alphas: vec![1.0, 0.0]
        }
        .validate()
        .is_ok());
        assert_eq!(
            CostModel::WeightedL1 {
                alphas: vec![1.0, 3.0]
            }
            .max_alpha(),
            3.0
        );
    }

    fn vec_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0..10.0f64, d)
    }

    proptest! {
        #[test]
        fn margin_is_linear_in_x(
            w in vec_strategy(4), x1 in vec_strategy(4), x2 in vec_strategy(4),
            a in -5.0..5.0f64, b in -5.0..5.0f64,
        ) {
            let w = FeatureVector::new(w);
            prop_assume!(w.norm() > 1e-3);
            let x1 = FeatureVector::new(x1);
            let x2 = FeatureVector::new(x2);
            let combo = x1.scaled(a).add_scaled(b, &x2);
            let lhs = normalized_margin(&w, &combo).unwrap();
            let rhs = a * normalized_margin(&w, &x1).unwrap() + b * normalized_margin(&w, &x2).unwrap();
            let scale = 1.0 + a.abs() * x1.norm() + b.abs() * x2.norm();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * scale);
        }

        #[test]
        fn margin_is_scale_invariant(w in vec_strategy(3), x in vec_strategy(3), lambda in 1e-3..1e3f64) {
            let w = FeatureVector::new(w);
            prop_assume!(w.norm() > 1e-3);
            let x = FeatureVector::new(x);
            let m1 = normalized_margin(&w, &x).unwrap();
            let m2 = normalized_margin(&w.scaled(lambda), &x).unwrap();
            prop_assert!((m1 - m2).abs() <= 1e-9 * m1.abs().max(1.0));
        }

        #[test]
        fn sign_agrees_with_raw_dot(w in vec_strategy(3), x in vec_strategy(3)) {
            let w = FeatureVector::new(w);
            prop_assume!(w.norm() > 1e-3);
            let x = FeatureVector::new(x);
            let dot = x.dot(&w);
            prop_assume!(dot != 0.0);
            let expected = if dot > 0.0 { Label::Positive } else { Label::Negative };
            prop_assert_eq!(sign_predict(normalized_margin(&w, &x).unwrap()), expected);
        }
    }
}
