//! Rational agents.
//!
//! An agent values a positive classification at 1 and pays the manipulation
//! cost of moving from its true point `z` to the observed point `x`. It moves
//! only if that buys a positive label at cost at most 1, and then moves the
//! least it can, landing exactly on the published threshold. Indifferent
//! agents (cost exactly 1) do move.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{compare_raw, compare_to_threshold, CostModel, FeatureVector, Label};

/// Refusal limit for [`brute_force_best_response`].
pub const MAX_GRID_CANDIDATES: u128 = 10_000_000;

/// The rule a learner publishes before each round: `x` is classified positive
/// iff `x·w/|w| >= threshold`, and everything is positive when `w = 0` unless
/// `rejects_all` is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionRule {
    pub w: FeatureVector,
    pub threshold: f64,
    /// Empty positive region; only meaningful while `w = 0`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub rejects_all: bool,
}

impl DecisionRule {
    pub fn new(w: FeatureVector, threshold: f64) -> Self {
        DecisionRule {
            w,
            threshold,
            rejects_all: false,
        }
    }

    pub fn all_positive(d: usize) -> Self {
        DecisionRule::new(FeatureVector::zeros(d), 0.0)
    }

    pub fn all_negative(d: usize) -> Self {
        DecisionRule {
            rejects_all: true,
            ..DecisionRule::all_positive(d)
        }
    }

    /// Points within the equality tolerance of the threshold count as on it,
    /// and so as positive.
    pub fn classify(&self, x: &FeatureVector) -> Label {
        if self.rejects_all {
            return Label::Negative;
        }
        match compare_to_threshold(x, &self.w, self.threshold) {
            Ordering::Less => Label::Negative,
            _ => Label::Positive,
        }
    }

    pub fn on_threshold(&self, x: &FeatureVector) -> bool {
        !self.w.is_zero() && compare_to_threshold(x, &self.w, self.threshold) == Ordering::Equal
    }
}

/// Direction of a manipulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Direction {
    Stay,
    /// Unit vector `w/|w|`.
    AlongWeight {
        unit: FeatureVector,
    },
    /// `sign · e_index`.
    Coordinate {
        index: usize,
        sign: i8,
    },
}

/// An agent's best response.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manipulation {
    pub x: FeatureVector,
    pub moved: bool,
    pub distance: f64,
    pub cost: f64,
    pub direction: Direction,
}

impl Manipulation {
    pub fn stay(z: &FeatureVector) -> Self {
        Manipulation {
            x: z.clone(),
            moved: false,
            distance: 0.0,
            cost: 0.0,
            direction: Direction::Stay,
        }
    }
}

/// Best response under the `l2` cost `|x - z| / alpha`.
pub fn best_response_l2(
    z: &FeatureVector,
    rule: &DecisionRule,
    alpha: f64,
) -> Result<Manipulation> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "l2 budget must be finite and nonnegative, got {alpha}"
        )));
    }
    z.check_dim(rule.w.dim())?;
    if rule.w.is_zero() || rule.rejects_all || rule.classify(z) == Label::Positive || alpha == 0.0 {
        return Ok(Manipulation::stay(z));
    }
    let norm = rule.w.norm();
    let gap_raw = rule.threshold * norm - z.dot(&rule.w);
    if compare_raw(gap_raw, alpha * norm) == Ordering::Greater {
        return Ok(Manipulation::stay(z));
    }
    let distance = gap_raw / norm;
    let x = z.add_scaled(gap_raw / (norm * norm), &rule.w);
    Ok(Manipulation {
        x,
        moved: true,
        distance,
        cost: (distance / alpha).min(1.0),
        direction: Direction::AlongWeight {
            unit: rule.w.scaled(1.0 / norm),
        },
    })
}

/// Index maximizing `alphas[j]·|w_j|`, lowest index on ties, together with
/// the maximal score.
pub(crate) fn best_coordinate(w: &FeatureVector, alphas: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (j, (&wj, &aj)) in w.coords().iter().zip(alphas).enumerate() {
        let score = aj * wj.abs();
        if score > best.1 {
            best = (j, score);
        }
    }
    best
}

/// Best response under the weighted `l1` cost `sum_j |x_j - z_j| / alpha_j`.
/// The agent moves along the single signed coordinate with the best
/// gain-per-cost `alpha_j·|w_j|`; mixing coordinates never helps since both
/// gain and cost are linear.
pub fn best_response_weighted_l1(
    z: &FeatureVector,
    rule: &DecisionRule,
    alphas: &[f64],
) -> Result<Manipulation> {
    z.check_dim(rule.w.dim())?;
    if alphas.len() != z.dim() {
        return Err(Error::DimensionMismatch {
            expected: z.dim(),
            actual: alphas.len(),
        });
    }
    if let Some(a) = alphas.iter().find(|a| !a.is_finite() || **a < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "l1 budgets must be finite and nonnegative, got {a}"
        )));
    }
    if rule.w.is_zero() || rule.rejects_all || rule.classify(z) == Label::Positive {
        return Ok(Manipulation::stay(z));
    }
    let (j, score) = best_coordinate(&rule.w, alphas);
    if score <= 0.0 {
        return Ok(Manipulation::stay(z));
    }
    let norm = rule.w.norm();
    let wj = rule.w.coords()[j];
    let gap_raw = rule.threshold * norm - z.dot(&rule.w);
    // moving delta along sign(w_j)·e_j raises z·w by delta·|w_j|
    if compare_raw(gap_raw, alphas[j] * wj.abs()) == Ordering::Greater {
        return Ok(Manipulation::stay(z));
    }
    let delta = gap_raw / wj.abs();
    let sign = if wj > 0.0 { 1i8 } else { -1i8 };
    let mut x = z.clone();
    x.coords_mut()[j] += f64::from(sign) * delta;
    Ok(Manipulation {
        x,
        moved: true,
        distance: delta,
        cost: (delta / alphas[j]).min(1.0),
        direction: Direction::Coordinate { index: j, sign },
    })
}

/// Dispatches on the cost model.
pub fn best_response(
    z: &FeatureVector,
    rule: &DecisionRule,
    model: &CostModel,
) -> Result<Manipulation> {
    match model {
        CostModel::L2 { alpha } => best_response_l2(z, rule, *alpha),
        CostModel::WeightedL1 { alphas } => best_response_weighted_l1(z, rule, alphas),
    }
}

/// Cost of moving from `z` to `x`. Moving a zero-budget coordinate (or any
/// distance under a zero `l2` budget) costs infinity.
pub fn manipulation_cost(model: &CostModel, z: &FeatureVector, x: &FeatureVector) -> Result<f64> {
    x.check_dim(z.dim())?;
    let per_unit = |moved: f64, alpha: f64| {
        if moved == 0.0 {
            0.0
        } else if alpha == 0.0 {
            f64::INFINITY
        } else {
            moved / alpha
        }
    };
    match model {
        CostModel::L2 { alpha } => Ok(per_unit(x.distance(z), *alpha)),
        CostModel::WeightedL1 { alphas } => {
            if alphas.len() != z.dim() {
                return Err(Error::DimensionMismatch {
                    expected: z.dim(),
                    actual: alphas.len(),
                });
            }
            Ok(x.coords()
                .iter()
                .zip(z.coords())
                .zip(alphas)
                .map(|((xi, zi), &a)| per_unit((xi - zi).abs(), a))
                .sum())
        }
    }
}

/// Value of classification minus cost.
pub fn utility(
    model: &CostModel,
    rule: &DecisionRule,
    z: &FeatureVector,
    x: &FeatureVector,
) -> Result<f64> {
    let value = match rule.classify(x) {
        Label::Positive => 1.0,
        Label::Negative => 0.0,
    };
    Ok(value - manipulation_cost(model, z, x)?)
}

/// Exhaustive best response: scores every point of a cubic grid of spacing
/// `grid_step` and half-width `grid_radius` around `z`, plus the exact
/// projections of `z` onto the threshold (along `w` and along each axis),
/// and returns the destination of highest utility.
///
/// Utility ties go to the positively classified candidate (the indifferent
/// agent moves), then to the smaller movement.
pub fn brute_force_best_response(
    z: &FeatureVector,
    rule: &DecisionRule,
    model: &CostModel,
    grid_step: f64,
    grid_radius: f64,
) -> Result<FeatureVector> {
    if grid_step.is_nan() || grid_step <= 0.0 || grid_radius.is_nan() || grid_radius < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "grid step must be positive and radius nonnegative (step {grid_step}, radius {grid_radius})"
        )));
    }
    model.validate()?;
    z.check_dim(rule.w.dim())?;
    let d = z.dim();
    let k = (grid_radius / grid_step).floor() as i64;
    let side = (2 * k + 1) as u128;
    let candidates = side.checked_pow(d as u32).unwrap_or(u128::MAX);
    if candidates > MAX_GRID_CANDIDATES {
        return Err(Error::GridTooLarge {
            candidates,
            limit: MAX_GRID_CANDIDATES,
        });
    }

    let mut best = Candidate::evaluate(model, rule, z, z.clone())?;
    let mut consider = |x: FeatureVector| -> Result<()> {
        let c = Candidate::evaluate(model, rule, z, x)?;
        if c.beats(&best) {
            best = c;
        }
        Ok(())
    };

    if !rule.w.is_zero() {
        let norm = rule.w.norm();
        let gap_raw = rule.threshold * norm - z.dot(&rule.w);
        consider(z.add_scaled(gap_raw / (norm * norm), &rule.w))?;
        for (j, &wj) in rule.w.coords().iter().enumerate() {
            if wj != 0.0 {
                let mut x = z.clone();
                x.coords_mut()[j] += gap_raw / wj;
                consider(x)?;
            }
        }
    }

    let mut offsets = vec![-k; d];
    loop {
        let x: FeatureVector = z
            .coords()
            .iter()
            .zip(&offsets)
            .map(|(zi, &o)| zi + o as f64 * grid_step)
            .collect::<Vec<_>>()
            .into();
        consider(x)?;
        // odometer increment
        let mut i = 0;
        loop {
            if i == d {
                return Ok(best.x);
            }
            offsets[i] += 1;
            if offsets[i] <= k {
                break;
            }
            offsets[i] = -k;
            i += 1;
        }
    }
}

struct Candidate {
    x: FeatureVector,
    utility: f64,
    positive: bool,
    movement: f64,
}

impl Candidate {
    fn evaluate(
        model: &CostModel,
        rule: &DecisionRule,
        z: &FeatureVector,
        x: FeatureVector,
    ) -> Result<Self> {
        let utility = utility(model, rule, z, &x)?;
        Ok(Candidate {
            positive: rule.classify(&x) == Label::Positive,
            movement: x.distance(z),
            utility,
            x,
        })
    }

    fn beats(&self, other: &Candidate) -> bool {
        const TIE: f64 = 1e-12;
        if self.utility > other.utility + TIE {
            return true;
        }
        if self.utility < other.utility - TIE {
            return false;
        }
        if self.positive != other.positive {
            return self.positive;
        }
        self.movement < other.movement
    }
}
