use proptest::prelude::*;

use spl_core::agents::{
    best_response, best_response_l2, brute_force_best_response, manipulation_cost, utility,
    DecisionRule,
};
use spl_core::types::{CostModel, FeatureVector, EPS_EQ};

fn vec2() -> impl Strategy<Value = FeatureVector> {
    prop::collection::vec(-3.0..3.0f64, 2).prop_map(FeatureVector::new)
}

fn rule() -> impl Strategy<Value = DecisionRule> {
    (vec2(), 0.0..2.0f64)
        .prop_filter("nonzero w", |(w, _)| w.norm() > 1e-2)
        .prop_map(|(w, t)| DecisionRule::new(w, t))
}

fn cost() -> impl Strategy<Value = CostModel> {
    prop_oneof![
        (0.05..2.0f64).prop_map(|alpha| CostModel::L2 { alpha }),
        prop::collection::vec(0.0..2.0f64, 2).prop_map(|alphas| CostModel::WeightedL1 { alphas }),
    ]
}

fn margin(x: &FeatureVector, w: &FeatureVector) -> f64 {
    x.dot(w) / w.norm()
}

proptest! {
    #[test]
    fn responses_are_rational(z in vec2(), rule in rule(), cost in cost()) {
        let m = best_response(&z, &rule, &cost).unwrap();
        prop_assert!(m.cost <= 1.0 + EPS_EQ);
        prop_assert!((manipulation_cost(&cost, &z, &m.x).unwrap() - m.cost).abs() <= 1e-12);
        prop_assert!(utility(&cost, &rule, &z, &m.x).unwrap() >= utility(&cost, &rule, &z, &z).unwrap());
        if m.moved {
            let (xw, tw) = (m.x.dot(&rule.w), rule.threshold * rule.w.norm());
            prop_assert!((xw - tw).abs() <= EPS_EQ * xw.abs().max(1.0), "moved point off the threshold");
        }
    }

    #[test]
    fn no_observed_point_in_the_band(z in vec2(), w in vec2(), alpha in 0.05..2.0f64) {
        prop_assume!(w.norm() > 1e-2);
        let rule = DecisionRule::new(w.clone(), alpha);
        let x = best_response_l2(&z, &rule, alpha).unwrap().x;
        let m = margin(&x, &w);
        let tol = EPS_EQ * 10.0;
        prop_assert!(!(m > tol && m < alpha - tol), "margin {m} in (0, {alpha})");
    }

    #[test]
    fn band_shifts_with_an_overestimate(z in vec2(), w in vec2(), alpha in 0.05..1.0f64, extra in 0.05..1.0f64) {
        prop_assume!(w.norm() > 1e-2);
        let published = alpha + extra;
        let rule = DecisionRule::new(w.clone(), published);
        let x = best_response_l2(&z, &rule, alpha).unwrap().x;
        let m = margin(&x, &w);
        let tol = EPS_EQ * 10.0;
        prop_assert!(!(m > published - alpha + tol && m < published - tol), "margin {m} in ({}, {published})", published - alpha);
    }

    #[test]
    fn single_coordinate_moves_are_optimal(z in vec2(), rule in rule(), alphas in prop::collection::vec(0.05..1.0f64, 2)) {
        let cost = CostModel::WeightedL1 { alphas: alphas.clone() };
        let fast = best_response(&z, &rule, &cost).unwrap();
        let step = alphas.iter().copied().fold(0.0, f64::max) / 40.0;
        let grid = brute_force_best_response(&z, &rule, &cost, step, step * 40.0).unwrap();
        let (uf, ug) = (utility(&cost, &rule, &z, &fast.x).unwrap(), utility(&cost, &rule, &z, &grid).unwrap());
        prop_assert!(uf + 1e-9 >= ug, "grid point {grid} beats {} ({ug} > {uf})", fast.x);
    }
}
