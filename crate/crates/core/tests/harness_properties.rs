use proptest::prelude::*;

use spl_core::harness::{
    audit_lemma_invariants, check_agent_rationality, check_mistake_bound, phases, replay,
    run_experiment, AgentConfig, BoundId,
};
use spl_core::learners::LearnerConfig;
use spl_core::streams::{
    generate_separable_stream, Stream, StreamRecord, StreamSource, StreamSpec,
};
use spl_core::types::{CostModel, Label};

#[test]
fn theorem1_bound_for_unit_margin() {
    let stream = generate_separable_stream(&StreamSpec::new(3, 5.0, 1.0, 500, 2)).unwrap();
    let agent = AgentConfig::rational(CostModel::L2 { alpha: 2.0 });
    let tr = run_experiment(
        &LearnerConfig::StrategicL2 { alpha: 2.0 },
        Default::default(),
        &agent,
        &stream,
        500,
    )
    .unwrap();
    let check = check_mistake_bound(&tr, BoundId::Theorem1).unwrap();
    // (5 + 2)^2 · 1^2
    assert!((check.bound - 49.0).abs() < 1e-9);
    assert!(check.holds && check.observed <= 49);
}

#[test]
fn zero_mistake_stream_holds_every_bound() {
    let mut stream = Stream::from_records(
        StreamSource::Transcript,
        vec![StreamRecord::new([2.0, 0.0], Label::Positive); 4],
    );
    stream.w_star = Some([1.0, 0.0].into());
    let agent = AgentConfig::rational(CostModel::L2 { alpha: 1.0 });
    let tr = run_experiment(
        &LearnerConfig::StrategicL2 { alpha: 1.0 },
        Default::default(),
        &agent,
        &stream,
        4,
    )
    .unwrap();
    assert_eq!(tr.total_mistakes, 0);
    assert!(check_mistake_bound(&tr, BoundId::Theorem1).unwrap().holds);
}

fn learner_and_agent(
    kind: u8,
    alpha: f64,
    d: usize,
    r: f64,
    gamma: f64,
) -> (LearnerConfig, CostModel) {
    match kind {
        0 => (
            LearnerConfig::StrategicL2 { alpha },
            CostModel::L2 { alpha },
        ),
        1 => (
            LearnerConfig::StrategicL1 {
                alphas: vec![alpha; d],
                r,
            },
            CostModel::WeightedL1 {
                alphas: vec![alpha; d],
            },
        ),
        _ => (
            LearnerConfig::UnknownL2 { r, gamma },
            CostModel::L2 { alpha },
        ),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transcripts_are_consistent_and_replayable(
        kind in 0u8..3, d in 2usize..4, alpha_frac in 0.1..1.0f64, seed in any::<u64>(),
    ) {
        let (r, gamma) = (2.0, 0.5);
        let alpha = alpha_frac * r;
        let mut spec = StreamSpec::new(d, r, gamma, 400, seed);
        spec.coordinate_sign_constraint = kind == 1;
        let stream = generate_separable_stream(&spec).unwrap();
        let (learner, cost) = learner_and_agent(kind, alpha, d, r, gamma);
        let tr = run_experiment(&learner, Default::default(), &AgentConfig::rational(cost), &stream, 400).unwrap();

        let flagged = tr.rounds.iter().filter(|x| x.mistake).count() as u64;
        prop_assert_eq!(tr.total_mistakes, flagged);
        prop_assert_eq!(phases(&tr).iter().map(|p| p.mistakes).sum::<u64>(), tr.total_mistakes);
        for x in &tr.rounds {
            prop_assert_eq!(x.mistake, x.prediction != x.truth);
            prop_assert_eq!(x.x_tilde.is_some(), x.w_updated.is_some());
        }
        prop_assert!(check_agent_rationality(&tr).is_empty());
        let audit = audit_lemma_invariants(&tr, tr.meta.w_star.as_ref());
        prop_assert!(audit.violations.is_empty(), "{:?}", audit.violations.first());
        prop_assert!(replay(&tr).unwrap().matches());
    }
}
