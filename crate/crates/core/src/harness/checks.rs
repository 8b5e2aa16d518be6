use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AgentKind, RoundRecord, Transcript};
use crate::agents::{best_response, brute_force_best_response, utility};
use crate::error::{Error, Result};
use crate::learners::{LearnerConfig, PhaseEvent};
use crate::types::{approx_eq, strictly_between, CostModel, FeatureVector, Label, EPS_EQ};

/// A failed invariant at round `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: usize,
    pub check: String,
    pub detail: String,
}

impl Violation {
    fn new(t: usize, check: &str, detail: String) -> Self {
        Violation {
            t,
            check: check.to_string(),
            detail,
        }
    }
}

/// `a <= b` up to the equality tolerance at magnitude `scale`.
fn le(a: f64, b: f64, scale: f64) -> bool {
    a <= b + EPS_EQ * scale.abs().max(1.0)
}

/// Observed points strictly between the zero hyperplane and the published
/// threshold.
pub fn check_forbidden_region(transcript: &Transcript) -> Vec<Violation> {
    transcript
        .rounds
        .iter()
        .filter(|r| !r.w_before.is_zero() && !r.rejects_all && r.threshold > 0.0)
        .filter(|r| strictly_between(&r.x, &r.w_before, 0.0, r.threshold))
        .map(|r| {
            let margin = r.x.dot(&r.w_before) / r.w_before.norm();
            Violation::new(
                r.t,
                "forbidden-region",
                format!("margin {margin} in (0, {})", r.threshold),
            )
        })
        .collect()
}

/// Agents pay at most 1, every moved point lies on the threshold, and the
/// recorded point is the best response to the recorded rule.
pub fn check_agent_rationality(transcript: &Transcript) -> Vec<Violation> {
    let agent = &transcript.meta.agent;
    if agent.kind != AgentKind::Rational {
        return Vec::new();
    }
    let mut out = Vec::new();
    for r in &transcript.rounds {
        let rule = r.rule();
        if !le(r.agent_cost, 1.0, 1.0) {
            out.push(Violation::new(
                r.t,
                "agent-cost",
                format!("cost {} > 1", r.agent_cost),
            ));
        }
        if r.agent_cost > 0.0 && !rule.on_threshold(&r.x) {
            out.push(Violation::new(
                r.t,
                "manipulation-hyperplane",
                format!("moved point {} is off the threshold {}", r.x, r.threshold),
            ));
        }
        match best_response(&r.z, &rule, &agent.cost) {
            Ok(m) if m.x == r.x => {}
            Ok(m) => out.push(Violation::new(
                r.t,
                "best-response",
                format!("recorded {} but best response is {}", r.x, m.x),
            )),
            Err(e) => out.push(Violation::new(r.t, "best-response", e.to_string())),
        }
    }
    out
}

/// Compares every recorded response with the exhaustive grid oracle.
/// Utilities must agree to `1e-9`, destinations to one grid cell.
pub fn check_agent_oracle(
    transcript: &Transcript,
    grid_step: f64,
    grid_radius: f64,
) -> Result<Vec<Violation>> {
    let agent = &transcript.meta.agent;
    if agent.kind != AgentKind::Rational {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for r in &transcript.rounds {
        let rule = r.rule();
        let oracle = brute_force_best_response(&r.z, &rule, &agent.cost, grid_step, grid_radius)?;
        let u_oracle = utility(&agent.cost, &rule, &r.z, &oracle)?;
        let u_rec = utility(&agent.cost, &rule, &r.z, &r.x)?;
        let cell = grid_step * (r.z.dim() as f64).sqrt();
        if (u_oracle - u_rec).abs() > 1e-9 || oracle.distance(&r.x) > cell + 1e-9 {
            out.push(Violation::new(
                r.t,
                "agent-oracle",
                format!(
                    "recorded {} (utility {u_rec}), oracle {} (utility {u_oracle})",
                    r.x, oracle
                ),
            ));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundId {
    /// `(R + alpha)^2 |w*|^2`.
    Theorem1,
    /// `(1 + (d+1)(R + alpha_max)^2) |w*|^2`.
    Theorem3,
    /// Per-phase budgets of the unknown-cost search, summed over the
    /// phases they apply to.
    PerPhase,
    /// `8 (2R + gamma/2)^2 / gamma^2 · (ceil(log2(2R/gamma)) + 2)`.
    UnknownTotal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub bound_id: BoundId,
    pub holds: bool,
    pub bound: f64,
    pub observed: u64,
}

fn w_star_norm_sq(transcript: &Transcript) -> Result<f64> {
    transcript
        .meta
        .w_star
        .as_ref()
        .map(FeatureVector::norm_sq)
        .ok_or_else(|| Error::BoundUnverifiable("stream has no certified separator".into()))
}

fn known_gamma(transcript: &Transcript) -> Option<f64> {
    match transcript.meta.learner {
        LearnerConfig::UnknownL2 { gamma, .. } | LearnerConfig::UnknownL1Single { gamma, .. } => {
            Some(gamma)
        }
        _ => None,
    }
}

fn known_r(transcript: &Transcript) -> f64 {
    match transcript.meta.learner {
        LearnerConfig::UnknownL2 { r, .. } | LearnerConfig::UnknownL1Single { r, .. } => r,
        _ => transcript.meta.radius,
    }
}

pub fn unknown_total_bound(r: f64, gamma: f64) -> f64 {
    let phases = (2.0 * r / gamma).log2().ceil() + 2.0;
    8.0 * (2.0 * r + gamma / 2.0).powi(2) / (gamma * gamma) * phases
}

/// Compares observed mistakes with a closed-form bound.
pub fn check_mistake_bound(transcript: &Transcript, bound_id: BoundId) -> Result<BoundCheck> {
    let r = transcript.meta.radius;
    let alpha_max = transcript.meta.agent.cost.max_alpha();
    let (bound, observed) = match bound_id {
        BoundId::Theorem1 => (
            (r + alpha_max).powi(2) * w_star_norm_sq(transcript)?,
            transcript.total_mistakes,
        ),
        BoundId::Theorem3 => {
            let d = transcript.meta.d as f64;
            (
                (1.0 + (d + 1.0) * (r + alpha_max).powi(2)) * w_star_norm_sq(transcript)?,
                transcript.total_mistakes,
            )
        }
        BoundId::PerPhase => {
            let checks = phase_bound_checks(transcript)?;
            let applicable: Vec<&PhaseBoundCheck> =
                checks.iter().filter(|c| c.bound.is_some()).collect();
            let holds = applicable.iter().all(|c| c.holds);
            let bound = applicable.iter().filter_map(|c| c.bound).sum();
            let observed = applicable.iter().map(|c| c.mistakes).sum();
            return Ok(BoundCheck {
                bound_id,
                holds,
                bound,
                observed,
            });
        }
        BoundId::UnknownTotal => {
            let gamma = known_gamma(transcript).ok_or_else(|| {
                Error::BoundUnverifiable("learner does not search for the cost".into())
            })?;
            (
                unknown_total_bound(known_r(transcript), gamma),
                transcript.total_mistakes,
            )
        }
    };
    Ok(BoundCheck {
        bound_id,
        holds: observed as f64 <= bound,
        bound,
        observed,
    })
}

/// One phase of an unknown-cost run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub phase: u32,
    pub alpha_guess: f64,
    pub start: usize,
    /// One past the last round.
    pub end: usize,
    pub mistakes: u64,
    pub ended_by: PhaseEvent,
}

pub fn phases(transcript: &Transcript) -> Vec<PhaseSummary> {
    let mut out: Vec<PhaseSummary> = Vec::new();
    for r in &transcript.rounds {
        match out.last_mut() {
            Some(p) if p.phase == r.phase => {
                p.end = r.t + 1;
                p.mistakes += r.mistake as u64;
                p.ended_by = r.event;
            }
            _ => out.push(PhaseSummary {
                phase: r.phase,
                alpha_guess: r.alpha_published,
                start: r.t,
                end: r.t + 1,
                mistakes: r.mistake as u64,
                ended_by: r.event,
            }),
        }
    }
    out
}

/// Position of a guess relative to the hidden budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseRegime {
    /// `alpha' > alpha`.
    Over,
    /// `0 <= alpha - alpha' <= gamma/2`.
    Near,
    /// `alpha' < alpha - gamma/2`.
    FarUnder,
}

impl PhaseRegime {
    pub fn classify(alpha_guess: f64, alpha: f64, gamma: f64) -> Self {
        if alpha_guess > alpha && !approx_eq(alpha_guess, alpha) {
            PhaseRegime::Over
        } else if alpha - alpha_guess <= gamma / 2.0 || approx_eq(alpha - alpha_guess, gamma / 2.0)
        {
            PhaseRegime::Near
        } else {
            PhaseRegime::FarUnder
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseBoundCheck {
    pub phase: u32,
    pub alpha_guess: f64,
    pub regime: PhaseRegime,
    pub mistakes: u64,
    /// Budget for the regime; none for far underestimates.
    pub bound: Option<f64>,
    pub holds: bool,
    /// `phase_down` only in `Over`, `phase_up` only in `FarUnder`.
    pub event_consistent: bool,
}

/// Per-phase mistake budgets, judged against the agents' hidden budget.
pub fn phase_bound_checks(transcript: &Transcript) -> Result<Vec<PhaseBoundCheck>> {
    let gamma = match known_gamma(transcript) {
        Some(g) => g,
        None => {
            return Err(Error::BoundUnverifiable(
                "learner does not search for the cost".into(),
            ))
        }
    };
    let w_sq = match &transcript.meta.w_star {
        Some(w) => w.norm_sq(),
        None => 1.0 / (gamma * gamma),
    };
    let r = transcript.meta.radius;
    let alpha = transcript.meta.agent.effective_alpha();
    Ok(phases(transcript)
        .into_iter()
        .map(|p| {
            let regime = PhaseRegime::classify(p.alpha_guess, alpha, gamma);
            let bound = match regime {
                PhaseRegime::Over => Some((r + p.alpha_guess).powi(2) * w_sq + 1.0),
                PhaseRegime::Near => Some(4.0 * (r + p.alpha_guess + gamma / 2.0).powi(2) * w_sq),
                PhaseRegime::FarUnder => None,
            };
            let event_consistent = match p.ended_by {
                PhaseEvent::None => true,
                PhaseEvent::PhaseDown => regime == PhaseRegime::Over,
                PhaseEvent::PhaseUp => regime == PhaseRegime::FarUnder,
            };
            PhaseBoundCheck {
                phase: p.phase,
                alpha_guess: p.alpha_guess,
                regime,
                mistakes: p.mistakes,
                holds: bound.is_none_or(|b| p.mistakes as f64 <= b),
                bound,
                event_consistent,
            }
        })
        .collect())
}

/// Smallest `p <= max_period` such that the last `3p` entries of the
/// `w_after` sequence repeat with period `p`.
pub fn detect_cycle(transcript: &Transcript, max_period: usize) -> Option<usize> {
    let ws: Vec<&FeatureVector> = transcript.rounds.iter().map(|r| &r.w_after).collect();
    let n = ws.len();
    let same = |a: &FeatureVector, b: &FeatureVector| {
        a.dim() == b.dim()
            && a.coords()
                .iter()
                .zip(b.coords())
                .all(|(x, y)| approx_eq(*x, *y))
    };
    (1..=max_period)
        .take_while(|p| 3 * p <= n)
        .find(|&p| (n - 2 * p..n).all(|i| same(ws[i], ws[i - p])))
}

/// Which lemma family a round is audited under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditMode {
    /// Plain Perceptron; only the update-geometry check applies.
    Classic,
    /// `l2` learner publishing the true budget.
    Known,
    /// `l2` guess within `gamma/2` below the true budget.
    Underestimate,
    /// `l2` guess above the true budget; separability checks do not apply.
    Overestimate,
    /// `l2` guess more than `gamma/2` below.
    FarUnderestimate,
    /// `l1` learner with the true budgets.
    L1Known,
    /// Single-direction `l1` guess within `gamma/2` below.
    L1Underestimate,
    /// Single-direction `l1` guess above or far below.
    L1Unsupported,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Update rounds audited under each mode.
    pub modes: BTreeMap<AuditMode, usize>,
    pub checks: usize,
    pub violations: Vec<Violation>,
    pub notes: Vec<String>,
}

struct Auditor<'a> {
    report: AuditReport,
    w_star: Option<&'a FeatureVector>,
    radius: f64,
    d: usize,
}

impl Auditor<'_> {
    fn check(&mut self, ok: bool, t: usize, name: &str, detail: impl FnOnce() -> String) {
        self.report.checks += 1;
        if !ok {
            self.report
                .violations
                .push(Violation::new(t, name, detail()));
        }
    }

    /// `x~·w <= 0` on positive mistakes, `>= 0` on negative ones.
    fn update_geometry(&mut self, r: &RoundRecord, xt: &FeatureVector) {
        if r.w_before.is_zero() || r.band_violation {
            return;
        }
        let v = xt.dot(&r.w_before);
        let scale = xt.norm() * r.w_before.norm();
        let ok = match r.truth {
            Label::Positive => le(v, 0.0, scale),
            Label::Negative => le(0.0, v, scale),
        };
        self.check(ok, r.t, "update-geometry", || {
            format!("x~·w = {v} on a {} mistake", r.truth)
        });
    }

    /// `label·x~·w* >= margin` and `w·w*` grows by at least `margin`.
    fn separability(
        &mut self,
        r: &RoundRecord,
        xt: &FeatureVector,
        w_new: &FeatureVector,
        margin: f64,
    ) {
        let Some(ws) = self.w_star else { return };
        let v = r.truth.sign() * xt.dot(ws);
        let scale = xt.norm() * ws.norm();
        self.check(le(margin, v, scale), r.t, "surrogate-separability", || {
            format!("label·x~·w* = {v} < {margin}")
        });
        let gain = w_new.dot(ws) - r.w_before.dot(ws);
        let scale = w_new.norm() * ws.norm();
        self.check(le(margin, gain, scale), r.t, "progress", || {
            format!("w·w* grew by {gain} < {margin}")
        });
        let after = w_new.dot(ws);
        self.check(le(0.0, after, scale), r.t, "alignment", || {
            format!("w·w* = {after} < 0 after update")
        });
    }

    fn growth(&mut self, r: &RoundRecord, w_new: &FeatureVector, cap: f64) {
        let grow = w_new.norm_sq() - r.w_before.norm_sq();
        self.check(le(grow, cap, w_new.norm_sq()), r.t, "norm-growth", || {
            format!("|w|^2 grew by {grow} > {cap}")
        });
    }

    fn l1_structure(
        &mut self,
        r: &RoundRecord,
        w_new: &FeatureVector,
        alphas: &[f64],
        coords: usize,
    ) {
        let neg = w_new.coords().iter().take(coords).position(|c| *c < 0.0);
        self.check(neg.is_none(), r.t, "nonnegative-weights", || {
            format!("w = {w_new} has a negative coordinate")
        });
        if let Some(mus) = &r.mus {
            for (j, mu) in mus.iter().enumerate() {
                let cap = self.radius + alphas.get(j).copied().unwrap_or(0.0);
                self.check(le(*mu, cap, cap), r.t, "correction-size", || {
                    format!("mu_{j} = {mu} > R + alpha_{j} = {cap}")
                });
            }
        }
    }

    fn unique_argmax(&mut self, r: &RoundRecord, w_new: &FeatureVector, alphas: &[f64]) {
        if w_new.is_zero() || alphas.iter().any(|a| *a <= 0.0) {
            return;
        }
        let mut scores: Vec<f64> = w_new
            .coords()
            .iter()
            .zip(alphas)
            .map(|(w, a)| w * a)
            .collect();
        scores.sort_by(|a, b| b.total_cmp(a));
        let unique = scores.len() < 2 || scores[0] > scores[1];
        self.check(unique, r.t, "unique-argmax", || {
            format!("alpha_j·w_j has a tied maximum at w = {w_new}")
        });
    }
}

/// Checks every update round against the lemma family its mode allows.
/// `w_star` enables the separability, progress and alignment checks.
pub fn audit_lemma_invariants(
    transcript: &Transcript,
    w_star: Option<&FeatureVector>,
) -> AuditReport {
    let meta = &transcript.meta;
    let mut a = Auditor {
        report: AuditReport::default(),
        w_star,
        radius: meta.radius,
        d: meta.d,
    };
    if w_star.is_none() {
        a.report
            .notes
            .push("no separator: separability and progress checks skipped".into());
    }
    let hidden = meta.agent.effective_alpha();
    let gamma = known_gamma(transcript).or(w_star.map(|w| 1.0 / w.norm()));
    let l1_alphas: Vec<f64> = match &meta.agent.cost {
        CostModel::WeightedL1 { alphas } if meta.agent.kind == AgentKind::Rational => {
            alphas.clone()
        }
        _ => vec![0.0; meta.d],
    };
    let d = a.d as f64;
    let r_ = a.radius;

    for r in &transcript.rounds {
        let (Some(xt), Some(w_new)) = (&r.x_tilde, &r.w_updated) else {
            continue;
        };
        let guess = r.alpha_published;
        let mode = match &meta.learner {
            LearnerConfig::Classic => AuditMode::Classic,
            LearnerConfig::StrategicL1 { .. } => AuditMode::L1Known,
            LearnerConfig::StrategicL2 { .. } | LearnerConfig::UnknownL2 { .. } => {
                match gamma.map(|g| PhaseRegime::classify(guess, hidden, g)) {
                    _ if approx_eq(guess, hidden) => AuditMode::Known,
                    Some(PhaseRegime::Near) => AuditMode::Underestimate,
                    Some(PhaseRegime::FarUnder) => AuditMode::FarUnderestimate,
                    Some(PhaseRegime::Over) => AuditMode::Overestimate,
                    None if guess > hidden => AuditMode::Overestimate,
                    None => AuditMode::FarUnderestimate,
                }
            }
            LearnerConfig::UnknownL1Single { .. } => {
                match gamma.map(|g| PhaseRegime::classify(guess, hidden, g)) {
                    Some(PhaseRegime::Near) => AuditMode::L1Underestimate,
                    _ => AuditMode::L1Unsupported,
                }
            }
        };
        *a.report.modes.entry(mode).or_default() += 1;
        match mode {
            AuditMode::Classic => a.update_geometry(r, xt),
            AuditMode::Known => {
                a.update_geometry(r, xt);
                a.separability(r, xt, w_new, 1.0);
                a.growth(r, w_new, (r_ + hidden).powi(2));
            }
            AuditMode::Underestimate => {
                a.update_geometry(r, xt);
                a.separability(r, xt, w_new, 0.5);
                let g = gamma.unwrap_or(0.0);
                a.growth(r, w_new, (r_ + guess + g / 2.0).powi(2));
            }
            AuditMode::Overestimate | AuditMode::FarUnderestimate => a.update_geometry(r, xt),
            AuditMode::L1Known => {
                let alpha_max = l1_alphas.iter().copied().fold(0.0, f64::max);
                a.separability(r, xt, w_new, 1.0);
                a.growth(r, w_new, (d + 1.0) * (r_ + alpha_max).powi(2) + 1.0);
                a.l1_structure(r, w_new, &l1_alphas, a.d);
                a.unique_argmax(r, w_new, &l1_alphas);
            }
            AuditMode::L1Underestimate => {
                a.separability(r, xt, w_new, 0.5);
                a.l1_structure(r, w_new, &l1_alphas, 1);
            }
            AuditMode::L1Unsupported => a.l1_structure(r, w_new, &l1_alphas, 1),
        }
    }
    a.report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_experiment, AgentConfig};
    use crate::learners::LearnerOptions;
    use crate::streams::{Fixture, Stream, StreamRecord, StreamSource};

    fn fixture_run(f: Fixture, learner: LearnerConfig, rounds: usize) -> Transcript {
        let stream = f.stream(rounds);
        let options = LearnerOptions {
            initial_prediction: stream.initial_prediction,
            ..Default::default()
        };
        let agent = AgentConfig::rational(stream.cost_model.clone().unwrap());
        run_experiment(&learner, options, &agent, &stream, rounds).unwrap()
    }

    #[test]
    fn cycles_of_the_fixtures() {
        let tr = fixture_run(Fixture::Example1Footnote, LearnerConfig::Classic, 41);
        assert_eq!(detect_cycle(&tr, 10), Some(2));
        let tr = fixture_run(
            Fixture::Example2,
            LearnerConfig::StrategicL2 { alpha: 5.0 },
            41,
        );
        assert_eq!(detect_cycle(&tr, 10), Some(4));
        let tr = fixture_run(
            Fixture::Example1Footnote,
            LearnerConfig::StrategicL2 { alpha: 0.5 },
            200,
        );
        assert_eq!(detect_cycle(&tr, 10), Some(1));
    }

    #[test]
    fn short_transcripts_have_no_cycle() {
        let tr = fixture_run(
            Fixture::Example2,
            LearnerConfig::StrategicL2 { alpha: 5.0 },
            11,
        );
        assert_eq!(detect_cycle(&tr, 4), None);
    }

    #[test]
    fn inseparable_run_keeps_update_geometry() {
        let tr = fixture_run(
            Fixture::Example2,
            LearnerConfig::StrategicL2 { alpha: 5.0 },
            5,
        );
        let rep = audit_lemma_invariants(&tr, None);
        assert!(rep.violations.is_empty(), "{:?}", rep.violations);
        assert_eq!(rep.modes[&AuditMode::Known], 5);
        // x~_1·w = (3,-4)·(-4,-3) = 0
        assert_eq!(
            tr.rounds[1]
                .x_tilde
                .as_ref()
                .unwrap()
                .dot(&tr.rounds[1].w_before),
            0.0
        );
        assert!(check_forbidden_region(&tr).is_empty());
        assert!(check_agent_rationality(&tr).is_empty());
    }

    #[test]
    fn planted_band_point_is_flagged() {
        // w = (1,0) after two rounds; (0.2, 3) then sits in the band
        let records = vec![
            StreamRecord::new([1.0, 0.0], Label::Positive),
            StreamRecord::new([-1.0, 0.0], Label::Negative),
            StreamRecord::new([0.2, 3.0], Label::Positive),
        ];
        let stream = Stream::from_records(StreamSource::Transcript, records);
        let learner = LearnerConfig::StrategicL2 { alpha: 1.0 };
        let options = LearnerOptions::default();
        let tr = run_experiment(&learner, options, &AgentConfig::replay(), &stream, 10).unwrap();
        let v = check_forbidden_region(&tr);
        assert_eq!(v.iter().map(|v| v.t).collect::<Vec<_>>(), [2]);
        assert!(tr.rounds[2].band_violation);
    }

    #[test]
    fn zero_mistakes_hold_trivially() {
        let records = vec![StreamRecord::new([1.0, 0.0], Label::Positive)];
        let mut stream = Stream::from_records(StreamSource::Transcript, records);
        stream.w_star = Some([1.0, 0.0].into());
        let agent = AgentConfig::rational(CostModel::L2 { alpha: 0.5 });
        let tr = run_experiment(
            &LearnerConfig::StrategicL2 { alpha: 0.5 },
            Default::default(),
            &agent,
            &stream,
            1,
        )
        .unwrap();
        let b = check_mistake_bound(&tr, BoundId::Theorem1).unwrap();
        assert!(b.holds);
        assert_eq!(b.observed, 0);
    }

    #[test]
    fn bound_needs_a_separator() {
        let tr = fixture_run(
            Fixture::Example2,
            LearnerConfig::StrategicL2 { alpha: 5.0 },
            5,
        );
        assert!(matches!(
            check_mistake_bound(&tr, BoundId::Theorem1),
            Err(Error::BoundUnverifiable(_))
        ));
    }

    #[test]
    fn regimes() {
        assert_eq!(PhaseRegime::classify(2.0, 1.0, 1.0), PhaseRegime::Over);
        assert_eq!(PhaseRegime::classify(1.0, 1.0, 1.0), PhaseRegime::Near);
        assert_eq!(PhaseRegime::classify(0.5, 1.0, 1.0), PhaseRegime::Near);
        assert_eq!(PhaseRegime::classify(0.4, 1.0, 1.0), PhaseRegime::FarUnder);
    }

    #[test]
    fn unknown_total_formula() {
        // R = 1, gamma = 1: 8 · 2.5^2 · (1 + 2)
        assert_eq!(unknown_total_bound(1.0, 1.0), 150.0);
    }
}
