//! The counter-based fairness gate shared by the pre-processor, the
//! post-processor and Confident&Fair-GNMax.
//!
//! After a cold start of `min_count` decisions for the query's group, a query
//! `(z, k)` is answered only if the disparity of `(z, k)` computed as though
//! the answer had already been counted stays strictly below `rho_fair`. The
//! gate never mutates the counter; callers increment `m(z, k)` on answers.

use serde::{Deserialize, Serialize};

use super::disparity::DisparityVariant;
use crate::domain::GroupClassCounter;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    /// Disparity margin. A margin of 1 or more disables the gate, since no
    /// disparity can exceed 1.
    pub rho_fair: f64,
    /// Decisions per group answered unconditionally before the gate engages.
    /// 0 disables the cold start.
    pub min_count: u64,
    #[serde(default)]
    pub variant: DisparityVariant,
}

impl GateParams {
    pub fn new(rho_fair: f64, min_count: u64) -> Result<Self> {
        let params = Self {
            rho_fair,
            min_count,
            variant: DisparityVariant::default(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_variant(mut self, variant: DisparityVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho_fair) {
            return Err(Error::param(
                "rho_fair",
                format!("must lie in [0, 1], got {}", self.rho_fair),
            ));
        }
        Ok(())
    }

    pub fn is_vacuous(&self) -> bool {
        self.rho_fair >= 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateDecision {
    AnswerColdStart,
    Answer,
    Reject,
}

impl GateDecision {
    pub fn answers(self) -> bool {
        !matches!(self, GateDecision::Reject)
    }
}

/// A gate decision together with the quantity it was based on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateCheck {
    pub decision: GateDecision,
    /// Tentative disparity; `None` during cold start or when the comparison
    /// population is empty.
    pub value: Option<f64>,
    /// The comparison population was empty, so the gate answered by default.
    pub complement_empty: bool,
}

/// Disparity of `(group, class)` if one more `(group, class)` answer were
/// counted. `None` when the comparison population is empty.
pub fn tentative_disparity(
    m: &GroupClassCounter,
    group: usize,
    class: usize,
    variant: DisparityVariant,
) -> Option<f64> {
    let own = (m.get(group, class) + 1) as f64 / (m.group_total(group) + 1) as f64;
    match variant {
        DisparityVariant::ToOverallNoDoubleCount => {
            let den = m.complement_total(group);
            (den > 0).then(|| own - m.complement_class(group, class) as f64 / den as f64)
        }
        DisparityVariant::ToOverall => {
            Some(own - (m.class_total(class) + 1) as f64 / (m.total() + 1) as f64)
        }
        DisparityVariant::BetweenGroups => (0..m.groups())
            .filter(|&other| other != group && m.group_total(other) > 0)
            .map(|other| (own - m.get(other, class) as f64 / m.group_total(other) as f64).abs())
            .reduce(f64::max),
    }
}

pub fn evaluate_gate(
    m: &GroupClassCounter,
    group: usize,
    class: usize,
    params: &GateParams,
) -> Result<GateCheck> {
    m.check_index(group, class)?;
    if m.group_total(group) < params.min_count {
        return Ok(GateCheck {
            decision: GateDecision::AnswerColdStart,
            value: None,
            complement_empty: false,
        });
    }
    let value = tentative_disparity(m, group, class, params.variant);
    let decision = match value {
        None => GateDecision::Answer,
        Some(_) if params.is_vacuous() => GateDecision::Answer,
        Some(v) if v < params.rho_fair => GateDecision::Answer,
        Some(_) => GateDecision::Reject,
    };
    Ok(GateCheck {
        decision,
        value,
        complement_empty: value.is_none(),
    })
}

pub fn fairness_gate(
    m: &GroupClassCounter,
    group: usize,
    class: usize,
    params: &GateParams,
) -> Result<GateDecision> {
    evaluate_gate(m, group, class, params).map(|c| c.decision)
}

/// A gate that owns its counter and records every decision.
#[derive(Debug, Clone)]
pub struct FairnessGate {
    params: GateParams,
    counter: GroupClassCounter,
    log: Vec<GateLogEntry>,
}

impl FairnessGate {
    pub fn new(groups: usize, classes: usize, params: GateParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            counter: GroupClassCounter::new(groups, classes),
            log: Vec::new(),
        })
    }

    pub fn params(&self) -> &GateParams {
        &self.params
    }

    pub fn counter(&self) -> &GroupClassCounter {
        &self.counter
    }

    pub fn log(&self) -> &[GateLogEntry] {
        &self.log
    }

    pub fn into_log(self) -> Vec<GateLogEntry> {
        self.log
    }

    /// Evaluates `(group, class)` and counts it if answered.
    pub fn offer(&mut self, group: usize, class: usize) -> Result<GateCheck> {
        let check = evaluate_gate(&self.counter, group, class, &self.params)?;
        if check.decision.answers() {
            self.counter.increment(group, class);
        }
        self.log.push(GateLogEntry {
            group,
            class,
            decision: check.decision,
            value: check.value,
        });
        Ok(check)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateLogEntry {
    pub group: usize,
    pub class: usize,
    pub decision: GateDecision,
    pub value: Option<f64>,
}

/// Result of replaying a gate log against a fresh counter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GateReplay {
    pub decisions: usize,
    pub answered: u64,
    pub counter_total: u64,
    /// Indices whose recorded decision differs from the recomputed one.
    pub mismatches: Vec<usize>,
    /// Indices answered after cold start with a recomputed value `>= rho_fair`.
    pub violations: Vec<usize>,
}

impl GateReplay {
    pub fn is_sound(&self) -> bool {
        self.mismatches.is_empty() && self.violations.is_empty() && self.answered == self.counter_total
    }
}

/// Re-derives every decision of `log` from scratch and checks that each
/// post-cold-start answer satisfied the margin.
pub fn replay_gate_log(
    log: &[GateLogEntry],
    groups: usize,
    classes: usize,
    params: &GateParams,
) -> Result<GateReplay> {
    let mut m = GroupClassCounter::new(groups, classes);
    let mut report = GateReplay::default();
    for (i, entry) in log.iter().enumerate() {
        let check = evaluate_gate(&m, entry.group, entry.class, params)?;
        report.decisions += 1;
        if check.decision != entry.decision {
            report.mismatches.push(i);
        }
        if entry.decision == GateDecision::Answer {
            if let Some(v) = check.value {
                if !(v < params.rho_fair || params.is_vacuous()) {
                    report.violations.push(i);
                }
            }
        }
        if entry.decision.answers() {
            report.answered += 1;
            m.increment(entry.group, entry.class);
        }
    }
    report.counter_total = m.total();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counter(entries: &[((usize, usize), u64)]) -> GroupClassCounter {
        let mut m = GroupClassCounter::new(2, 2);
        for &((z, k), c) in entries {
            for _ in 0..c {
                m.increment(z, k);
            }
        }
        m
    }

    #[test]
    fn empty_counter_is_cold_start() {
        let m = GroupClassCounter::new(2, 2);
        let p = GateParams::new(0.1, 10).unwrap();
        assert_eq!(fairness_gate(&m, 0, 1, &p).unwrap(), GateDecision::AnswerColdStart);
    }

    #[test]
    fn hand_trace_answer() {
        let m = counter(&[((1, 1), 1), ((1, 0), 9), ((0, 1), 5), ((0, 0), 5)]);
        let p = GateParams::new(0.1, 10).unwrap();
        let check = evaluate_gate(&m, 1, 1, &p).unwrap();
        assert_eq!(check.decision, GateDecision::Answer);
        let expected = 2.0 / 11.0 - 0.5;
        assert!((check.value.unwrap() - expected).abs() < 1e-15);
        assert!((expected + 7.0 / 22.0).abs() < 1e-15);
    }

    #[test]
    fn hand_trace_reject() {
        let m = counter(&[((0, 1), 9), ((0, 0), 1), ((1, 1), 1), ((1, 0), 9)]);
        let p = GateParams::new(0.2, 10).unwrap();
        let check = evaluate_gate(&m, 0, 1, &p).unwrap();
        assert_eq!(check.decision, GateDecision::Reject);
        assert!((check.value.unwrap() - (10.0 / 11.0 - 0.1)).abs() < 1e-15);
    }

    #[test]
    fn empty_complement_answers() {
        let m = counter(&[((0, 1), 12)]);
        let p = GateParams::new(0.0, 10).unwrap();
        let check = evaluate_gate(&m, 0, 1, &p).unwrap();
        assert_eq!(check.decision, GateDecision::Answer);
        assert!(check.complement_empty);
    }

    #[test]
    fn margin_of_one_is_vacuous() {
        // tentative disparity is exactly 1 here
        let m = counter(&[((0, 1), 10), ((1, 0), 10)]);
        let p = GateParams::new(1.0, 0).unwrap();
        let check = evaluate_gate(&m, 0, 1, &p).unwrap();
        assert_eq!(check.value, Some(1.0));
        assert_eq!(check.decision, GateDecision::Answer);
    }

    #[test]
    fn invalid_margin_rejected() {
        assert!(GateParams::new(1.5, 1).is_err());
        assert!(GateParams::new(-0.1, 1).is_err());
    }

    #[test]
    fn gate_does_not_mutate_and_offer_counts() {
        let p = GateParams::new(0.1, 2).unwrap();
        let mut gate = FairnessGate::new(2, 2, p).unwrap();
        gate.offer(0, 1).unwrap();
        gate.offer(0, 1).unwrap();
        assert_eq!(gate.counter().total(), 2);
        let before = gate.counter().clone();
        let _ = evaluate_gate(gate.counter(), 0, 1, &p).unwrap();
        assert_eq!(&before, gate.counter());
    }

    #[test]
    fn replay_detects_tampering() {
        let p = GateParams::new(0.05, 2).unwrap();
        let mut gate = FairnessGate::new(2, 2, p).unwrap();
        for (z, k) in [(0, 1), (1, 0), (0, 1), (1, 0), (0, 1), (1, 1), (0, 0), (0, 1)] {
            gate.offer(z, k).unwrap();
        }
        let mut log = gate.into_log();
        let report = replay_gate_log(&log, 2, 2, &p).unwrap();
        assert!(report.is_sound(), "{report:?}");
        let idx = log
            .iter()
            .position(|e| e.decision == GateDecision::Reject)
            .expect("at least one rejection");
        log[idx].decision = GateDecision::Answer;
        let report = replay_gate_log(&log, 2, 2, &p).unwrap();
        assert!(!report.is_sound());
        assert!(report.violations.contains(&idx));
    }

    #[test]
    fn variants_order_on_same_state() {
        let m = {
            let mut m = GroupClassCounter::new(3, 2);
            for (z, k, c) in [(0, 0, 5), (0, 1, 9), (1, 0, 8), (1, 1, 4), (2, 0, 7), (2, 1, 6)] {
                for _ in 0..c {
                    m.increment(z, k);
                }
            }
            m
        };
        for z in 0..3 {
            for k in 0..2 {
                let to = tentative_disparity(&m, z, k, DisparityVariant::ToOverall).unwrap();
                let nd =
                    tentative_disparity(&m, z, k, DisparityVariant::ToOverallNoDoubleCount).unwrap();
                let bg = tentative_disparity(&m, z, k, DisparityVariant::BetweenGroups).unwrap();
                assert!(bg >= nd.abs() - 1e-12, "between {bg} vs nd {nd}");
                if nd > 0.0 {
                    assert!(to <= nd + 1e-12);
                }
            }
        }
    }
}
