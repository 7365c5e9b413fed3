//! Noisy-argmax aggregation of teacher votes.
//!
//! Both aggregators draw noise in a fixed order: one N(0, sigma1^2) draw for
//! the consensus check, then (only if the check passes) one N(0, sigma2^2)
//! draw per class in class order. Argmax ties go to the lowest class id.
//! Under a shared seed Confident&Fair-GNMax therefore consumes exactly the
//! same draws as Confident-GNMax.

use serde::{Deserialize, Serialize};

use crate::domain::{Classifier, GroupClassCounter, Prediction, VoteHistogram};
use crate::error::{Error, Result};
use crate::fairness::{evaluate_gate, GateDecision, GateParams};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregatorParams {
    /// Consensus threshold `T` on the noisy maximum vote count.
    pub threshold: f64,
    /// Noise of the consensus check.
    pub sigma1: f64,
    /// Noise of the argmax.
    pub sigma2: f64,
    /// Fairness gate, used by Confident&Fair-GNMax only.
    pub gate: GateParams,
}

impl Default for AggregatorParams {
    /// 200 teachers, T = 120, sigma1 = 110, sigma2 = 20 (the ColorMNIST setting).
    fn default() -> Self {
        Self {
            threshold: 120.0,
            sigma1: 110.0,
            sigma2: 20.0,
            gate: GateParams {
                rho_fair: 1.0,
                min_count: 0,
                variant: Default::default(),
            },
        }
    }
}

impl AggregatorParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("threshold", self.threshold),
            ("sigma1", self.sigma1),
            ("sigma2", self.sigma2),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        self.gate.validate()
    }

    /// Warns when the threshold exceeds the number of teachers. Without noise
    /// such a threshold can never be met.
    pub fn check_threshold(&self, teacher_count: u32) -> bool {
        let ok = self.threshold <= f64::from(teacher_count);
        if !ok {
            log::warn!(
                "threshold {} exceeds teacher count {}; queries pass only through noise",
                self.threshold,
                teacher_count
            );
        }
        ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectedBy {
    None,
    Consensus,
    Fairness,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregationOutcome {
    pub result: Prediction,
    pub rejected_by: RejectedBy,
    pub noisy_argmax_computed: bool,
    /// Label produced by the noisy argmax, also when the gate rejected it.
    pub noisy_label: Option<usize>,
    /// Gate decision, when the gate was consulted.
    pub gate_decision: Option<GateDecision>,
    /// Tentative disparity the gate compared against its margin.
    pub gate_value: Option<f64>,
}

impl AggregationOutcome {
    fn consensus_reject() -> Self {
        Self {
            result: Prediction::Reject,
            rejected_by: RejectedBy::Consensus,
            noisy_argmax_computed: false,
            noisy_label: None,
            gate_decision: None,
            gate_value: None,
        }
    }

    fn answered(label: usize) -> Self {
        Self {
            result: Prediction::Class(label),
            rejected_by: RejectedBy::None,
            noisy_argmax_computed: true,
            noisy_label: Some(label),
            gate_decision: None,
            gate_value: None,
        }
    }
}

fn passes_consensus(hist: &VoteHistogram, params: &AggregatorParams, rng: &mut SeededRng) -> Result<bool> {
    let noisy_max = f64::from(hist.max_count()) + rng.gaussian(params.sigma1)?;
    Ok(noisy_max >= params.threshold)
}

/// `argmax_j (n_j + N(0, sigma^2))` with one fresh draw per class.
pub fn noisy_argmax(hist: &VoteHistogram, sigma: f64, rng: &mut SeededRng) -> Result<usize> {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (j, &n) in hist.votes().iter().enumerate() {
        let v = f64::from(n) + rng.gaussian(sigma)?;
        if v > best_value {
            best = j;
            best_value = v;
        }
    }
    Ok(best)
}

/// Confident-GNMax: answer with the noisy argmax only if the noisy maximum
/// vote count reaches the threshold.
pub fn confident_gnmax(
    hist: &VoteHistogram,
    params: &AggregatorParams,
    rng: &mut SeededRng,
) -> Result<AggregationOutcome> {
    if !passes_consensus(hist, params, rng)? {
        return Ok(AggregationOutcome::consensus_reject());
    }
    let label = noisy_argmax(hist, params.sigma2, rng)?;
    Ok(AggregationOutcome::answered(label))
}

/// Confident&Fair-GNMax: Confident-GNMax followed by the fairness gate on the
/// noisy label for the query's group. Answers increment `m(group, label)`.
pub fn confident_fair_gnmax(
    hist: &VoteHistogram,
    group: usize,
    m: &mut GroupClassCounter,
    params: &AggregatorParams,
    rng: &mut SeededRng,
) -> Result<AggregationOutcome> {
    if group >= m.groups() {
        return Err(Error::OutOfRange {
            what: "group",
            value: group,
            limit: m.groups(),
        });
    }
    if !passes_consensus(hist, params, rng)? {
        return Ok(AggregationOutcome::consensus_reject());
    }
    let label = noisy_argmax(hist, params.sigma2, rng)?;
    let check = evaluate_gate(m, group, label, &params.gate)?;
    let mut outcome = AggregationOutcome::answered(label);
    outcome.gate_decision = Some(check.decision);
    outcome.gate_value = check.value;
    if check.decision.answers() {
        m.increment(group, label);
    } else {
        outcome.result = Prediction::Reject;
        outcome.rejected_by = RejectedBy::Fairness;
    }
    Ok(outcome)
}

/// One vote per teacher on `features`.
pub fn collect_votes<C: Classifier>(teachers: &[C], features: &[f64]) -> Result<VoteHistogram> {
    let first = teachers.first().ok_or(Error::Empty("teacher ensemble"))?;
    let classes = first.num_classes();
    let predictions = teachers
        .iter()
        .map(|t| t.classify(features))
        .collect::<Result<Vec<_>>>()?;
    VoteHistogram::from_predictions(&predictions, classes)
}
