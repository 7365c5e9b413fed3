//! Running privacy ledger for the teacher query phase.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::rdp::{data_dependent_rdp, q_tilde, rdp_to_dp, threshold_check_rdp, RdpCurve};
use crate::aggregation::{AggregationOutcome, AggregatorParams, RejectedBy};
use crate::domain::{PrivacyBudget, VoteHistogram};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BudgetStatus {
    Continue,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub query_index: usize,
    pub group: Option<usize>,
    pub answered: bool,
    pub rejected_by: RejectedBy,
    pub label: Option<usize>,
    pub gate_value: Option<f64>,
    /// Cost charged for this query at each order of the tracker's grid.
    pub cost: Vec<f64>,
    pub running_epsilon: f64,
}

/// Accumulates per-query RDP costs and reports epsilon at the target delta.
#[derive(Debug, Clone)]
pub struct BudgetTracker {
    target: PrivacyBudget,
    accumulated: RdpCurve,
    /// Charge the argmax cost of queries the fairness gate rejected. The
    /// noisy argmax was computed for them, so leaving it uncharged is only
    /// sound if the rejection is treated as never having released it.
    pub charge_fairness_rejected: bool,
    entries: Vec<LedgerEntry>,
}

impl BudgetTracker {
    pub fn new(target: PrivacyBudget, orders: Vec<f64>) -> Result<Self> {
        if !(target.delta > 0.0 && target.delta < 1.0) {
            return Err(Error::param("delta", "tracker needs 0 < delta < 1"));
        }
        if orders.is_empty() {
            return Err(Error::Empty("order grid"));
        }
        Ok(Self {
            target,
            accumulated: RdpCurve::zeros(orders),
            charge_fairness_rejected: true,
            entries: Vec::new(),
        })
    }

    pub fn target(&self) -> PrivacyBudget {
        self.target
    }

    pub fn accumulated(&self) -> &RdpCurve {
        &self.accumulated
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn current_epsilon(&self) -> f64 {
        let any_cost = self.accumulated.values().iter().any(|&v| v > 0.0);
        if !any_cost {
            return 0.0;
        }
        rdp_to_dp(&self.accumulated, self.target.delta).unwrap_or(f64::INFINITY)
    }

    fn threshold_curve(&self, params: &AggregatorParams) -> Result<RdpCurve> {
        RdpCurve::from_fn(self.accumulated.orders().to_vec(), |o| {
            threshold_check_rdp(params.sigma1, o)
        })
    }

    fn argmax_curve(&self, hist: &VoteHistogram, params: &AggregatorParams) -> Result<RdpCurve> {
        let q = q_tilde(hist, params.sigma2)?;
        RdpCurve::from_fn(self.accumulated.orders().to_vec(), |o| {
            data_dependent_rdp(q, params.sigma2, o).map(|c| c.value)
        })
    }

    /// What `outcome` costs under this tracker's charging rule.
    pub fn query_cost(
        &self,
        outcome: &AggregationOutcome,
        hist: &VoteHistogram,
        params: &AggregatorParams,
    ) -> Result<RdpCurve> {
        let mut cost = self.threshold_curve(params)?;
        let charge_argmax = outcome.noisy_argmax_computed
            && (outcome.rejected_by != RejectedBy::Fairness || self.charge_fairness_rejected);
        if charge_argmax {
            cost.compose(&self.argmax_curve(hist, params)?)?;
        }
        Ok(cost)
    }

    /// Epsilon after a query on `hist` if it were charged the most it can be
    /// (consensus check plus argmax).
    pub fn epsilon_after_worst_case(&self, hist: &VoteHistogram, params: &AggregatorParams) -> Result<f64> {
        let mut total = self.accumulated.clone();
        total.compose(&self.threshold_curve(params)?)?;
        total.compose(&self.argmax_curve(hist, params)?)?;
        rdp_to_dp(&total, self.target.delta)
    }

    /// True when answering a query on `hist` could push epsilon past the target.
    pub fn would_exceed(&self, hist: &VoteHistogram, params: &AggregatorParams) -> Result<bool> {
        Ok(self.epsilon_after_worst_case(hist, params)? > self.target.epsilon)
    }

    /// Charges one processed query and reports whether the budget is spent.
    pub fn charge_query(
        &mut self,
        outcome: &AggregationOutcome,
        hist: &VoteHistogram,
        params: &AggregatorParams,
        group: Option<usize>,
    ) -> Result<BudgetStatus> {
        let cost = self.query_cost(outcome, hist, params)?;
        self.accumulated.compose(&cost)?;
        let running_epsilon = self.current_epsilon();
        self.entries.push(LedgerEntry {
            query_index: self.entries.len(),
            group,
            answered: outcome.result.is_answered(),
            rejected_by: outcome.rejected_by,
            label: outcome.result.class(),
            gate_value: outcome.gate_value,
            cost: cost.values().to_vec(),
            running_epsilon,
        });
        Ok(if running_epsilon > self.target.epsilon {
            BudgetStatus::Exhausted
        } else {
            BudgetStatus::Continue
        })
    }

    /// Per-query ledger as CSV: identifying columns, then one `rdp_<order>`
    /// column per order, then the running epsilon at the target delta.
    pub fn write_ledger_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = vec![
            "query_index".to_string(),
            "group".into(),
            "answered".into(),
            "rejected_by".into(),
            "label".into(),
            "gate_value".into(),
        ];
        header.extend(self.accumulated.orders().iter().map(|o| format!("rdp_{o}")));
        header.push("running_epsilon".into());
        out.write_record(&header)?;
        for e in &self.entries {
            let mut row = vec![
                e.query_index.to_string(),
                e.group.map_or(String::new(), |g| g.to_string()),
                e.answered.to_string(),
                match e.rejected_by {
                    RejectedBy::None => "none",
                    RejectedBy::Consensus => "consensus",
                    RejectedBy::Fairness => "fairness",
                }
                .to_string(),
                e.label.map_or(String::new(), |k| k.to_string()),
                e.gate_value.map_or(String::new(), |v| format!("{v:.12}")),
            ];
            row.extend(e.cost.iter().map(|c| format!("{c:e}")));
            row.push(format!("{:.12}", e.running_epsilon));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accounting::default_orders;
    use crate::domain::{GroupClassCounter, Prediction};
    use crate::fairness::GateParams;
    use crate::rng::SeededRng;
    use crate::aggregation::{confident_fair_gnmax, confident_gnmax};

    fn tracker(eps: f64) -> BudgetTracker {
        BudgetTracker::new(PrivacyBudget::new(eps, 1e-5).unwrap(), default_orders()).unwrap()
    }

    fn outcome(result: Prediction, rejected_by: RejectedBy, computed: bool) -> AggregationOutcome {
        AggregationOutcome {
            result,
            rejected_by,
            noisy_argmax_computed: computed,
            noisy_label: result.class(),
            gate_decision: None,
            gate_value: None,
        }
    }

    #[test]
    fn consensus_reject_charges_threshold_only() {
        let t = tracker(10.0);
        let params = AggregatorParams::default();
        let hist = VoteHistogram::new(vec![60, 60]).unwrap();
        let cost = t
            .query_cost(&outcome(Prediction::Reject, RejectedBy::Consensus, false), &hist, &params)
            .unwrap();
        for (o, c) in cost.orders().iter().zip(cost.values()) {
            assert_eq!(*c, o / (2.0 * 110.0 * 110.0));
        }
    }

    #[test]
    fn fairness_reject_charging_follows_flag() {
        let mut t = tracker(10.0);
        let params = AggregatorParams::default();
        let hist = VoteHistogram::new(vec![120, 80]).unwrap();
        let fair_reject = outcome(Prediction::Reject, RejectedBy::Fairness, true);
        let answered = outcome(Prediction::Class(0), RejectedBy::None, true);
        let full = t.query_cost(&answered, &hist, &params).unwrap();
        assert_eq!(t.query_cost(&fair_reject, &hist, &params).unwrap(), full);
        t.charge_fairness_rejected = false;
        let threshold_only = t
            .query_cost(&outcome(Prediction::Reject, RejectedBy::Consensus, false), &hist, &params)
            .unwrap();
        assert_eq!(t.query_cost(&fair_reject, &hist, &params).unwrap(), threshold_only);
    }

    #[test]
    fn epsilon_nondecreasing_and_exhausts() {
        let mut t = tracker(1.0);
        let params = AggregatorParams::default();
        let hist = VoteHistogram::new(vec![110, 90]).unwrap();
        let mut rng = SeededRng::new(5);
        let mut prev = 0.0;
        let mut status = BudgetStatus::Continue;
        for _ in 0..10_000 {
            let out = confident_gnmax(&hist, &params, &mut rng).unwrap();
            status = t.charge_query(&out, &hist, &params, None).unwrap();
            let eps = t.current_epsilon();
            assert!(eps >= prev);
            prev = eps;
            if status == BudgetStatus::Exhausted {
                break;
            }
        }
        assert_eq!(status, BudgetStatus::Exhausted);
        assert!(t.current_epsilon() > 1.0);
    }

    #[test]
    fn vacuous_gate_run_costs_the_same() {
        let params = AggregatorParams::default();
        let mut fair_params = params;
        fair_params.gate = GateParams::new(1.0, 0).unwrap();
        let mut plain = tracker(100.0);
        let mut fair = tracker(100.0);
        let mut a = SeededRng::new(11);
        let mut b = SeededRng::new(11);
        let mut m = GroupClassCounter::new(2, 2);
        for i in 0..300u32 {
            let hist = VoteHistogram::new(vec![100 + i % 90, 100 - i % 90]).unwrap();
            let o1 = confident_gnmax(&hist, &params, &mut a).unwrap();
            let o2 = confident_fair_gnmax(&hist, (i % 2) as usize, &mut m, &fair_params, &mut b).unwrap();
            plain.charge_query(&o1, &hist, &params, None).unwrap();
            fair.charge_query(&o2, &hist, &fair_params, None).unwrap();
        }
        assert_eq!(plain.current_epsilon(), fair.current_epsilon());
    }

    #[test]
    fn ledger_csv_shape() {
        let mut t = tracker(5.0);
        let params = AggregatorParams::default();
        let hist = VoteHistogram::new(vec![150, 50]).unwrap();
        let out = confident_gnmax(&hist, &params, &mut SeededRng::new(0)).unwrap();
        t.charge_query(&out, &hist, &params, Some(1)).unwrap();
        let mut buf = Vec::new();
        t.write_ledger_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header: Vec<_> = lines.next().unwrap().split(',').collect();
        assert_eq!(header.len(), 6 + default_orders().len() + 1);
        assert_eq!(header[6], "rdp_2");
        assert_eq!(*header.last().unwrap(), "running_epsilon");
        assert_eq!(lines.count(), 1);
    }
}
