//! Streaming demographic-parity pre- and post-processors.

use super::gate::{FairnessGate, GateCheck, GateLogEntry, GateParams};
use crate::domain::{LabeledExample, Prediction};
use crate::error::Result;

/// Filters training examples, gating on the true label.
#[derive(Debug, Clone)]
pub struct PreProcessor {
    gate: FairnessGate,
}

impl PreProcessor {
    pub fn new(groups: usize, classes: usize, params: GateParams) -> Result<Self> {
        Ok(Self {
            gate: FairnessGate::new(groups, classes, params)?,
        })
    }

    pub fn accept(&mut self, example: &LabeledExample) -> Result<bool> {
        Ok(self.gate.offer(example.group, example.label)?.decision.answers())
    }

    pub fn gate(&self) -> &FairnessGate {
        &self.gate
    }
}

/// Filters released predictions; rejected queries become [`Prediction::Reject`].
#[derive(Debug, Clone)]
pub struct PostProcessor {
    gate: FairnessGate,
}

impl PostProcessor {
    pub fn new(groups: usize, classes: usize, params: GateParams) -> Result<Self> {
        Ok(Self {
            gate: FairnessGate::new(groups, classes, params)?,
        })
    }

    pub fn filter(&mut self, group: usize, predicted: usize) -> Result<Prediction> {
        let check: GateCheck = self.gate.offer(group, predicted)?;
        Ok(if check.decision.answers() {
            Prediction::Class(predicted)
        } else {
            Prediction::Reject
        })
    }

    pub fn gate(&self) -> &FairnessGate {
        &self.gate
    }

    pub fn into_log(self) -> Vec<GateLogEntry> {
        self.gate.into_log()
    }
}

/// Runs the pre-processor over `data` in order, returning the accepted examples.
pub fn preprocess_stream(
    data: &[LabeledExample],
    groups: usize,
    classes: usize,
    params: GateParams,
) -> Result<Vec<LabeledExample>> {
    let mut pre = PreProcessor::new(groups, classes, params)?;
    let mut kept = Vec::new();
    for example in data {
        if pre.accept(example)? {
            kept.push(example.clone());
        }
    }
    Ok(kept)
}

/// Runs the post-processor over `(group, predicted class)` queries in order.
pub fn postprocess_stream(
    queries: &[(usize, usize)],
    groups: usize,
    classes: usize,
    params: GateParams,
) -> Result<(Vec<Prediction>, Vec<GateLogEntry>)> {
    let mut post = PostProcessor::new(groups, classes, params)?;
    let out = queries
        .iter()
        .map(|&(z, k)| post.filter(z, k))
        .collect::<Result<Vec<_>>>()?;
    Ok((out, post.into_log()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::gate::replay_gate_log;

    fn ex(group: usize, label: usize) -> LabeledExample {
        LabeledExample::new(vec![0.0], group, label)
    }

    #[test]
    fn vacuous_margin_is_identity() {
        let data: Vec<_> = (0..40).map(|i| ex(i % 2, (i / 3) % 2)).collect();
        let out = preprocess_stream(&data, 2, 2, GateParams::new(1.0, 4).unwrap()).unwrap();
        assert_eq!(out, data);
    }

    #[test]
    fn single_cell_stream_passes_without_complement() {
        let data: Vec<_> = (0..20).map(|_| ex(0, 1)).collect();
        let out = preprocess_stream(&data, 2, 2, GateParams::new(0.1, 4).unwrap()).unwrap();
        assert_eq!(out.len(), 20);
    }

    #[test]
    fn alternating_stream_at_zero_margin_keeps_rates_equal() {
        // (z=0, y=1), (z=1, y=0), ... with rho = 0: after the cold start any
        // example that would raise its group's class rate above the other
        // group's is dropped.
        let data: Vec<_> = (0..40)
            .map(|i| if i % 2 == 0 { ex(0, 1) } else { ex(1, 0) })
            .collect();
        let params = GateParams::new(0.0, 3).unwrap();
        let mut pre = PreProcessor::new(2, 2, params).unwrap();
        let mut kept = 0;
        for e in &data {
            if pre.accept(e).unwrap() {
                kept += 1;
            }
        }
        // Only the cold-start examples survive: group 0 always has class-1
        // rate 1 against 0 for group 1.
        assert_eq!(kept, 6);
        let report = replay_gate_log(pre.gate().log(), 2, 2, &params).unwrap();
        assert!(report.is_sound());
    }

    #[test]
    fn zero_disparity_model_fully_covered() {
        // the tentative +1 perturbs balanced rates by up to 1/(n+1), so the
        // margin has to clear that after the cold start
        let queries: Vec<_> = (0..200).map(|i| (i % 2, (i / 2) % 2)).collect();
        let (out, _) = postprocess_stream(&queries, 2, 2, GateParams::new(0.2, 5).unwrap()).unwrap();
        assert!(out.iter().all(|p| p.is_answered()));
    }

    #[test]
    fn post_processor_log_is_sound() {
        let queries: Vec<_> = (0..300).map(|i| (i % 3, usize::from(i % 7 < 4 + i % 3))).collect();
        let params = GateParams::new(0.0, 5).unwrap();
        let (out, log) = postprocess_stream(&queries, 3, 2, params).unwrap();
        let report = replay_gate_log(&log, 3, 2, &params).unwrap();
        assert!(report.is_sound());
        let answered = out.iter().filter(|p| p.is_answered()).count() as u64;
        assert_eq!(report.counter_total, answered);
    }
}
