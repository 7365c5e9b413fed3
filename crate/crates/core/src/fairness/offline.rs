//! Ordered offline pre-processing for two groups and its group-privacy cost.
//!
//! For every label the smaller group (size `m`) is kept whole and the larger
//! group is capped at `m + floor(2 * gamma * m / (1 - gamma))`, dropping the
//! excess examples that come last in a fixed total order. Adding one example
//! to the input changes the output by at most `k_gamma(gamma)` examples, so an
//! `(eps, delta)` mechanism trained on the output is
//! `(K eps, K e^(K eps) delta)`-DP with respect to the raw data.

use std::cmp::Ordering;

use crate::domain::{LabeledExample, PrivacyBudget};
use crate::error::{Error, Result};

// Slack for floor/ceil of ratios that are integers in exact arithmetic.
const ROUNDING_SLACK: f64 = 1e-9;

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::param("gamma", format!("must lie in [0, 1), got {gamma}")));
    }
    Ok(())
}

/// Group-privacy multiplier `2 + ceil(2 gamma / (1 - gamma))`.
pub fn k_gamma(gamma: f64) -> Result<u64> {
    check_gamma(gamma)?;
    let extra = (2.0 * gamma / (1.0 - gamma) - ROUNDING_SLACK).ceil().max(0.0);
    Ok(2 + extra as u64)
}

pub fn group_privacy_transform(budget: PrivacyBudget, gamma: f64) -> Result<PrivacyBudget> {
    let k = k_gamma(gamma)? as f64;
    let epsilon = k * budget.epsilon;
    // delta is a probability; the group-privacy bound saturates at 1
    let delta = (k * (k * budget.epsilon).exp() * budget.delta).min(1.0);
    PrivacyBudget::new(epsilon, delta)
}

/// Largest admissible majority-group size given a minority of `minority`.
pub fn majority_cap(minority: usize, gamma: f64) -> Result<usize> {
    check_gamma(gamma)?;
    let extra = (2.0 * gamma * minority as f64 / (1.0 - gamma) + ROUNDING_SLACK).floor();
    Ok(minority + extra as usize)
}

/// Lexicographic order over features (IEEE total order), then group, then label.
pub fn lexicographic_order(a: &LabeledExample, b: &LabeledExample) -> Ordering {
    for (x, y) in a.features.iter().zip(&b.features) {
        match x.total_cmp(y) {
            Ordering::Equal => {}
            other => return other,
        }
    }
    a.features
        .len()
        .cmp(&b.features.len())
        .then(a.group.cmp(&b.group))
        .then(a.label.cmp(&b.label))
}

/// Applies the ordered offline pre-processor with the default lexicographic order.
pub fn ordered_offline_preprocess(data: &[LabeledExample], gamma: f64) -> Result<Vec<LabeledExample>> {
    ordered_offline_preprocess_by(data, gamma, lexicographic_order)
}

/// Applies the ordered offline pre-processor under a caller-supplied total
/// order. Kept examples are returned in input order.
pub fn ordered_offline_preprocess_by<F>(
    data: &[LabeledExample],
    gamma: f64,
    order: F,
) -> Result<Vec<LabeledExample>>
where
    F: Fn(&LabeledExample, &LabeledExample) -> Ordering,
{
    check_gamma(gamma)?;
    if let Some(bad) = data.iter().find(|e| e.group > 1) {
        return Err(Error::param(
            "groups",
            format!("offline pre-processing needs exactly two groups, saw group {}", bad.group),
        ));
    }
    let classes = data.iter().map(|e| e.label + 1).max().unwrap_or(0);
    let mut keep = vec![true; data.len()];
    for label in 0..classes {
        let mut members: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for (i, e) in data.iter().enumerate().filter(|(_, e)| e.label == label) {
            members[e.group].push(i);
        }
        let (small, large) = if members[0].len() <= members[1].len() {
            (0, 1)
        } else {
            (1, 0)
        };
        let cap = majority_cap(members[small].len(), gamma)?;
        let majority = &mut members[large];
        if majority.len() > cap {
            majority.sort_by(|&i, &j| order(&data[i], &data[j]).then(i.cmp(&j)));
            for &i in &majority[cap..] {
                keep[i] = false;
            }
        }
    }
    Ok(data
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(e, _)| e.clone())
        .collect())
}
