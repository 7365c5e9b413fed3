//! Answered-example totals of the streaming pre-processor under each
//! disparity variant.

use serde::{Deserialize, Serialize};

use crate::domain::LabeledExample;
use crate::error::Result;
use crate::fairness::{preprocess_stream, DisparityVariant, GateParams};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantTotal {
    pub variant: DisparityVariant,
    pub answered: usize,
}

/// Shuffles `data` once with `order_seed`, then streams that order through
/// the pre-processor with margin `rho_fair` and cold start `min_count`, once
/// per variant.
pub fn compare_variants(
    data: &[LabeledExample],
    groups: usize,
    classes: usize,
    rho_fair: f64,
    min_count: u64,
    order_seed: u64,
) -> Result<Vec<VariantTotal>> {
    let mut ordered = data.to_vec();
    SeededRng::new(order_seed).shuffle(&mut ordered);
    DisparityVariant::ALL
        .into_iter()
        .map(|variant| {
            let params = GateParams::new(rho_fair, min_count)?.with_variant(variant);
            Ok(VariantTotal {
                variant,
                answered: preprocess_stream(&ordered, groups, classes, params)?.len(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::data::{generate, SyntheticSpec};

    #[test]
    fn vacuous_margin_answers_everything() {
        let data = generate(&SyntheticSpec::variant_task(0)).unwrap();
        let all: Vec<_> = data.all().cloned().collect();
        let totals = compare_variants(&all, 3, 2, 1.0, 10, 1).unwrap();
        assert!(totals.iter().all(|t| t.answered == all.len()));
    }
}
