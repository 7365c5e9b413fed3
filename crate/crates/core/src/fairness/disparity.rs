//! Demographic disparity estimators.

use serde::{Deserialize, Serialize};

use crate::domain::GroupClassCounter;
use crate::error::{Error, Result};

/// How a subgroup's class rate is compared against the rest of the population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisparityVariant {
    /// Largest absolute gap to any other single group.
    BetweenGroups,
    /// Gap to the unconditional rate (the group counts toward both sides).
    ToOverall,
    /// Gap to the rate of every other group pooled together.
    #[default]
    ToOverallNoDoubleCount,
}

impl DisparityVariant {
    pub const ALL: [DisparityVariant; 3] = [
        DisparityVariant::BetweenGroups,
        DisparityVariant::ToOverall,
        DisparityVariant::ToOverallNoDoubleCount,
    ];
}

impl std::str::FromStr for DisparityVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "between_groups" => Ok(Self::BetweenGroups),
            "to_overall" => Ok(Self::ToOverall),
            "to_overall_no_double_count" => Ok(Self::ToOverallNoDoubleCount),
            other => Err(Error::param("variant", format!("unknown disparity variant `{other}`"))),
        }
    }
}

/// Estimated disparity per (group, class). `None` marks an entry whose
/// denominator is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMatrix {
    groups: usize,
    classes: usize,
    entries: Vec<Option<f64>>,
}

impl DisparityMatrix {
    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, group: usize, class: usize) -> Option<f64> {
        self.entries[group * self.classes + class]
    }

    pub fn is_all_undefined(&self) -> bool {
        self.entries.iter().all(Option::is_none)
    }

    pub fn defined(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().flatten().copied()
    }
}

fn rate(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Disparity of every (group, class) cell of a counter of predictions.
pub fn disparity_from_counts(m: &GroupClassCounter, variant: DisparityVariant) -> DisparityMatrix {
    let (groups, classes) = (m.groups(), m.classes());
    let mut entries = Vec::with_capacity(groups * classes);
    for z in 0..groups {
        for k in 0..classes {
            let own = rate(m.get(z, k), m.group_total(z));
            let value = own.and_then(|p| match variant {
                DisparityVariant::ToOverallNoDoubleCount => {
                    rate(m.complement_class(z, k), m.complement_total(z)).map(|q| p - q)
                }
                DisparityVariant::ToOverall => rate(m.class_total(k), m.total()).map(|q| p - q),
                DisparityVariant::BetweenGroups => (0..groups)
                    .filter(|&other| other != z)
                    .filter_map(|other| rate(m.get(other, k), m.group_total(other)))
                    .map(|q| (p - q).abs())
                    .reduce(f64::max),
            });
            entries.push(value);
        }
    }
    DisparityMatrix {
        groups,
        classes,
        entries,
    }
}

/// Estimates the disparity matrix from hard predictions and group ids.
pub fn disparity_matrix(
    predictions: &[usize],
    groups: &[usize],
    num_groups: usize,
    num_classes: usize,
    variant: DisparityVariant,
) -> Result<DisparityMatrix> {
    if predictions.len() != groups.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: groups.len(),
        });
    }
    let mut m = GroupClassCounter::new(num_groups, num_classes);
    for (&k, &z) in predictions.iter().zip(groups) {
        m.check_index(z, k)?;
        m.increment(z, k);
    }
    Ok(disparity_from_counts(&m, variant))
}

/// Signed maximum over all defined entries.
pub fn max_disparity(matrix: &DisparityMatrix) -> Result<f64> {
    matrix
        .defined()
        .reduce(f64::max)
        .ok_or(Error::Undefined("every disparity entry is undefined"))
}

/// Maximum absolute disparity over all defined entries.
pub fn max_abs_disparity(matrix: &DisparityMatrix) -> Result<f64> {
    matrix
        .defined()
        .map(f64::abs)
        .reduce(f64::max)
        .ok_or(Error::Undefined("every disparity entry is undefined"))
}
