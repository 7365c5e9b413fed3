//! Value types shared by every module.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One data point: features, sensitive group and class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub features: Vec<f64>,
    pub group: usize,
    pub label: usize,
    #[serde(default)]
    pub is_public: bool,
}

impl LabeledExample {
    pub fn new(features: Vec<f64>, group: usize, label: usize) -> Self {
        Self {
            features,
            group,
            label,
            is_public: false,
        }
    }

    pub fn validate(&self, dim: usize, groups: usize, classes: usize) -> Result<()> {
        if self.features.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: self.features.len(),
            });
        }
        if self.group >= groups {
            return Err(Error::OutOfRange {
                what: "group",
                value: self.group,
                limit: groups,
            });
        }
        if self.label >= classes {
            return Err(Error::OutOfRange {
                what: "label",
                value: self.label,
                limit: classes,
            });
        }
        Ok(())
    }
}

/// Anything that maps a feature vector to a class id.
pub trait Classifier {
    fn num_classes(&self) -> usize;
    fn classify(&self, features: &[f64]) -> Result<usize>;
}

/// A released answer or the reject symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Prediction {
    Class(usize),
    Reject,
}

impl Prediction {
    pub fn class(self) -> Option<usize> {
        match self {
            Prediction::Class(k) => Some(k),
            Prediction::Reject => None,
        }
    }

    pub fn is_answered(self) -> bool {
        matches!(self, Prediction::Class(_))
    }
}

impl From<Option<usize>> for Prediction {
    fn from(value: Option<usize>) -> Self {
        value.map_or(Prediction::Reject, Prediction::Class)
    }
}

impl fmt::Display for Prediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prediction::Class(k) => write!(f, "{k}"),
            Prediction::Reject => f.write_str("⊥"),
        }
    }
}

/// Counts of decisions per (group, class), stored densely row-major by group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupClassCounter {
    groups: usize,
    classes: usize,
    counts: Vec<u64>,
}

impl GroupClassCounter {
    pub fn new(groups: usize, classes: usize) -> Self {
        Self {
            groups,
            classes,
            counts: vec![0; groups * classes],
        }
    }

    /// Builds a counter from a `groups x classes` table.
    pub fn from_table(table: &[Vec<u64>]) -> Result<Self> {
        let groups = table.len();
        let classes = table.first().map_or(0, Vec::len);
        if groups == 0 || classes == 0 {
            return Err(Error::Empty("counter table"));
        }
        let mut counter = Self::new(groups, classes);
        for (z, row) in table.iter().enumerate() {
            if row.len() != classes {
                return Err(Error::LengthMismatch {
                    left: row.len(),
                    right: classes,
                });
            }
            for (k, &c) in row.iter().enumerate() {
                counter.counts[z * classes + k] = c;
            }
        }
        Ok(counter)
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, group: usize, class: usize) -> u64 {
        self.counts[group * self.classes + class]
    }

    pub fn increment(&mut self, group: usize, class: usize) {
        self.counts[group * self.classes + class] += 1;
    }

    pub fn group_total(&self, group: usize) -> u64 {
        let start = group * self.classes;
        self.counts[start..start + self.classes].iter().sum()
    }

    pub fn class_total(&self, class: usize) -> u64 {
        (0..self.groups).map(|z| self.get(z, class)).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Count of `class` among every group other than `group`.
    pub fn complement_class(&self, group: usize, class: usize) -> u64 {
        self.class_total(class) - self.get(group, class)
    }

    /// Total count over every group other than `group`.
    pub fn complement_total(&self, group: usize) -> u64 {
        self.total() - self.group_total(group)
    }

    pub fn check_index(&self, group: usize, class: usize) -> Result<()> {
        if group >= self.groups {
            return Err(Error::OutOfRange {
                what: "group",
                value: group,
                limit: self.groups,
            });
        }
        if class >= self.classes {
            return Err(Error::OutOfRange {
                what: "class",
                value: class,
                limit: self.classes,
            });
        }
        Ok(())
    }
}

/// Teacher vote counts for one query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteHistogram {
    votes: Vec<u32>,
    teacher_count: u32,
}

impl VoteHistogram {
    pub fn new(votes: Vec<u32>) -> Result<Self> {
        if votes.is_empty() {
            return Err(Error::Empty("vote histogram"));
        }
        let teacher_count: u32 = votes.iter().sum();
        if teacher_count == 0 {
            return Err(Error::param("votes", "histogram must hold at least one vote"));
        }
        Ok(Self {
            votes,
            teacher_count,
        })
    }

    /// Tallies one vote per teacher prediction.
    pub fn from_predictions(predictions: &[usize], classes: usize) -> Result<Self> {
        let mut votes = vec![0u32; classes];
        for &p in predictions {
            if p >= classes {
                return Err(Error::OutOfRange {
                    what: "teacher vote",
                    value: p,
                    limit: classes,
                });
            }
            votes[p] += 1;
        }
        Self::new(votes)
    }

    pub fn votes(&self) -> &[u32] {
        &self.votes
    }

    pub fn classes(&self) -> usize {
        self.votes.len()
    }

    pub fn teacher_count(&self) -> u32 {
        self.teacher_count
    }

    pub fn max_count(&self) -> u32 {
        self.votes.iter().copied().max().unwrap_or(0)
    }

    /// Plurality class; ties go to the lowest class id.
    pub fn plurality(&self) -> usize {
        let mut best = 0;
        for (j, &v) in self.votes.iter().enumerate() {
            if v > self.votes[best] {
                best = j;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(Error::param("epsilon", format!("must be >= 0, got {epsilon}")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::param("delta", format!("must lie in [0, 1], got {delta}")));
        }
        Ok(Self { epsilon, delta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Framework {
    /// Confident&Fair-GNMax aggregation with a post-processed student.
    Fairpate,
    /// DP-SGD with the demographic parity regularizer.
    Fairdpsgd,
    /// Plain PATE, fairness pre-processing of the student set.
    PatePre,
    /// Plain PATE, fairness-regularized student.
    PateIn,
}

impl Framework {
    pub fn as_str(self) -> &'static str {
        match self {
            Framework::Fairpate => "fairpate",
            Framework::Fairdpsgd => "fairdpsgd",
            Framework::PatePre => "pate_pre",
            Framework::PateIn => "pate_in",
        }
    }
}

impl fmt::Display for Framework {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Framework {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fairpate" => Ok(Framework::Fairpate),
            "fairdpsgd" => Ok(Framework::Fairdpsgd),
            "pate_pre" => Ok(Framework::PatePre),
            "pate_in" => Ok(Framework::PateIn),
            other => Err(Error::param("framework", format!("unknown framework `{other}`"))),
        }
    }
}

/// One grid cell of an experiment: what was asked for and what was achieved.
///
/// `fairness_spec` is the disparity constraint for the PATE family and the
/// regularization weight for fair DP-SGD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub framework: Framework,
    pub eps_spec: f64,
    pub fairness_spec: f64,
    pub eps_achieved: f64,
    pub max_disparity: f64,
    pub accuracy: f64,
    pub coverage: f64,
    pub seed: u64,
    /// Conditions worth surfacing, e.g. `accuracy_undefined`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl ExperimentRecord {
    /// Rounds every metric to 6 decimals so dominance checks are not decided
    /// by floating-point noise.
    pub fn rounded(mut self) -> Self {
        for v in [
            &mut self.eps_spec,
            &mut self.fairness_spec,
            &mut self.eps_achieved,
            &mut self.max_disparity,
            &mut self.accuracy,
            &mut self.coverage,
        ] {
            *v = round6(*v);
        }
        self
    }
}

pub fn round6(v: f64) -> f64 {
    if v.is_finite() {
        (v * 1e6).round() / 1e6
    } else {
        v
    }
}
