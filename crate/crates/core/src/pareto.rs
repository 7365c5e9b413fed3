//! Pareto dominance, frontier extraction and constrained lookups over
//! experiment records.
//!
//! Comparisons are exact on `f64`. Records written by the harness are rounded
//! to six decimals first, so run-to-run noise below that resolution cannot
//! reorder them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::ExperimentRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    EpsSpec,
    FairnessSpec,
    EpsAchieved,
    MaxDisparity,
    Accuracy,
    Coverage,
}

impl Field {
    pub const ALL: [Field; 6] = [
        Field::EpsSpec,
        Field::FairnessSpec,
        Field::EpsAchieved,
        Field::MaxDisparity,
        Field::Accuracy,
        Field::Coverage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::EpsSpec => "eps_spec",
            Field::FairnessSpec => "fairness_spec",
            Field::EpsAchieved => "eps_achieved",
            Field::MaxDisparity => "max_disparity",
            Field::Accuracy => "accuracy",
            Field::Coverage => "coverage",
        }
    }

    pub fn get(self, r: &ExperimentRecord) -> f64 {
        match self {
            Field::EpsSpec => r.eps_spec,
            Field::FairnessSpec => r.fairness_spec,
            Field::EpsAchieved => r.eps_achieved,
            Field::MaxDisparity => r.max_disparity,
            Field::Accuracy => r.accuracy,
            Field::Coverage => r.coverage,
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Field::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::param("field", format!("unknown record field {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    objectives: Vec<(Field, Direction)>,
}

impl Default for ObjectiveSpec {
    fn default() -> Self {
        Self {
            objectives: vec![
                (Field::EpsAchieved, Direction::Minimize),
                (Field::MaxDisparity, Direction::Minimize),
                (Field::Accuracy, Direction::Maximize),
                (Field::Coverage, Direction::Maximize),
            ],
        }
    }
}

impl ObjectiveSpec {
    pub fn new(objectives: Vec<(Field, Direction)>) -> Result<Self> {
        if objectives.is_empty() {
            return Err(Error::Empty("objective list"));
        }
        Ok(Self { objectives })
    }

    /// Parses `"eps_achieved:min,accuracy:max"`.
    pub fn parse(text: &str) -> Result<Self> {
        let objectives = text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|item| {
                let (name, dir) = item
                    .split_once(':')
                    .ok_or_else(|| Error::param("objective", format!("expected field:min|max, got {item:?}")))?;
                let dir = match dir.trim() {
                    "min" | "minimize" => Direction::Minimize,
                    "max" | "maximize" => Direction::Maximize,
                    other => return Err(Error::param("objective", format!("unknown direction {other:?}"))),
                };
                Ok((name.trim().parse()?, dir))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(objectives)
    }

    pub fn objectives(&self) -> &[(Field, Direction)] {
        &self.objectives
    }
}

/// `a` is at least as good as `b` everywhere and strictly better somewhere.
pub fn dominates(a: &ExperimentRecord, b: &ExperimentRecord, spec: &ObjectiveSpec) -> bool {
    let mut strict = false;
    for &(field, dir) in spec.objectives() {
        let (x, y) = (field.get(a), field.get(b));
        let (better, worse) = match dir {
            Direction::Minimize => (x < y, x > y),
            Direction::Maximize => (x > y, x < y),
        };
        if worse {
            return false;
        }
        strict |= better;
    }
    strict
}

/// Indices of the non-dominated records, in input order.
pub fn frontier_indices(records: &[ExperimentRecord], spec: &ObjectiveSpec) -> Vec<usize> {
    (0..records.len())
        .filter(|&i| !records.iter().any(|other| dominates(other, &records[i], spec)))
        .collect()
}

/// The non-dominated records, in input order.
pub fn frontier(records: &[ExperimentRecord], spec: &ObjectiveSpec) -> Vec<ExperimentRecord> {
    frontier_indices(records, spec)
        .into_iter()
        .map(|i| records[i].clone())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryObjective {
    Accuracy,
    Coverage,
}

impl QueryObjective {
    pub fn field(self) -> Field {
        match self {
            QueryObjective::Accuracy => Field::Accuracy,
            QueryObjective::Coverage => Field::Coverage,
        }
    }
}

impl FromStr for QueryObjective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy" => Ok(Self::Accuracy),
            "coverage" => Ok(Self::Coverage),
            other => Err(Error::param("objective", format!("expected accuracy or coverage, got {other:?}"))),
        }
    }
}

/// Best record with `eps_achieved <= max_eps` and `max_disparity <= max_gamma`
/// under `objective`; ties go to lower epsilon, then lower disparity, then
/// earlier position.
pub fn frontier_query(
    records: &[ExperimentRecord],
    max_eps: f64,
    max_gamma: f64,
    objective: QueryObjective,
) -> Result<Option<usize>> {
    if !max_eps.is_finite() || !max_gamma.is_finite() {
        return Err(Error::param("constraints", "max_eps and max_gamma must be finite"));
    }
    let field = objective.field();
    let mut best: Option<usize> = None;
    for (i, r) in records.iter().enumerate() {
        if !(r.eps_achieved <= max_eps && r.max_disparity <= max_gamma) || field.get(r).is_nan() {
            continue;
        }
        let replace = match best {
            None => true,
            Some(b) => {
                let cur = &records[b];
                let (v, w) = (field.get(r), field.get(cur));
                v > w
                    || (v == w
                        && (r.eps_achieved < cur.eps_achieved
                            || (r.eps_achieved == cur.eps_achieved && r.max_disparity < cur.max_disparity)))
            }
        };
        if replace {
            best = Some(i);
        }
    }
    Ok(best)
}
