//! `--filter` expressions such as `framework=fairpate` or `eps_achieved<=3`.

use std::str::FromStr;

use fairfront_core::pareto::Field;
use fairfront_core::{ExperimentRecord, Framework};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Le,
    Ge,
    Lt,
    Gt,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Filter {
    Framework(Framework),
    Numeric { field: Field, op: Op, value: f64 },
}

impl FromStr for Filter {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self, CliError> {
        let bad = |why: &str| CliError::BadInput(format!("filter `{text}`: {why}"));
        let ops = [("<=", Op::Le), (">=", Op::Ge), ("<", Op::Lt), (">", Op::Gt), ("=", Op::Eq)];
        let (pos, len, op) = ops
            .iter()
            .find_map(|&(sym, op)| text.find(sym).map(|p| (p, sym.len(), op)))
            .ok_or_else(|| bad("expected one of <=, >=, <, >, ="))?;
        let (name, value) = (text[..pos].trim(), text[pos + len..].trim());
        if name == "framework" {
            if op != Op::Eq {
                return Err(bad("framework only supports ="));
            }
            return value
                .parse()
                .map(Filter::Framework)
                .map_err(|e: fairfront_core::Error| bad(&e.to_string()));
        }
        let field: Field = name.parse().map_err(|e: fairfront_core::Error| bad(&e.to_string()))?;
        let value: f64 = value.parse().map_err(|_| bad("value is not a number"))?;
        Ok(Filter::Numeric { field, op, value })
    }
}

impl Filter {
    pub fn keeps(&self, r: &ExperimentRecord) -> bool {
        match *self {
            Filter::Framework(f) => r.framework == f,
            Filter::Numeric { field, op, value } => {
                let v = field.get(r);
                match op {
                    Op::Le => v <= value,
                    Op::Ge => v >= value,
                    Op::Lt => v < value,
                    Op::Gt => v > value,
                    Op::Eq => v == value,
                }
            }
        }
    }
}

pub fn apply(records: &[ExperimentRecord], filters: &[Filter]) -> Vec<ExperimentRecord> {
    records
        .iter()
        .filter(|r| filters.iter().all(|f| f.keeps(r)))
        .cloned()
        .collect()
}
