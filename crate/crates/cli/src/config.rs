//! TOML run configuration.
//!
//! ```toml
//! seed = 7               # master seed, overridden by --seed
//! dataset = "synthetic"  # name stored in frontier.json
//!
//! [data]                 # SyntheticSpec keys except `seed`
//! n = 20000
//! class_separation = 2.0
//!
//! [grid]                 # GridSpec keys
//! framework = "fairpate"
//! eps_values = [1.0, 2.0, 3.0]
//! fairness_values = [0.02, 0.05, 0.1]
//! seeds = [0, 1, 2]
//!
//! [grid.pate]            # PateConfig keys
//! teachers = 50
//! ```
//!
//! The dataset seed always equals the master seed, so `data.seed` is
//! rejected.

use std::path::Path;

use fairfront_core::harness::{GridSpec, SyntheticSpec};
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_DATASET: &str = "synthetic";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub dataset: Option<String>,
    #[serde(default)]
    pub data: SyntheticSpec,
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

impl Config {
    /// Reads `path`, applies `key.path=value` overrides, then the seed flag.
    pub fn load(path: &Path, overrides: &[String], seed_flag: Option<u64>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::BadInput(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, overrides, seed_flag).map_err(|e| match e {
            CliError::BadInput(m) => CliError::BadInput(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, overrides: &[String], seed_flag: Option<u64>) -> Result<Self, CliError> {
        let mut value: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::BadInput(e.to_string()))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        if value
            .get("data")
            .and_then(toml::Value::as_table)
            .is_some_and(|t| t.contains_key("seed"))
        {
            return Err(CliError::BadInput(
                "key `data.seed` is not accepted; the dataset uses the top-level `seed`".into(),
            ));
        }
        let mut config: Config = toml::Value::Table(value)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::BadInput(e.to_string()))?;
        if seed_flag.is_some() {
            config.seed = seed_flag;
        }
        config.data.seed = config.master_seed();
        Ok(config)
    }

    pub fn master_seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn dataset_name(&self) -> &str {
        self.dataset.as_deref().unwrap_or(DEFAULT_DATASET)
    }
}

/// `a.b.c=value`; the value is read as a TOML value and falls back to a
/// bare string.
fn apply_override(root: &mut toml::Table, text: &str) -> Result<(), CliError> {
    let (path, raw) = text
        .split_once('=')
        .ok_or_else(|| CliError::BadInput(format!("override `{text}` is not of the form key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::BadInput(format!("override `{text}` has an empty key")));
    }
    let parsed = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let (last, parents) = keys.split_last().expect("split yields one key");
    let mut table = root;
    for key in parents {
        let entry = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::BadInput(format!("override `{text}`: `{key}` is not a table")))?;
    }
    table.insert(last.to_string(), parsed);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use fairfront_core::Framework;

    const SAMPLE: &str = r#"
seed = 3
[data]
n = 500
[grid]
framework = "pate_pre"
eps_values = [1.0]
fairness_values = [0.1]
seeds = [0]
[grid.pate]
teachers = 10
"#;

    #[test]
    fn parses_nested_sections() {
        let c = Config::parse(SAMPLE, &[], None).unwrap();
        assert_eq!(c.master_seed(), 3);
        assert_eq!(c.data.seed, 3);
        assert_eq!(c.data.n, 500);
        let grid = c.grid.unwrap();
        assert_eq!(grid.framework, Framework::PatePre);
        assert_eq!(grid.pate.teachers, 10);
        assert_eq!(c.dataset.as_deref(), None);
    }

    #[test]
    fn flags_override_file_values() {
        let overrides = vec!["grid.pate.teachers=25".to_string(), "dataset=demo".to_string()];
        let c = Config::parse(SAMPLE, &overrides, Some(9)).unwrap();
        assert_eq!(c.master_seed(), 9);
        assert_eq!(c.data.seed, 9);
        assert_eq!(c.dataset_name(), "demo");
        assert_eq!(c.grid.unwrap().pate.teachers, 25);
    }

    #[test]
    fn unknown_keys_are_named() {
        for (text, key) in [
            ("colour = 1", "colour"),
            ("[data]\nsize = 3", "size"),
            ("[grid]\nframework = \"fairpate\"\neps_values=[1.0]\nfairness_values=[0.1]\nseeds=[0]\n[grid.pate]\nteacher = 3", "teacher"),
            (
                "[grid]\nframework = \"fairpate\"\neps_values=[1.0]\nfairness_values=[0.1]\nseeds=[0]\n[grid.pate.student_training]\nepoch = 3",
                "epoch",
            ),
        ] {
            let err = Config::parse(text, &[], None).unwrap_err().to_string();
            assert!(err.contains(&format!("`{key}`")), "{err}");
        }
    }

    #[test]
    fn data_seed_is_rejected() {
        let err = Config::parse("[data]\nseed = 4", &[], None).unwrap_err().to_string();
        assert!(err.contains("data.seed"));
    }

    #[test]
    fn malformed_overrides() {
        assert!(Config::parse("", &["novalue".into()], None).is_err());
        assert!(Config::parse("", &["a..b=1".into()], None).is_err());
        assert!(Config::parse("seed = 1", &["seed.x=1".into()], None).is_err());
    }
}
