use std::io::Write;

use clap::ValueEnum;
use fairfront_core::harness::write_records_csv;
use fairfront_core::ExperimentRecord;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

const HEADER: [&str; 9] = [
    "framework",
    "eps_spec",
    "fairness_spec",
    "eps_achieved",
    "max_disparity",
    "accuracy",
    "coverage",
    "seed",
    "flags",
];

pub fn table(records: &[ExperimentRecord]) -> String {
    let rows: Vec<[String; 9]> = records
        .iter()
        .map(|r| {
            [
                r.framework.to_string(),
                format!("{:.4}", r.eps_spec),
                format!("{:.4}", r.fairness_spec),
                format!("{:.4}", r.eps_achieved),
                format!("{:.4}", r.max_disparity),
                format!("{:.4}", r.accuracy),
                format!("{:.4}", r.coverage),
                r.seed.to_string(),
                r.flags.join(","),
            ]
        })
        .collect();
    let mut widths = HEADER.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[&str]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 || i == 8 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(&HEADER);
    for row in &rows {
        out += &line(&row.each_ref().map(String::as_str));
    }
    out
}

/// Writes `records` to `out`; `single` prints a bare object for JSON.
pub fn write(out: &mut dyn Write, records: &[ExperimentRecord], format: Format, single: bool) -> Result<(), CliError> {
    match format {
        Format::Table => out.write_all(table(records).as_bytes())?,
        Format::Json => {
            let text = if single && records.len() == 1 {
                serde_json::to_string_pretty(&records[0])
            } else {
                serde_json::to_string_pretty(records)
            }
            .map_err(|e| CliError::BadInput(e.to_string()))?;
            writeln!(out, "{text}")?;
        }
        Format::Csv => write_records_csv(out, records)?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use fairfront_core::Framework;

    #[test]
    fn table_aligns_columns() {
        let r = ExperimentRecord {
            framework: Framework::PatePre,
            eps_spec: 1.0,
            fairness_spec: 0.05,
            eps_achieved: 0.9,
            max_disparity: 0.04,
            accuracy: 0.91,
            coverage: 0.6,
            seed: 12,
            flags: vec!["budget_halted".into()],
        };
        let text = table(&[r]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("framework  eps_spec"));
        assert!(lines[1].starts_with("pate_pre     1.0000"));
        assert!(lines[1].ends_with("12  budget_halted"));
    }
}
