//! Library half of the `fairfront` binary: argument types and subcommands.
//!
//! Exit codes are 0 on success, 1 when a frontier query has no feasible
//! record and 2 for any bad input.

pub mod config;
pub mod filter;
pub mod output;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fairfront_core::harness::{generate, run_grid, write_dataset, write_records_csv, FrontierDocument, SCHEMA_VERSION};
use fairfront_core::pareto::{frontier, frontier_query, ObjectiveSpec, QueryObjective};
use serde::Serialize;

use config::Config;
use filter::Filter;
use output::Format;

#[derive(Debug)]
pub enum CliError {
    Infeasible,
    BadInput(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Infeasible => 1,
            CliError::BadInput(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Infeasible => f.write_str("no feasible record"),
            CliError::BadInput(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<fairfront_core::Error> for CliError {
    fn from(e: fairfront_core::Error) -> Self {
        CliError::BadInput(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::BadInput(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::BadInput(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "fairfront", version, about = "Fair and private learning frontiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset and write its splits as CSV.
    GenData {
        /// Configuration file; only `seed` and `[data]` are read.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Override a configuration key, e.g. `--set data.n=5000`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run an experiment grid and write frontier.json, its CSV mirror and
    /// per-cell privacy ledgers.
    Grid {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for independent grid cells.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print the Pareto set of a frontier.json.
    Frontier(FrontierArgs),
    /// Copy a frontier.json and a manifest into a directory the UI can serve.
    ExportUi {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
#[command(args_conflicts_with_subcommands = true, subcommand_negates_reqs = true)]
pub struct FrontierArgs {
    #[command(subcommand)]
    pub query: Option<FrontierCommand>,
    #[arg(long = "in", required = true)]
    pub input: Option<PathBuf>,
    /// Keep only records matching every filter, e.g. `framework=fairpate`
    /// or `eps_achieved<=3`.
    #[arg(long)]
    pub filter: Vec<String>,
    /// Comma-separated `field:min|max` list.
    #[arg(long, default_value = "eps_achieved:min,max_disparity:min,accuracy:max,coverage:max")]
    pub objectives: String,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum FrontierCommand {
    /// Best feasible record under a privacy budget and a disparity bound.
    Query(QueryArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Objective {
    Coverage,
    Accuracy,
}

impl From<Objective> for QueryObjective {
    fn from(o: Objective) -> Self {
        match o {
            Objective::Coverage => QueryObjective::Coverage,
            Objective::Accuracy => QueryObjective::Accuracy,
        }
    }
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub max_eps: f64,
    #[arg(long)]
    pub max_gamma: f64,
    #[arg(long, value_enum)]
    pub objective: Objective,
    #[arg(long)]
    pub filter: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::GenData {
            spec,
            out,
            seed,
            overrides,
        } => gen_data(&Config::load(&spec, &overrides, seed)?, &out),
        Command::Grid {
            config,
            out,
            seed,
            jobs,
            overrides,
        } => grid(&Config::load(&config, &overrides, seed)?, &out, jobs, &timestamp()),
        Command::Frontier(args) => match args.query {
            Some(FrontierCommand::Query(q)) => query(&q, stdout),
            None => {
                let input = args.input.expect("clap enforces --in");
                let records = load_filtered(&input, &args.filter)?;
                let spec = ObjectiveSpec::parse(&args.objectives)?;
                output::write(stdout, &frontier(&records, &spec), args.format, false)
            }
        },
        Command::ExportUi { input, out } => export_ui(&input, &out),
    }
}

fn timestamp() -> String {
    humantime::format_rfc3339_seconds(SystemTime::now()).to_string()
}

fn load_filtered(path: &Path, filters: &[String]) -> Result<Vec<fairfront_core::ExperimentRecord>, CliError> {
    let doc = FrontierDocument::load(path).map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))?;
    let filters = filters.iter().map(|f| f.parse()).collect::<Result<Vec<Filter>, _>>()?;
    Ok(filter::apply(&doc.records, &filters))
}

fn query(q: &QueryArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let records = load_filtered(&q.input, &q.filter)?;
    let best = frontier_query(&records, q.max_eps, q.max_gamma, q.objective.into())?.ok_or(CliError::Infeasible)?;
    output::write(stdout, std::slice::from_ref(&records[best]), q.format, true)
}

#[derive(Serialize)]
struct DatasetManifest<'a> {
    dataset: &'a str,
    seed: u64,
    train: usize,
    public: usize,
    test: usize,
    spec: &'a fairfront_core::harness::SyntheticSpec,
}

pub fn gen_data(config: &Config, out: &Path) -> Result<(), CliError> {
    let data = generate(&config.data)?;
    write_dataset(out, &data)?;
    let manifest = DatasetManifest {
        dataset: config.dataset_name(),
        seed: config.master_seed(),
        train: data.train.len(),
        public: data.public.len(),
        test: data.test.len(),
        spec: &config.data,
    };
    write_json(&out.join("dataset.json"), &manifest)
}

#[derive(Serialize)]
struct LedgerIndexRow {
    cell: usize,
    eps: f64,
    fairness: f64,
    seed: u64,
    master_seed: u64,
    file: String,
}

/// Writes `out`, `out` with a `.csv` extension and a `ledgers/` directory
/// beside them holding one query ledger per cell plus `index.csv`.
pub fn grid(config: &Config, out: &Path, jobs: usize, generated_at: &str) -> Result<(), CliError> {
    let spec = config
        .grid
        .as_ref()
        .ok_or_else(|| CliError::BadInput("configuration has no [grid] section".into()))?;
    let data = generate(&config.data)?;
    let master_seed = config.master_seed();
    let results = run_grid(&data, spec, master_seed, jobs)?;
    let records: Vec<_> = results.iter().map(|c| c.output.record.clone()).collect();

    let doc = FrontierDocument::new(config.dataset_name(), generated_at, master_seed, records);
    doc.save(out)?;
    write_records_csv(fs::File::create(out.with_extension("csv"))?, &doc.records)?;

    let ledger_dir = out.parent().unwrap_or(Path::new(".")).join("ledgers");
    fs::create_dir_all(&ledger_dir)?;
    let mut index = csv::Writer::from_path(ledger_dir.join("index.csv"))?;
    for result in &results {
        let Some(tracker) = &result.output.tracker else {
            continue;
        };
        let file = format!("cell_{:04}.csv", result.cell.index);
        tracker.write_ledger_csv(fs::File::create(ledger_dir.join(&file))?)?;
        index.serialize(LedgerIndexRow {
            cell: result.cell.index,
            eps: result.cell.eps,
            fairness: result.cell.fairness,
            seed: result.cell.seed,
            master_seed,
            file,
        })?;
    }
    index.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct UiManifest<'a> {
    schema_version: u32,
    frontier: &'static str,
    dataset: &'a str,
    generated_at: &'a str,
    master_seed: u64,
    record_count: usize,
    frameworks: Vec<String>,
}

pub fn export_ui(input: &Path, out: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(input).map_err(|e| CliError::BadInput(format!("{}: {e}", input.display())))?;
    let doc = FrontierDocument::from_json(&text).map_err(|e| CliError::BadInput(format!("{}: {e}", input.display())))?;
    fs::create_dir_all(out)?;
    fs::write(out.join("frontier.json"), &text)?;
    let mut frameworks: Vec<String> = doc.records.iter().map(|r| r.framework.to_string()).collect();
    frameworks.sort();
    frameworks.dedup();
    let manifest = UiManifest {
        schema_version: SCHEMA_VERSION,
        frontier: "frontier.json",
        dataset: &doc.meta.dataset,
        generated_at: &doc.meta.generated_at,
        master_seed: doc.meta.master_seed,
        record_count: doc.records.len(),
        frameworks,
    };
    write_json(&out.join("manifest.json"), &manifest)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::BadInput(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
