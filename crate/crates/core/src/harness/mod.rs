//! Synthetic data, experiment runs, grids and `frontier.json` persistence.

pub mod data;
pub mod grid;
pub mod persist;
pub mod run;
pub mod variants;

pub use data::{
    generate, partition_teachers, read_examples_csv, write_dataset, write_examples_csv, Dataset, SplitFractions,
    SyntheticSpec, VARIANT_TASK_COUNTS,
};
pub use grid::{parallel_map, run_grid, CellResult, GridCell, GridSpec};
pub use persist::{write_records_csv, FrontierDocument, FrontierMeta, SCHEMA_VERSION};
pub use run::{
    public_votes, run_baseline_placement, run_fairdpsgd, run_fairpate, train_teachers, DpSgdConfig, PateConfig,
    RunOutput,
};
pub use variants::{compare_variants, VariantTotal};
