//! Evaluation harness: dataset loading, splits, the method grid, the
//! repeated-signal and bound-sweep studies, and result reporting.

pub mod data;
pub mod grid;
pub mod report;
pub mod split;
pub mod stats;
pub mod studies;
pub mod synthetic;

pub use data::{load_dataset, load_from_manifest, ClassSelection, LoadedDataset, Manifest, DATA_DIR_ENV};
pub use grid::{run_grid, run_split, GridConfig, Method, RunRecord, SplitContext};
pub use report::{format_table, summarize, write_results_csv, write_summary_csv, MethodSummary};
pub use split::{split, split_indices, Split, SplitIndices, SplitSpec, DEFAULT_SEEDS};
pub use stats::{paired_ttest, Significance, TTest};
pub use studies::{
    bound_sweep, dependent_curve, dependent_error_study, parse_range, sweep_curve, CurvePoint, CurveRecord,
    DependentConfig, SweepConfig, SweepPoint, SweepRecord,
};
