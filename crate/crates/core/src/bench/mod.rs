//! Benchmark harness: cross-validated grid search, sweeps over datasets,
//! rank aggregation, kernel analysis and the selective-reporting simulation.

pub mod analysis;
pub mod bias;
pub mod cv;
pub mod rank;
pub mod records;
pub mod scaling;

pub use analysis::{
    data_bounds, decision_grid, gram_difference, kernel_landscape, landscape_of, model_gram, rescale_unit,
    Landscape, LANDSCAPE_CENTER,
};
pub use bias::{positivity_bias_sim, BiasOutcome, BiasParams};
pub use cv::{grid_search_cv, stratified_folds, ConfigResult, FoldResult, GridSearchResult, SearchOptions, DEFAULT_FOLDS};
pub use rank::{expected_normalised_rank, rank_models, tied_ranks, ModelRanking, Placement, RankTable};
pub use records::{
    load_records, record_path, records_csv, run_benchmark, run_cell, run_on_datasets, skip_reason, BenchmarkRecord,
    CellStatus, RunOptions, RunSummary,
};
pub use scaling::{scaling_csv, scaling_sweep, winner_for, ScalingRecord, SCALING_SEEDS};
