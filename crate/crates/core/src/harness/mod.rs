//! Seeded episodes and experiment grids.

mod config;
mod episode;
mod experiments;
mod output;
pub mod seed;

pub use crate::policy::Algorithm;
pub use config::{default_delta_grid, parse_number, ConfidenceMode, Experiment, ExperimentConfig};
pub use episode::{run_episode, EpisodeInputs};
pub use experiments::{
    run_ablation, run_anytime, run_distance_pcc, run_sweep, run_weight_analysis, series, summarize, AnytimeRow,
    CrossoverRow, PccRow, SummaryRow, SweepRow, WeightRow,
};
pub use output::{csv_bytes, write_csv, write_sidecar};
pub use seed::CellKey;
