//! Perlin-noise contextual bandits.

mod bandit;
mod bias;
mod grid;
mod measure;

pub use bandit::{bernoulli_from_uniform, invert_bandit, sample_bandit, PerlinBandit, DEFAULT_GRID_SIDE};
pub use bias::{
    calibrate_bias, calibrate_bias_with, rotate_bandit, rotate_grid, wrapped_cauchy_angle, BiasSpec, CalibratedBias,
    DEFAULT_TOLERANCE, MAX_CALIBRATION_PROBES,
};
pub use grid::{landscape_value, Context, VectorGrid};
pub use measure::{
    bandit_distance, distance_on, sample_contexts, scaled_distance, scaled_distance_on, value_pcc, value_pcc_on,
    DistanceProbe, DEFAULT_DISTANCE_SAMPLES,
};
