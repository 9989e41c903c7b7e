//! Simulation laboratory for collective decision-making under biased expert
//! advice.
//!
//! - [`perlin`]: Perlin-noise contextual bandits, rotation bias and distances.
//! - [`experts`]: expert panels trained on biased prior bandits, their advice
//!   and hindsight confidence.
//! - [`policy`]: WMV, meta-MAB, EXP4.P with confidence priors, meta-CMAB
//!   over LinUCB, and a random baseline.
//! - [`metrics`]: reward accounting over episode records.
//! - [`harness`]: seeded episodes and experiment grids with CSV output.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experts;
pub mod harness;
pub mod metrics;
pub mod perlin;
pub mod policy;
pub mod stats;

pub use error::{Error, Result};
pub use experts::{AdviceMatrix, ConfidenceMatrix, Expert, ExpertPanel, PanelKind};
pub use harness::{Algorithm, ConfidenceMode, ExperimentConfig};
pub use metrics::RunRecord;
pub use perlin::{Context, PerlinBandit, VectorGrid};
pub use policy::Policy;
