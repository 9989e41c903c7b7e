//! Biased experts: kernel value estimators trained on rotated priors,
//! hindsight confidence, and panels.

mod confidence;
mod expert;
mod kernel;
mod matrix;
mod panel;

pub use confidence::{
    expert_expected_reward, expert_expected_reward_on, hindsight_confidence, hindsight_confidence_on, noisy_confidence,
    HindsightTotals,
};
pub use expert::{random_expert, train_expert, Estimator, Expert, TRAIN_STEPS_PER_ARM};
pub use kernel::{ArmModel, KernelEstimator, KernelParams, TrainingBackend};
pub use matrix::{AdviceMatrix, ConfidenceMatrix, ExpertMatrix};
pub use panel::{
    make_panel, target_distances, window_half_width, ExpertPanel, PanelKind, PanelSnapshot, PanelSpec,
    CALIBRATION_ATTEMPTS,
};
