use rand::RngCore;

use super::{check_reward, check_shapes, Policy};
use crate::error::{invalid, Result};
use crate::experts::{AdviceMatrix, ConfidenceMatrix};
use crate::stats::argmax_random_tie;

/// Confidences are clamped to `[eps, 1 - eps]` before taking the logit.
pub const CONFIDENCE_EPS: f64 = 1e-6;

fn logit(c: f64) -> f64 {
    let c = c.clamp(CONFIDENCE_EPS, 1.0 - CONFIDENCE_EPS);
    (c / (1.0 - c)).ln()
}

/// Per-arm score `sum_n ln(c/(1-c)) * advice`. Without confidence every
/// expert weighs 1.
pub fn wmv_scores(advice: &AdviceMatrix, confidence: Option<&ConfidenceMatrix>) -> Result<Vec<f64>> {
    check_shapes(advice, confidence)?;
    let mut scores = vec![0.0; advice.num_arms()];
    for n in 0..advice.num_experts() {
        for (k, s) in scores.iter_mut().enumerate() {
            let w = confidence.map_or(1.0, |c| logit(c.get(n, k)));
            *s += w * advice.get(n, k);
        }
    }
    Ok(scores)
}

/// Weighted majority vote. Stateless.
#[derive(Debug, Clone, Default)]
pub struct Wmv;

impl Wmv {
    pub fn new() -> Self {
        Self
    }
}

impl Policy for Wmv {
    fn name(&self) -> &'static str {
        "wmv"
    }

    fn select(
        &mut self,
        advice: &AdviceMatrix,
        confidence: Option<&ConfidenceMatrix>,
        rng: &mut dyn RngCore,
    ) -> Result<usize> {
        Ok(argmax_random_tie(&wmv_scores(advice, confidence)?, rng))
    }

    fn update(&mut self, advice: &AdviceMatrix, _: Option<&ConfidenceMatrix>, arm: usize, reward: f64) -> Result<()> {
        if arm >= advice.num_arms() {
            return Err(invalid(format!("arm {arm} out of range")));
        }
        check_reward(reward)
    }
}
