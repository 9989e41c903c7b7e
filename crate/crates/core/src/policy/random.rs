use rand::{Rng, RngCore};

use super::{check_reward, Policy};
use crate::error::{invalid, Result};
use crate::experts::{AdviceMatrix, ConfidenceMatrix};

/// Uniform arm choice, ignoring all advice.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    num_arms: usize,
}

impl RandomPolicy {
    pub fn new(num_arms: usize) -> Result<Self> {
        if num_arms == 0 {
            return Err(invalid("need at least one arm"));
        }
        Ok(Self { num_arms })
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &'static str {
        "random"
    }

    fn select(&mut self, _: &AdviceMatrix, _: Option<&ConfidenceMatrix>, rng: &mut dyn RngCore) -> Result<usize> {
        Ok(rng.random_range(0..self.num_arms))
    }

    fn update(&mut self, _: &AdviceMatrix, _: Option<&ConfidenceMatrix>, arm: usize, reward: f64) -> Result<()> {
        if arm >= self.num_arms {
            return Err(invalid(format!("arm {arm} out of range")));
        }
        check_reward(reward)
    }
}
