//! Thompson sampling over experts, following the sampled expert greedily.

use rand::RngCore;
use rand_distr::{Beta, Distribution};

use super::{check_reward, check_shapes, Policy};
use crate::error::{invalid, numeric, Result};
use crate::experts::{AdviceMatrix, ConfidenceMatrix};
use crate::stats::{self, argmax_random_tie};

#[derive(Debug, Clone)]
pub struct MetaMab {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    prior_strength: f64,
    pending: Option<(usize, usize)>,
}

impl MetaMab {
    pub fn new(num_experts: usize, prior_strength: f64) -> Result<Self> {
        if num_experts == 0 {
            return Err(invalid("meta-MAB needs at least one expert"));
        }
        if !(prior_strength >= 0.0) {
            return Err(invalid(format!("prior strength must be >= 0, got {prior_strength}")));
        }
        Ok(Self {
            alpha: vec![1.0; num_experts],
            beta: vec![1.0; num_experts],
            prior_strength,
            pending: None,
        })
    }

    pub fn posterior(&self, n: usize) -> (f64, f64) {
        (self.alpha[n], self.beta[n])
    }

    pub fn set_posterior(&mut self, n: usize, alpha: f64, beta: f64) -> Result<()> {
        if n >= self.alpha.len() || !(alpha >= 1.0) || !(beta >= 1.0) {
            return Err(invalid("posterior parameters must be >= 1 for an existing expert"));
        }
        self.alpha[n] = alpha;
        self.beta[n] = beta;
        Ok(())
    }

    /// Thompson-samples an expert, then follows its greedy arm.
    pub fn select_expert(
        &mut self,
        advice: &AdviceMatrix,
        confidence: Option<&ConfidenceMatrix>,
        rng: &mut dyn RngCore,
    ) -> Result<(usize, usize)> {
        check_shapes(advice, confidence)?;
        if advice.num_experts() != self.alpha.len() {
            return Err(invalid(format!(
                "meta-MAB built for {} experts, got {}",
                self.alpha.len(),
                advice.num_experts()
            )));
        }
        let mut draws = Vec::with_capacity(self.alpha.len());
        for n in 0..self.alpha.len() {
            let c = confidence.map_or(0.0, |c| stats::mean(c.row(n)));
            let (m_a, m_b) = match confidence {
                Some(_) => (self.prior_strength * c, self.prior_strength * (1.0 - c)),
                None => (0.0, 0.0),
            };
            let dist = Beta::new(self.alpha[n] + m_a, self.beta[n] + m_b)
                .map_err(|e| numeric(format!("meta-MAB posterior: {e}")))?;
            draws.push(dist.sample(rng));
        }
        let expert = argmax_random_tie(&draws, rng);
        let arm = argmax_random_tie(advice.row(expert), rng);
        self.pending = Some((expert, arm));
        Ok((arm, expert))
    }

    pub fn update_expert(&mut self, expert: usize, reward: f64) -> Result<()> {
        check_reward(reward)?;
        if expert >= self.alpha.len() {
            return Err(invalid(format!("expert {expert} out of range")));
        }
        self.alpha[expert] += reward;
        self.beta[expert] += 1.0 - reward;
        Ok(())
    }
}

impl Policy for MetaMab {
    fn name(&self) -> &'static str {
        "metamab"
    }

    fn select(
        &mut self,
        advice: &AdviceMatrix,
        confidence: Option<&ConfidenceMatrix>,
        rng: &mut dyn RngCore,
    ) -> Result<usize> {
        self.select_expert(advice, confidence, rng).map(|(arm, _)| arm)
    }

    fn update(&mut self, _: &AdviceMatrix, _: Option<&ConfidenceMatrix>, arm: usize, reward: f64) -> Result<()> {
        let (expert, chosen) = self
            .pending
            .take()
            .ok_or_else(|| invalid("meta-MAB update without a preceding select"))?;
        if chosen != arm {
            return Err(invalid(format!("update for arm {arm} but arm {chosen} was selected")));
        }
        self.update_expert(expert, reward)
    }

    /// Posterior means, normalised to sum 1.
    fn weights_snapshot(&self) -> Option<Vec<f64>> {
        let means: Vec<f64> = self.alpha.iter().zip(&self.beta).map(|(a, b)| a / (a + b)).collect();
        let z: f64 = means.iter().sum();
        Some(means.into_iter().map(|m| m / z).collect())
    }
}
