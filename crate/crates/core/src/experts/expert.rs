use rand::{Rng, RngCore};

use super::kernel::{KernelEstimator, KernelParams, TrainingBackend};
use crate::error::{invalid, Result};
use crate::perlin::{Context, PerlinBandit};
use crate::stats;

/// Default number of prior training steps per arm.
pub const TRAIN_STEPS_PER_ARM: usize = 100;

/// Where an expert's value advice comes from.
#[derive(Debug, Clone)]
pub enum Estimator {
    /// Kernel ridge models learned from prior experience.
    Kernel(KernelEstimator),
    /// Exact landscape values of a known bandit (oracle or anti-oracle experts).
    Landscape(PerlinBandit),
    /// Fresh i.i.d. uniform values on every query.
    Random { num_arms: usize },
}

/// One advisor: a value estimator plus the bias it was built with.
#[derive(Debug, Clone)]
pub struct Expert {
    pub estimator: Estimator,
    /// The biased bandit the expert trained on, if any.
    pub prior: Option<PerlinBandit>,
    pub target_distance: Option<f64>,
    pub achieved_distance: Option<f64>,
    pub trained_steps: usize,
}

impl Expert {
    /// Trains an expert on `prior` for `steps` interactions.
    pub fn train<R: Rng + ?Sized>(
        prior: PerlinBandit,
        steps: usize,
        backend: TrainingBackend,
        params: KernelParams,
        rng: &mut R,
    ) -> Result<Self> {
        if steps == 0 {
            return Err(invalid("training needs at least one step"));
        }
        let est = KernelEstimator::train(&prior, steps, backend, params, rng)?;
        Ok(Self {
            estimator: Estimator::Kernel(est),
            prior: Some(prior),
            target_distance: None,
            achieved_distance: None,
            trained_steps: steps,
        })
    }

    /// Expert whose estimates are the exact values of `bandit`.
    pub fn oracle(bandit: PerlinBandit) -> Self {
        Self {
            estimator: Estimator::Landscape(bandit),
            prior: None,
            target_distance: None,
            achieved_distance: None,
            trained_steps: 0,
        }
    }

    /// Synthetic expert giving fresh uniform advice at every step.
    pub fn random(num_arms: usize) -> Self {
        Self {
            estimator: Estimator::Random { num_arms },
            prior: None,
            target_distance: None,
            achieved_distance: None,
            trained_steps: 0,
        }
    }

    pub fn num_arms(&self) -> usize {
        match &self.estimator {
            Estimator::Kernel(e) => e.num_arms(),
            Estimator::Landscape(b) => b.num_arms(),
            Estimator::Random { num_arms } => *num_arms,
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self.estimator, Estimator::Random { .. })
    }

    /// Writes this expert's advice at `x` into `out`. Only random experts
    /// consume `rng`.
    pub fn advise_into(&self, x: &Context, rng: &mut dyn RngCore, out: &mut [f64]) {
        match &self.estimator {
            Estimator::Kernel(e) => e.predict_into(x, out),
            Estimator::Landscape(b) => {
                for (o, g) in out.iter_mut().zip(b.arms()) {
                    *o = crate::perlin::landscape_value(g, x);
                }
            }
            Estimator::Random { .. } => {
                for o in out.iter_mut() {
                    *o = rng.random::<f64>();
                }
            }
        }
    }

    pub fn advise(&self, x: &Context, rng: &mut dyn RngCore) -> Vec<f64> {
        let mut out = vec![0.0; self.num_arms()];
        self.advise_into(x, rng, &mut out);
        out
    }

    /// Expected reward under `truth_values` of following this expert
    /// greedily, ties (and random experts) averaged uniformly.
    pub fn greedy_payoff(&self, advice: &[f64], truth_values: &[f64]) -> f64 {
        if self.is_random() {
            stats::mean(truth_values)
        } else {
            stats::tie_averaged_payoff(advice, truth_values)
        }
    }
}

/// Free-function spelling of [`Expert::train`].
pub fn train_expert<R: Rng + ?Sized>(
    prior: PerlinBandit,
    steps: usize,
    backend: TrainingBackend,
    params: KernelParams,
    rng: &mut R,
) -> Result<Expert> {
    Expert::train(prior, steps, backend, params, rng)
}

pub fn random_expert(num_arms: usize) -> Expert {
    Expert::random(num_arms)
}
