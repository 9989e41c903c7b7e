//! Advice-aggregation policies.
//!
//! Every policy follows the same per-step protocol: [`Policy::select`] on the
//! current advice (and optional confidence), then [`Policy::update`] with the
//! reward of the arm it returned.

mod exp4p;
mod metacmab;
mod metamab;
mod random;
mod wmv;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::experts::{AdviceMatrix, ConfidenceMatrix};

pub use exp4p::{Exp4p, DEFAULT_DELTA};
pub use metacmab::{build_meta_context, meta_context_dim, MetaCmab};
pub use metamab::MetaMab;
pub use random::RandomPolicy;
pub use wmv::{wmv_scores, Wmv, CONFIDENCE_EPS};

/// Strength of the confidence prior in meta-MAB and EXP4.P.
pub const DEFAULT_PRIOR_STRENGTH: f64 = 100.0;

pub trait Policy: Send {
    fn name(&self) -> &'static str;

    /// Picks an arm for the current step.
    fn select(
        &mut self,
        advice: &AdviceMatrix,
        confidence: Option<&ConfidenceMatrix>,
        rng: &mut dyn RngCore,
    ) -> Result<usize>;

    /// Feeds back the reward of `arm`, which must be the arm just selected.
    fn update(
        &mut self,
        advice: &AdviceMatrix,
        confidence: Option<&ConfidenceMatrix>,
        arm: usize,
        reward: f64,
    ) -> Result<()>;

    /// Normalised per-expert weights, for policies that learn them.
    fn weights_snapshot(&self) -> Option<Vec<f64>> {
        None
    }
}

/// The aggregation algorithms known to the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Wmv,
    MetaMab,
    Exp4p,
    MetaCmab,
    Random,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [Self::Wmv, Self::MetaMab, Self::Exp4p, Self::MetaCmab, Self::Random];
    /// The four aggregation algorithms, without the baseline.
    pub const AGGREGATORS: [Algorithm; 4] = [Self::Wmv, Self::MetaMab, Self::Exp4p, Self::MetaCmab];

    pub fn name(self) -> &'static str {
        match self {
            Self::Wmv => "wmv",
            Self::MetaMab => "metamab",
            Self::Exp4p => "exp4p",
            Self::MetaCmab => "metacmab",
            Self::Random => "random",
        }
    }

    /// Whether the algorithm sees the panel plus one synthetic random expert.
    pub fn uses_random_expert(self) -> bool {
        matches!(self, Self::MetaMab | Self::Exp4p)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "wmv" => Ok(Self::Wmv),
            "metamab" => Ok(Self::MetaMab),
            "exp4p" | "exp4pcon" => Ok(Self::Exp4p),
            "metacmab" => Ok(Self::MetaCmab),
            "random" => Ok(Self::Random),
            _ => Err(invalid(format!("unknown algorithm '{s}'"))),
        }
    }
}

/// Episode constants a policy may need at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyParams {
    pub num_experts: usize,
    pub num_arms: usize,
    pub horizon: usize,
    pub with_confidence: bool,
    pub prior_strength: f64,
    pub delta: f64,
    pub ridge: f64,
    pub ucb_alpha: f64,
}

impl PolicyParams {
    pub fn new(num_experts: usize, num_arms: usize, horizon: usize, with_confidence: bool) -> Self {
        Self {
            num_experts,
            num_arms,
            horizon,
            with_confidence,
            prior_strength: DEFAULT_PRIOR_STRENGTH,
            delta: DEFAULT_DELTA,
            ridge: 1.0,
            ucb_alpha: 1.0,
        }
    }
}

/// Builds a fresh policy. `params.num_experts` counts the experts the policy
/// will actually see, including any appended random expert.
pub fn build_policy(alg: Algorithm, params: &PolicyParams) -> Result<Box<dyn Policy>> {
    Ok(match alg {
        Algorithm::Wmv => Box::new(Wmv::new()),
        Algorithm::MetaMab => Box::new(MetaMab::new(params.num_experts, params.prior_strength)?),
        Algorithm::Exp4p => Box::new(Exp4p::new(
            params.num_experts,
            params.num_arms,
            params.horizon,
            params.delta,
            params.prior_strength,
        )?),
        Algorithm::MetaCmab => Box::new(MetaCmab::new(
            params.num_experts,
            params.with_confidence,
            params.ridge,
            params.ucb_alpha,
        )?),
        Algorithm::Random => Box::new(RandomPolicy::new(params.num_arms)?),
    })
}

pub(crate) fn check_reward(reward: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&reward) {
        return Err(invalid(format!("reward {reward} outside [0, 1]")));
    }
    Ok(())
}

pub(crate) fn check_shapes(advice: &AdviceMatrix, confidence: Option<&ConfidenceMatrix>) -> Result<()> {
    if let Some(c) = confidence {
        if c.num_experts() != advice.num_experts() || c.num_arms() != advice.num_arms() {
            return Err(invalid(format!(
                "confidence is {}x{} but advice is {}x{}",
                c.num_experts(),
                c.num_arms(),
                advice.num_experts(),
                advice.num_arms()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!("EXP4.P+CON".parse::<Algorithm>().unwrap(), Algorithm::Exp4p);
        assert_eq!("meta-CMAB".parse::<Algorithm>().unwrap(), Algorithm::MetaCmab);
        assert!("ucb".parse::<Algorithm>().is_err());
    }
}
