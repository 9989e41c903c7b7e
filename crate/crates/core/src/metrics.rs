//! Reward accounting over episode records.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, numeric, Result};
use crate::stats;

/// Steps skipped before a crossover may be reported.
pub const CROSSOVER_BURN_IN: usize = 10;
/// Steps the algorithm must stay at or above the reference after crossing.
pub const CROSSOVER_WINDOW: usize = 50;

/// Per-step record of one episode.
///
/// `rewards` holds the expected value of each pulled arm and `realized` the
/// Bernoulli draw actually observed by the policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub rewards: Vec<f64>,
    pub realized: Vec<f64>,
    pub chosen_arms: Vec<usize>,
    pub oracle_best: Vec<f64>,
    pub oracle_worst: Vec<f64>,
    pub oracle_mean: Vec<f64>,
    /// Expected reward of each (raw panel) expert's greedy arm, one series per expert.
    pub expert_rewards: Vec<Vec<f64>>,
    /// Normalised per-expert weights at the final step, where defined.
    pub weights: Option<Vec<f64>>,
}

impl RunRecord {
    pub fn horizon(&self) -> usize {
        self.rewards.len()
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.rewards.len();
        let lens = [
            self.realized.len(),
            self.chosen_arms.len(),
            self.oracle_best.len(),
            self.oracle_worst.len(),
            self.oracle_mean.len(),
        ];
        if lens.iter().any(|&l| l != t) || self.expert_rewards.iter().any(|s| s.len() != t) {
            return Err(invalid("run record series lengths differ"));
        }
        let ordered = self
            .oracle_worst
            .iter()
            .zip(&self.oracle_mean)
            .zip(&self.oracle_best)
            .all(|((w, m), b)| w <= m && m <= b);
        if !ordered {
            return Err(invalid("oracle series must satisfy worst <= mean <= best"));
        }
        Ok(())
    }

    /// Scaled cumulative reward of an arbitrary series on this record's bounds.
    pub fn scale(&self, series: &[f64]) -> Result<f64> {
        scale_sum(
            cumulative_reward(series),
            cumulative_reward(&self.oracle_best),
            cumulative_reward(&self.oracle_worst),
        )
    }

    /// Expected scaled reward of the uniform-random policy.
    pub fn random_baseline(&self) -> Result<f64> {
        self.scale(&self.oracle_mean)
    }

    pub fn expert_scaled_rewards(&self) -> Result<Vec<f64>> {
        self.expert_rewards.iter().map(|s| self.scale(s)).collect()
    }

    /// Index of the expert with the largest cumulative expected reward.
    pub fn best_expert(&self) -> Option<usize> {
        let totals: Vec<f64> = self.expert_rewards.iter().map(|s| cumulative_reward(s)).collect();
        stats::argmax_set(&totals).first().copied()
    }
}

pub fn cumulative_reward(rewards: &[f64]) -> f64 {
    rewards.iter().sum()
}

fn scale_sum(sum: f64, best: f64, worst: f64) -> Result<f64> {
    let span = best - worst;
    if !(span > 0.0) {
        return Err(numeric("scaling bounds coincide"));
    }
    Ok((sum - worst) / span)
}

/// `(Σr - Σworst) / (Σbest - Σworst)` on the record's own rewards.
pub fn scaled_cumulative_reward(record: &RunRecord) -> Result<f64> {
    record.scale(&record.rewards)
}

/// Best expert's cumulative expected reward minus the policy's.
pub fn regret_vs_best_expert(record: &RunRecord) -> Result<f64> {
    let best = record
        .expert_rewards
        .iter()
        .map(|s| cumulative_reward(s))
        .fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return Err(invalid("record has no experts"));
    }
    Ok(best - cumulative_reward(&record.rewards))
}

/// Running mean of `rewards` after step `t`, scaled by the running means of
/// the record's best and worst series.
pub fn anytime_average(rewards: &[f64], record: &RunRecord) -> Result<Vec<f64>> {
    if rewards.len() != record.horizon() {
        return Err(invalid("series length differs from the record horizon"));
    }
    let (mut r, mut b, mut w) = (0.0, 0.0, 0.0);
    let mut out = Vec::with_capacity(rewards.len());
    for ((x, best), worst) in rewards.iter().zip(&record.oracle_best).zip(&record.oracle_worst) {
        r += x;
        b += best;
        w += worst;
        out.push(scale_sum(r, b, w)?);
    }
    Ok(out)
}

/// First index `t >= CROSSOVER_BURN_IN` from which `series` stays at or above
/// `reference` for `CROSSOVER_WINDOW` consecutive steps.
pub fn crossover_step(series: &[f64], reference: &[f64]) -> Option<usize> {
    let n = series.len().min(reference.len());
    let mut run_start = None;
    for t in CROSSOVER_BURN_IN..n {
        if series[t] >= reference[t] {
            let start = *run_start.get_or_insert(t);
            if t + 1 - start >= CROSSOVER_WINDOW {
                return Some(start);
            }
        } else {
            run_start = None;
        }
    }
    None
}

pub fn pearson_cc(xs: &[f64], ys: &[f64]) -> Result<f64> {
    stats::pearson(xs, ys)
}
