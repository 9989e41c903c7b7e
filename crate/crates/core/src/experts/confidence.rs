//! Hindsight evaluation of experts: expected reward and normalised confidence.

use rand::Rng;
use rand_distr::{Beta, Distribution};

use super::expert::Expert;
use crate::error::{invalid, numeric, Result};
use crate::perlin::{sample_contexts, Context, PerlinBandit};
use crate::stats;

/// Cumulative expected rewards of a policy and of the reference policies
/// (per-context best, worst and uniform-random arm) over the same contexts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HindsightTotals {
    pub policy: f64,
    pub best: f64,
    pub worst: f64,
    pub uniform: f64,
}

impl HindsightTotals {
    /// Accumulates totals for `policy`, which maps a context and the true arm
    /// values there to the policy's expected reward.
    pub fn collect(
        truth: &PerlinBandit,
        contexts: &[Context],
        mut policy: impl FnMut(&Context, &[f64]) -> f64,
    ) -> Self {
        let mut t = HindsightTotals {
            policy: 0.0,
            best: 0.0,
            worst: 0.0,
            uniform: 0.0,
        };
        let mut values = Vec::with_capacity(truth.num_arms());
        for x in contexts {
            truth.values_into(x, &mut values);
            t.policy += policy(x, &values);
            t.best += values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            t.worst += values.iter().copied().fold(f64::INFINITY, f64::min);
            t.uniform += stats::mean(&values);
        }
        t
    }

    /// `((R - R-)/(R+ - R-))^κ` with `κ = ln 0.5 / ln((RU - R-)/(R+ - R-))`,
    /// so a uniform-random policy maps to 0.5.
    pub fn confidence(&self) -> Result<f64> {
        let span = self.best - self.worst;
        if !(span > 0.0) {
            return Err(numeric("hindsight bounds are degenerate (best == worst)"));
        }
        let uniform_ratio = (self.uniform - self.worst) / span;
        if !(uniform_ratio > 0.0 && uniform_ratio < 1.0) {
            return Err(numeric(format!(
                "random-policy ratio {uniform_ratio} leaves the confidence exponent undefined"
            )));
        }
        let exponent = 0.5f64.ln() / uniform_ratio.ln();
        let ratio = ((self.policy - self.worst) / span).clamp(0.0, 1.0);
        Ok(ratio.powf(exponent))
    }
}

fn expert_totals(expert: &Expert, truth: &PerlinBandit, contexts: &[Context]) -> HindsightTotals {
    let mut advice = vec![0.0; expert.num_arms()];
    let mut unused = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
    HindsightTotals::collect(truth, contexts, |x, values| {
        if !expert.is_random() {
            expert.advise_into(x, &mut unused, &mut advice);
        }
        expert.greedy_payoff(&advice, values)
    })
}

/// Hindsight confidence of `expert` on an explicit context sequence.
pub fn hindsight_confidence_on(expert: &Expert, truth: &PerlinBandit, contexts: &[Context]) -> Result<f64> {
    if expert.is_random() {
        return Ok(0.5);
    }
    expert_totals(expert, truth, contexts).confidence()
}

pub fn hindsight_confidence<R: Rng + ?Sized>(
    expert: &Expert,
    truth: &PerlinBandit,
    n_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if n_samples == 0 {
        return Err(invalid("n_samples must be >= 1"));
    }
    hindsight_confidence_on(expert, truth, &sample_contexts(n_samples, rng))
}

/// One draw from `Beta(1 + c/η, 1 + (1-c)/η)`; `η = 0` returns `c`.
pub fn noisy_confidence<R: Rng + ?Sized>(c: f64, eta: f64, rng: &mut R) -> Result<f64> {
    if !(0.0..=1.0).contains(&c) {
        return Err(invalid(format!("confidence {c} outside [0, 1]")));
    }
    if !(eta >= 0.0) {
        return Err(invalid(format!("noise level must be >= 0, got {eta}")));
    }
    if eta == 0.0 {
        return Ok(c);
    }
    let beta = Beta::new(1.0 + c / eta, 1.0 + (1.0 - c) / eta).map_err(|e| invalid(format!("beta parameters: {e}")))?;
    Ok(beta.sample(rng))
}

/// Mean expected reward of following `expert` greedily on `contexts`.
pub fn expert_expected_reward_on(expert: &Expert, truth: &PerlinBandit, contexts: &[Context]) -> f64 {
    if contexts.is_empty() {
        return f64::NAN;
    }
    expert_totals(expert, truth, contexts).policy / contexts.len() as f64
}

pub fn expert_expected_reward<R: Rng + ?Sized>(
    expert: &Expert,
    truth: &PerlinBandit,
    n_samples: usize,
    rng: &mut R,
) -> f64 {
    expert_expected_reward_on(expert, truth, &sample_contexts(n_samples.max(1), rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perlin::sample_bandit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (PerlinBandit, Vec<Context>) {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let truth = sample_bandit(4, 5, &mut rng).unwrap();
        let ctx = sample_contexts(512, &mut rng);
        (truth, ctx)
    }

    fn max(v: &[f64]) -> f64 {
        v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn min(v: &[f64]) -> f64 {
        v.iter().copied().fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn reference_policies_hit_fixed_points() {
        let (truth, ctx) = setup();
        let random = HindsightTotals::collect(&truth, &ctx, |_, v| stats::mean(v));
        assert!((random.confidence().unwrap() - 0.5).abs() < 1e-12);
        let best = HindsightTotals::collect(&truth, &ctx, |_, v| max(v));
        assert_eq!(best.confidence().unwrap(), 1.0);
        let worst = HindsightTotals::collect(&truth, &ctx, |_, v| min(v));
        assert_eq!(worst.confidence().unwrap(), 0.0);
    }

    #[test]
    fn confidence_is_monotone_and_bounded() {
        let (truth, ctx) = setup();
        let mut last = -1.0;
        for i in 0..=20 {
            let w = i as f64 / 20.0;
            let t = HindsightTotals::collect(&truth, &ctx, |_, v| w * max(v) + (1.0 - w) * min(v));
            let c = t.confidence().unwrap();
            assert!((0.0..=1.0).contains(&c));
            assert!(c > last);
            last = c;
        }
    }

    #[test]
    fn oracle_experts() {
        let (truth, ctx) = setup();
        let oracle = Expert::oracle(truth.clone());
        let anti = Expert::oracle(truth.inverted());
        assert_eq!(hindsight_confidence_on(&oracle, &truth, &ctx).unwrap(), 1.0);
        assert_eq!(hindsight_confidence_on(&anti, &truth, &ctx).unwrap(), 0.0);
        assert_eq!(hindsight_confidence_on(&Expert::random(4), &truth, &ctx).unwrap(), 0.5);

        let best_mean = ctx.iter().map(|x| max(&truth.values(x))).sum::<f64>() / ctx.len() as f64;
        let worst_mean = ctx.iter().map(|x| min(&truth.values(x))).sum::<f64>() / ctx.len() as f64;
        assert!((expert_expected_reward_on(&oracle, &truth, &ctx) - best_mean).abs() < 1e-12);
        assert!((expert_expected_reward_on(&anti, &truth, &ctx) - worst_mean).abs() < 1e-12);
    }

    #[test]
    fn degenerate_bounds_error() {
        let t = HindsightTotals {
            policy: 1.0,
            best: 1.0,
            worst: 1.0,
            uniform: 1.0,
        };
        assert!(t.confidence().is_err());
    }

    #[test]
    fn noiseless_and_symmetric_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(noisy_confidence(0.73, 0.0, &mut rng).unwrap(), 0.73);
        for eta in [0.1, 1.0, 10.0] {
            let n = 10_000;
            let m: f64 = (0..n)
                .map(|_| noisy_confidence(0.5, eta, &mut rng).unwrap())
                .sum::<f64>()
                / n as f64;
            assert!((m - 0.5).abs() <= 0.02, "eta={eta} mean={m}");
        }
        assert!(noisy_confidence(1.5, 1.0, &mut rng).is_err());
        assert!(noisy_confidence(0.5, -1.0, &mut rng).is_err());
    }

    /// Beta CDF by composite Simpson quadrature of the unnormalised density.
    fn beta_cdf_table(a: f64, b: f64, steps: usize) -> Vec<f64> {
        let h = 1.0 / steps as f64;
        let pdf = |t: f64| t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0);
        let mut cdf = vec![0.0; steps + 1];
        for i in 0..steps {
            let (l, r) = (i as f64 * h, (i + 1) as f64 * h);
            cdf[i + 1] = cdf[i] + h / 6.0 * (pdf(l) + 4.0 * pdf(0.5 * (l + r)) + pdf(r));
        }
        let total = cdf[steps];
        cdf.iter().map(|c| c / total).collect()
    }

    #[test]
    fn heavy_noise_is_near_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let steps = 4000;
        for c in [0.05, 0.5, 0.9] {
            let (a, b) = (1.0 + c / 10.0, 1.0 + (1.0 - c) / 10.0);
            let table = beta_cdf_table(a, b, steps);
            let cdf = |x: f64| {
                let pos = x * steps as f64;
                let i = (pos.floor() as usize).min(steps - 1);
                table[i] + (pos - i as f64) * (table[i + 1] - table[i])
            };
            let n = 10_000;
            let mut draws: Vec<f64> = (0..n).map(|_| noisy_confidence(c, 10.0, &mut rng).unwrap()).collect();
            draws.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let (mut ks_beta, mut ks_uniform) = (0.0f64, 0.0f64);
            for (i, &x) in draws.iter().enumerate() {
                let (lo, hi) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
                let f = cdf(x);
                ks_beta = ks_beta.max((hi - f).abs()).max((f - lo).abs());
                ks_uniform = ks_uniform.max((hi - x).abs()).max((x - lo).abs());
            }
            assert!(ks_beta < 0.05, "c={c} ks vs beta {ks_beta}");
            assert!(ks_uniform < 0.05, "c={c} ks vs uniform {ks_uniform}");
        }
    }
}
