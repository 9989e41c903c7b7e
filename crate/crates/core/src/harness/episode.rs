//! One paired cell: truth, panel, contexts and reward noise prepared once and
//! replayed for every algorithm.

use rand::Rng;

use super::config::ExperimentConfig;
use super::seed::{roles, CellKey};
use crate::error::{invalid, Result};
use crate::experts::{
    make_panel, noisy_confidence, AdviceMatrix, ConfidenceMatrix, ExpertPanel, HindsightTotals, PanelKind,
    PanelSnapshot, PanelSpec,
};
use crate::metrics::RunRecord;
use crate::perlin::{bernoulli_from_uniform, sample_contexts, Context, PerlinBandit, DEFAULT_GRID_SIDE};
use crate::policy::{build_policy, Algorithm};
use crate::stats;

/// Everything an episode needs, shared by all algorithms of a cell.
#[derive(Debug, Clone)]
pub struct EpisodeInputs {
    pub key: CellKey,
    pub kind: PanelKind,
    truth: PerlinBandit,
    contexts: Vec<Context>,
    /// `T x K` true arm values.
    values: Vec<f64>,
    best: Vec<f64>,
    worst: Vec<f64>,
    mean: Vec<f64>,
    /// `T x K` uniforms deciding each Bernoulli reward.
    uniforms: Vec<f64>,
    advice: Vec<AdviceMatrix>,
    /// `T x K` advice of the synthetic random expert.
    random_advice: Vec<f64>,
    confidences: Option<Vec<f64>>,
    expert_rewards: Vec<Vec<f64>>,
    snapshot: PanelSnapshot,
}

impl EpisodeInputs {
    /// Samples the truth and a fresh panel for `key`, then prepares the rest.
    pub fn prepare(config: &ExperimentConfig, kind: PanelKind, key: CellKey) -> Result<Self> {
        let truth = PerlinBandit::sample(key.arms, DEFAULT_GRID_SIDE, &mut key.rng(config.seed, roles::TRUTH))?;
        let spec = PanelSpec {
            kind,
            delta: key.delta,
            num_experts: key.experts,
            tolerance: config.tolerance,
            steps_per_arm: config.steps_per_arm,
            backend: config.backend,
            kernel: config.kernel,
        };
        let panel = make_panel(&spec, &truth, &mut key.rng(config.seed, roles::PANEL))?;
        Self::with_panel(config, kind, key, truth, &panel)
    }

    /// Prepares a cell around an existing truth and panel.
    pub fn with_panel(
        config: &ExperimentConfig,
        kind: PanelKind,
        key: CellKey,
        truth: PerlinBandit,
        panel: &ExpertPanel,
    ) -> Result<Self> {
        if panel.num_arms() != truth.num_arms() {
            return Err(invalid("panel and truth disagree on the arm count"));
        }
        let (horizon, k) = (config.horizon, truth.num_arms());
        let contexts = sample_contexts(horizon, &mut key.rng(config.seed, roles::CONTEXTS));
        let mut reward_rng = key.rng(config.seed, roles::REWARDS);
        let uniforms: Vec<f64> = (0..horizon * k).map(|_| reward_rng.random()).collect();
        let mut random_rng = key.rng(config.seed, roles::RANDOM_EXPERT);
        let random_advice: Vec<f64> = (0..horizon * k).map(|_| random_rng.random()).collect();

        let mut values = Vec::with_capacity(horizon * k);
        let (mut best, mut worst, mut mean) = (Vec::new(), Vec::new(), Vec::new());
        let mut row = Vec::with_capacity(k);
        for x in &contexts {
            truth.values_into(x, &mut row);
            best.push(row.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            worst.push(row.iter().copied().fold(f64::INFINITY, f64::min));
            mean.push(stats::mean(&row));
            values.extend_from_slice(&row);
        }

        // Raw panels hold no random experts, so advice ignores this stream.
        let mut unused = key.rng(config.seed, roles::PANEL);
        let advice: Vec<AdviceMatrix> = contexts.iter().map(|x| panel.advise(x, &mut unused)).collect();
        let expert_rewards: Vec<Vec<f64>> = (0..panel.len())
            .map(|n| {
                advice
                    .iter()
                    .enumerate()
                    .map(|(t, a)| stats::tie_averaged_payoff(a.row(n), &values[t * k..(t + 1) * k]))
                    .collect()
            })
            .collect();

        let confidences = if config.confidence.is_some() {
            let mut rng = key.rng(config.seed, roles::CONFIDENCE);
            let (b, w, u) = (best.iter().sum(), worst.iter().sum(), mean.iter().sum());
            let mut cs = Vec::with_capacity(panel.len());
            for series in &expert_rewards {
                let totals = HindsightTotals {
                    policy: series.iter().sum(),
                    best: b,
                    worst: w,
                    uniform: u,
                };
                cs.push(noisy_confidence(
                    totals.confidence()?,
                    config.confidence.noise(),
                    &mut rng,
                )?);
            }
            Some(cs)
        } else {
            None
        };

        let mut snapshot = panel.snapshot();
        snapshot.confidences = confidences.clone();
        Ok(Self {
            key,
            kind,
            truth,
            contexts,
            values,
            best,
            worst,
            mean,
            uniforms,
            advice,
            random_advice,
            confidences,
            expert_rewards,
            snapshot,
        })
    }

    pub fn truth(&self) -> &PerlinBandit {
        &self.truth
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn horizon(&self) -> usize {
        self.contexts.len()
    }

    pub fn num_experts(&self) -> usize {
        self.expert_rewards.len()
    }

    pub fn confidences(&self) -> Option<&[f64]> {
        self.confidences.as_deref()
    }

    pub fn expert_rewards(&self) -> &[Vec<f64>] {
        &self.expert_rewards
    }

    pub fn snapshot(&self) -> &PanelSnapshot {
        &self.snapshot
    }

    /// The same cell restricted to the `ceil(fraction * N)` experts with the
    /// highest expected reward on this cell's contexts.
    pub fn top_fraction(&self, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(invalid(format!("fraction {fraction} outside (0, 1]")));
        }
        let n = self.num_experts();
        let keep = (fraction * n as f64 - 1e-9).ceil() as usize;
        if keep == 0 {
            return Err(invalid("top fraction selects no experts"));
        }
        let totals: Vec<f64> = self.expert_rewards.iter().map(|s| s.iter().sum()).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| totals[b].total_cmp(&totals[a]).then(a.cmp(&b)));
        let mut kept = order[..keep].to_vec();
        kept.sort_unstable();

        let pick = |v: &[Option<f64>]| kept.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let mut out = self.clone();
        out.advice = self
            .advice
            .iter()
            .map(|a| a.select_rows(&kept))
            .collect::<Result<_>>()?;
        out.expert_rewards = kept.iter().map(|&i| self.expert_rewards[i].clone()).collect();
        out.confidences = self
            .confidences
            .as_ref()
            .map(|cs| kept.iter().map(|&i| cs[i]).collect());
        out.snapshot = PanelSnapshot {
            targets: pick(&self.snapshot.targets),
            achieved: pick(&self.snapshot.achieved),
            confidences: out.confidences.clone(),
            random: kept.iter().map(|&i| self.snapshot.random[i]).collect(),
        };
        Ok(out)
    }

    /// Plays `alg` for the full horizon.
    pub fn run(&self, alg: Algorithm, config: &ExperimentConfig) -> Result<RunRecord> {
        let k = self.truth.num_arms();
        let n = self.num_experts();
        let augmented = alg.uses_random_expert();
        let seen = n + usize::from(augmented);
        let mut policy = build_policy(alg, &config.policy_params(seen, k))?;

        let confidence = match &self.confidences {
            Some(cs) => {
                let mut cs = cs.clone();
                if augmented {
                    cs.push(0.5);
                }
                Some(ConfidenceMatrix::broadcast(&cs, k)?)
            }
            None => None,
        };
        let mut rng = self.key.rng(config.seed, &roles::policy(alg));
        let mut buffer = AdviceMatrix::zeros(seen, k);

        let horizon = self.horizon();
        let mut record = RunRecord {
            rewards: Vec::with_capacity(horizon),
            realized: Vec::with_capacity(horizon),
            chosen_arms: Vec::with_capacity(horizon),
            oracle_best: self.best.clone(),
            oracle_worst: self.worst.clone(),
            oracle_mean: self.mean.clone(),
            expert_rewards: self.expert_rewards.clone(),
            weights: None,
        };
        for t in 0..horizon {
            let advice = if augmented {
                for e in 0..n {
                    buffer.row_mut(e).copy_from_slice(self.advice[t].row(e));
                }
                buffer
                    .row_mut(n)
                    .copy_from_slice(&self.random_advice[t * k..(t + 1) * k]);
                &buffer
            } else {
                &self.advice[t]
            };
            let arm = policy.select(advice, confidence.as_ref(), &mut rng)?;
            if arm >= k {
                return Err(invalid(format!("{} selected arm {arm} of {k}", policy.name())));
            }
            let p = self.values[t * k + arm];
            let r = bernoulli_from_uniform(p, self.uniforms[t * k + arm]);
            policy.update(advice, confidence.as_ref(), arm, r)?;
            record.rewards.push(p);
            record.realized.push(r);
            record.chosen_arms.push(arm);
        }
        record.weights = policy.weights_snapshot().map(|mut w| {
            if augmented {
                w.truncate(n);
                let z: f64 = w.iter().sum();
                if z > 0.0 {
                    w.iter_mut().for_each(|v| *v /= z);
                }
            }
            w
        });
        Ok(record)
    }
}

/// Prepares a cell and plays one algorithm on it.
pub fn run_episode(config: &ExperimentConfig, kind: PanelKind, key: CellKey, alg: Algorithm) -> Result<RunRecord> {
    EpisodeInputs::prepare(config, kind, key)?.run(alg, config)
}
