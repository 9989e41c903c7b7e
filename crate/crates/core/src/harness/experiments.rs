//! Experiment grids built from paired episodes.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::episode::EpisodeInputs;
use super::seed::{roles, stream, CellKey};
use crate::error::{invalid, Result};
use crate::experts::PanelKind;
use crate::metrics::{anytime_average, crossover_step, regret_vs_best_expert, scaled_cumulative_reward};
use crate::perlin::{
    rotate_bandit, sample_contexts, scaled_distance_on, value_pcc_on, PerlinBandit, DEFAULT_DISTANCE_SAMPLES,
    DEFAULT_GRID_SIDE,
};
use crate::policy::Algorithm;
use crate::stats;

/// Series names used next to algorithm names in summaries.
pub mod series {
    pub const BEST_EXPERT: &str = "best_expert";
    pub const WORST_EXPERT: &str = "worst_expert";
    pub const EXPERT_MEAN: &str = "expert_mean";
    pub const RANDOM: &str = "random_baseline";
}

/// One (cell, run, algorithm) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub arms: usize,
    pub experts: usize,
    pub kind: PanelKind,
    pub variant: String,
    pub confidence: String,
    pub delta: f64,
    pub run: usize,
    pub algorithm: Algorithm,
    pub scaled_reward: f64,
    pub best_expert: f64,
    pub worst_expert: f64,
    pub expert_mean: f64,
    pub random_baseline: f64,
    pub regret: f64,
    pub crossover: Option<usize>,
}

/// Mean and population std of one series over the runs of a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub arms: usize,
    pub experts: usize,
    pub kind: PanelKind,
    pub variant: String,
    pub confidence: String,
    pub delta: f64,
    pub series: String,
    pub runs: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnytimeRow {
    pub arms: usize,
    pub experts: usize,
    pub kind: PanelKind,
    pub delta: f64,
    pub series: String,
    pub t: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverRow {
    pub arms: usize,
    pub experts: usize,
    pub kind: PanelKind,
    pub delta: f64,
    pub run: usize,
    pub algorithm: Algorithm,
    pub crossover: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    pub arms: usize,
    pub experts: usize,
    pub kind: PanelKind,
    pub delta: f64,
    pub run: usize,
    pub expert: usize,
    pub achieved_distance: Option<f64>,
    /// Scaled cumulative expected reward of the expert's greedy policy.
    pub expected_reward: f64,
    pub random_baseline: f64,
    pub above_random: bool,
    pub is_best: bool,
    pub metacmab_weight: Option<f64>,
    pub exp4p_weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PccRow {
    pub pair: usize,
    pub relation: String,
    pub rotation_mean: f64,
    pub concentration: f64,
    pub distance: f64,
    pub pcc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    kind: PanelKind,
    key: CellKey,
}

fn cells(config: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &arms in &config.arms {
        for &experts in &config.experts {
            for &kind in &config.kinds {
                for &delta in &config.delta_grid {
                    for run in 0..config.runs {
                        out.push(Cell {
                            kind,
                            key: CellKey {
                                arms,
                                experts,
                                delta,
                                run,
                            },
                        });
                    }
                }
            }
        }
    }
    out
}

/// Runs `f` over all cells on `jobs` threads (0 = rayon default), keeping
/// cell order.
fn map_cells<T: Send>(
    config: &ExperimentConfig,
    jobs: usize,
    f: impl Fn(Cell) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    config.validate()?;
    let all = cells(config);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| invalid(format!("thread pool: {e}")))?;
    pool.install(|| all.into_par_iter().map(f).collect())
}

fn sweep_rows(inputs: &EpisodeInputs, config: &ExperimentConfig, variant: &str) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(config.algorithms.len());
    for &alg in &config.algorithms {
        let rec = inputs.run(alg, config)?;
        let experts = rec.expert_scaled_rewards()?;
        let best_idx = rec.best_expert().ok_or_else(|| invalid("episode without experts"))?;
        let crossover = crossover_step(
            &anytime_average(&rec.rewards, &rec)?,
            &anytime_average(&rec.expert_rewards[best_idx], &rec)?,
        );
        rows.push(SweepRow {
            arms: inputs.key.arms,
            experts: inputs.key.experts,
            kind: inputs.kind,
            variant: variant.to_string(),
            confidence: config.confidence.to_string(),
            delta: inputs.key.delta,
            run: inputs.key.run,
            algorithm: alg,
            scaled_reward: scaled_cumulative_reward(&rec)?,
            best_expert: experts.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            worst_expert: experts.iter().copied().fold(f64::INFINITY, f64::min),
            expert_mean: stats::mean(&experts),
            random_baseline: rec.random_baseline()?,
            regret: regret_vs_best_expert(&rec)?,
            crossover,
        });
    }
    Ok(rows)
}

fn sort_sweep(rows: &mut [SweepRow]) {
    rows.sort_by(|a, b| {
        (a.arms, a.experts, a.kind as u8, &a.variant, &a.confidence)
            .cmp(&(b.arms, b.experts, b.kind as u8, &b.variant, &b.confidence))
            .then(a.delta.total_cmp(&b.delta))
            .then((a.run, a.algorithm).cmp(&(b.run, b.algorithm)))
    });
}

/// Distance sweep: every algorithm on every (K, N, kind, Δ, run) cell.
pub fn run_sweep(config: &ExperimentConfig, jobs: usize) -> Result<Vec<SweepRow>> {
    let nested = map_cells(config, jobs, |c| {
        let inputs = EpisodeInputs::prepare(config, c.kind, c.key)?;
        sweep_rows(&inputs, config, "full")
    })?;
    let mut rows: Vec<SweepRow> = nested.into_iter().flatten().collect();
    sort_sweep(&mut rows);
    Ok(rows)
}

/// Each cell twice on identical seeds: the full panel (`variant = full`) and
/// its best `fraction` in hindsight (`variant = top`).
pub fn run_ablation(config: &ExperimentConfig, jobs: usize) -> Result<Vec<SweepRow>> {
    let nested = map_cells(config, jobs, |c| {
        let full = EpisodeInputs::prepare(config, c.kind, c.key)?;
        let top = full.top_fraction(config.fraction)?;
        let mut rows = sweep_rows(&full, config, "full")?;
        rows.extend(sweep_rows(&top, config, "top")?);
        Ok(rows)
    })?;
    let mut rows: Vec<SweepRow> = nested.into_iter().flatten().collect();
    sort_sweep(&mut rows);
    Ok(rows)
}

/// Per-cell mean and std of every algorithm plus the reference series.
pub fn summarize(rows: &[SweepRow]) -> Vec<SummaryRow> {
    type Key = (usize, usize, u8, String, String, u64, String);
    let mut groups: BTreeMap<Key, (PanelKind, f64, Vec<f64>)> = BTreeMap::new();
    let first_alg = rows.iter().map(|r| r.algorithm).min();
    for r in rows {
        let mut push = |series: &str, v: f64| {
            let key = (
                r.arms,
                r.experts,
                r.kind as u8,
                r.variant.clone(),
                r.confidence.clone(),
                // Δ in [0, 1], so the bit pattern orders like the value
                r.delta.to_bits(),
                series.to_string(),
            );
            groups.entry(key).or_insert((r.kind, r.delta, Vec::new())).2.push(v);
        };
        push(r.algorithm.name(), r.scaled_reward);
        if Some(r.algorithm) == first_alg {
            push(series::BEST_EXPERT, r.best_expert);
            push(series::WORST_EXPERT, r.worst_expert);
            push(series::EXPERT_MEAN, r.expert_mean);
            push(series::RANDOM, r.random_baseline);
        }
    }
    groups
        .into_iter()
        .map(
            |((arms, experts, _, variant, confidence, _, series), (kind, delta, vals))| SummaryRow {
                arms,
                experts,
                kind,
                variant,
                confidence,
                delta,
                series,
                runs: vals.len(),
                mean: stats::mean(&vals),
                std: stats::std_dev(&vals),
            },
        )
        .collect()
}

/// Anytime curves and per-run crossover steps over the best expert.
pub fn run_anytime(config: &ExperimentConfig, jobs: usize) -> Result<(Vec<AnytimeRow>, Vec<CrossoverRow>)> {
    struct CellCurves {
        cell: Cell,
        curves: Vec<(String, Vec<f64>)>,
        crossovers: Vec<(Algorithm, Option<usize>)>,
    }
    let per_cell = map_cells(config, jobs, |c| {
        let inputs = EpisodeInputs::prepare(config, c.kind, c.key)?;
        let mut curves = Vec::new();
        let mut crossovers = Vec::new();
        let mut reference = None;
        for &alg in &config.algorithms {
            let rec = inputs.run(alg, config)?;
            if reference.is_none() {
                let best = rec.best_expert().ok_or_else(|| invalid("episode without experts"))?;
                let worst = rec
                    .expert_scaled_rewards()?
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(i, _)| i)
                    .expect("non-empty");
                let best_curve = anytime_average(&rec.expert_rewards[best], &rec)?;
                curves.push((series::BEST_EXPERT.to_string(), best_curve.clone()));
                curves.push((
                    series::WORST_EXPERT.to_string(),
                    anytime_average(&rec.expert_rewards[worst], &rec)?,
                ));
                curves.push((series::RANDOM.to_string(), anytime_average(&rec.oracle_mean, &rec)?));
                reference = Some(best_curve);
            }
            let curve = anytime_average(&rec.rewards, &rec)?;
            crossovers.push((alg, crossover_step(&curve, reference.as_ref().expect("set above"))));
            curves.push((alg.name().to_string(), curve));
        }
        Ok(CellCurves {
            cell: c,
            curves,
            crossovers,
        })
    })?;

    let mut cross_rows = Vec::new();
    type Key = (usize, usize, u8, u64, String);
    let mut groups: BTreeMap<Key, (PanelKind, f64, Vec<Vec<f64>>)> = BTreeMap::new();
    for cc in per_cell {
        let k = cc.cell.key;
        for (alg, step) in cc.crossovers {
            cross_rows.push(CrossoverRow {
                arms: k.arms,
                experts: k.experts,
                kind: cc.cell.kind,
                delta: k.delta,
                run: k.run,
                algorithm: alg,
                crossover: step,
            });
        }
        for (name, curve) in cc.curves {
            groups
                .entry((k.arms, k.experts, cc.cell.kind as u8, k.delta.to_bits(), name))
                .or_insert((cc.cell.kind, k.delta, Vec::new()))
                .2
                .push(curve);
        }
    }
    let mut rows = Vec::new();
    for ((arms, experts, _, _, name), (kind, delta, curves)) in groups {
        let horizon = curves[0].len();
        let mut column = Vec::with_capacity(curves.len());
        for t in 0..horizon {
            column.clear();
            column.extend(curves.iter().map(|c| c[t]));
            rows.push(AnytimeRow {
                arms,
                experts,
                kind,
                delta,
                series: name.clone(),
                t: t + 1,
                mean: stats::mean(&column),
                std: stats::std_dev(&column),
            });
        }
    }
    cross_rows.sort_by(|a, b| {
        (a.arms, a.experts, a.kind as u8)
            .cmp(&(b.arms, b.experts, b.kind as u8))
            .then(a.delta.total_cmp(&b.delta))
            .then((a.run, a.algorithm).cmp(&(b.run, b.algorithm)))
    });
    Ok((rows, cross_rows))
}

/// Final normalised weights of meta-CMAB and EXP4.P against each expert's
/// hindsight performance.
pub fn run_weight_analysis(config: &ExperimentConfig, jobs: usize) -> Result<Vec<WeightRow>> {
    let nested = map_cells(config, jobs, |c| {
        let inputs = EpisodeInputs::prepare(config, c.kind, c.key)?;
        let mut cmab = None;
        let mut exp4p = None;
        let mut reference = None;
        for &alg in &config.algorithms {
            let slot = match alg {
                Algorithm::MetaCmab => &mut cmab,
                Algorithm::Exp4p => &mut exp4p,
                _ => continue,
            };
            let rec = inputs.run(alg, config)?;
            *slot = rec.weights.clone();
            reference.get_or_insert(rec);
        }
        let rec = reference.ok_or_else(|| invalid("weight analysis needs metacmab or exp4p"))?;
        let scaled = rec.expert_scaled_rewards()?;
        let baseline = rec.random_baseline()?;
        let best = rec.best_expert();
        let snap = inputs.snapshot();
        Ok((0..inputs.num_experts())
            .map(|n| WeightRow {
                arms: c.key.arms,
                experts: c.key.experts,
                kind: c.kind,
                delta: c.key.delta,
                run: c.key.run,
                expert: n,
                achieved_distance: snap.achieved[n],
                expected_reward: scaled[n],
                random_baseline: baseline,
                above_random: scaled[n] > baseline,
                is_best: best == Some(n),
                metacmab_weight: cmab.as_ref().map(|w| w[n]),
                exp4p_weight: exp4p.as_ref().map(|w| w[n]),
            })
            .collect::<Vec<_>>())
    })?;
    Ok(nested.into_iter().flatten().collect())
}

/// Random bandit pairs with their scaled distance and value PCC. Pair 0 is a
/// bandit against itself and pair 1 against its inverse; the rest rotate a
/// random bandit with mean 0 or π and a uniform concentration.
pub fn run_distance_pcc(config: &ExperimentConfig, jobs: usize) -> Result<Vec<PccRow>> {
    if config.pairs < 2 {
        return Err(invalid("need at least two pairs for the anchors"));
    }
    let arms = *config.arms.first().ok_or_else(|| invalid("no arm count given"))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| invalid(format!("thread pool: {e}")))?;
    pool.install(|| {
        (0..config.pairs)
            .into_par_iter()
            .map(|pair| {
                let mut rng = stream(config.seed, &[arms as u64, pair as u64], roles::PAIRS);
                let base = PerlinBandit::sample(arms, DEFAULT_GRID_SIDE, &mut rng)?;
                let (relation, mean, rho, other) = match pair {
                    0 => ("self", 0.0, 1.0, base.clone()),
                    1 => ("inverse", PI, 1.0, base.inverted()),
                    _ => {
                        let mean = if rng.random::<bool>() { PI } else { 0.0 };
                        let rho = rng.random::<f64>().max(f64::MIN_POSITIVE);
                        ("rotated", mean, rho, rotate_bandit(&base, mean, rho, &mut rng)?)
                    }
                };
                let ctx = sample_contexts(DEFAULT_DISTANCE_SAMPLES, &mut rng);
                Ok(PccRow {
                    pair,
                    relation: relation.to_string(),
                    rotation_mean: mean,
                    concentration: rho,
                    distance: scaled_distance_on(&base, &other, &ctx)?,
                    pcc: value_pcc_on(&base, &other, &ctx)?,
                })
            })
            .collect()
    })
}
