//! Experiment configuration and its flat `key = value` file format.
//!
//! One setting per line; `#` starts a comment. Lists are comma-separated and
//! numbers may be written as fractions (`delta_grid = 0, 1/6, 2/6`).

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experts::{KernelParams, PanelKind, TrainingBackend, TRAIN_STEPS_PER_ARM};
use crate::perlin::DEFAULT_TOLERANCE;
use crate::policy::{Algorithm, PolicyParams, DEFAULT_DELTA, DEFAULT_PRIOR_STRENGTH};

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Which experiment a configuration drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Sweep,
    Ablation,
    Anytime,
    Weights,
    Pcc,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sweep => "sweep",
            Self::Ablation => "ablation",
            Self::Anytime => "anytime",
            Self::Weights => "weights",
            Self::Pcc => "pcc",
        }
    }
}

/// What confidence, if any, the policies receive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceMode {
    None,
    Hindsight,
    /// Hindsight confidence perturbed by Beta noise of the given level.
    Noisy(f64),
}

impl ConfidenceMode {
    pub fn is_some(self) -> bool {
        !matches!(self, Self::None)
    }

    pub fn noise(self) -> f64 {
        match self {
            Self::Noisy(eta) => eta,
            _ => 0.0,
        }
    }
}

impl std::fmt::Display for ConfidenceMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::None => f.write_str("none"),
            Self::Hindsight => f.write_str("hindsight"),
            Self::Noisy(eta) => write!(f, "noisy:{eta}"),
        }
    }
}

impl FromStr for ConfidenceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "none" | "off" => Ok(Self::None),
            "hindsight" | "exact" => Ok(Self::Hindsight),
            _ => {
                let eta = s
                    .strip_prefix("noisy:")
                    .or_else(|| s.strip_prefix("noisy(").and_then(|r| r.strip_suffix(')')))
                    .ok_or_else(|| config_err(format!("unknown confidence mode '{s}'")))?;
                let eta = parse_number(eta)?;
                if !(eta >= 0.0) {
                    return Err(config_err(format!("noise level must be >= 0, got {eta}")));
                }
                Ok(if eta == 0.0 { Self::Hindsight } else { Self::Noisy(eta) })
            }
        }
    }
}

/// Parses a decimal number or a fraction `a/b`.
pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || config_err(format!("'{s}' is not a number"));
    match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            );
            if b == 0.0 {
                return Err(bad());
            }
            Ok(a / b)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

fn parse_list<T>(value: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect()
}

fn parse_count(s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| config_err(format!("'{s}' is not a non-negative integer")))
}

/// The Δ grid `{0, 1/6, …, 1}`.
pub fn default_delta_grid() -> Vec<f64> {
    (0..=6).map(|i| i as f64 / 6.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub arms: Vec<usize>,
    pub experts: Vec<usize>,
    pub kinds: Vec<PanelKind>,
    pub delta_grid: Vec<f64>,
    pub horizon: usize,
    pub steps_per_arm: usize,
    pub runs: usize,
    pub algorithms: Vec<Algorithm>,
    pub confidence: ConfidenceMode,
    pub prior_strength: f64,
    pub exp4p_delta: f64,
    pub ucb_alpha: f64,
    pub ridge: f64,
    pub kernel: KernelParams,
    pub backend: TrainingBackend,
    pub tolerance: f64,
    /// Share of experts kept by the ablation.
    pub fraction: f64,
    /// Bandit pairs drawn by the distance/PCC experiment.
    pub pairs: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Defaults for `experiment`.
    pub fn new(experiment: Experiment) -> Self {
        let mut c = Self {
            experiment,
            arms: vec![4, 32],
            experts: vec![4, 32],
            kinds: vec![PanelKind::Homogeneous],
            delta_grid: default_delta_grid(),
            horizon: 1000,
            steps_per_arm: TRAIN_STEPS_PER_ARM,
            runs: 32,
            algorithms: Algorithm::ALL.to_vec(),
            confidence: ConfidenceMode::None,
            prior_strength: DEFAULT_PRIOR_STRENGTH,
            exp4p_delta: DEFAULT_DELTA,
            ucb_alpha: 1.0,
            ridge: 1.0,
            kernel: KernelParams::default(),
            backend: TrainingBackend::KernelUcb,
            tolerance: DEFAULT_TOLERANCE,
            fraction: 0.5,
            pairs: 500,
            seed: 0,
        };
        match experiment {
            Experiment::Sweep | Experiment::Ablation => {}
            Experiment::Anytime => {
                c.kinds = vec![PanelKind::Homogeneous, PanelKind::Heterogeneous];
                c.delta_grid = vec![0.5];
            }
            Experiment::Weights => {
                c.arms = vec![32];
                c.experts = vec![32];
                c.kinds = vec![PanelKind::Heterogeneous];
                c.delta_grid = vec![0.5];
                c.runs = 100;
                c.algorithms = vec![Algorithm::MetaCmab, Algorithm::Exp4p];
            }
            Experiment::Pcc => {
                c.arms = vec![4];
                c.experts = vec![1];
            }
        }
        c
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "arms" | "k" => self.arms = parse_list(value, parse_count)?,
            "experts" | "n" => self.experts = parse_list(value, parse_count)?,
            "kinds" | "kind" | "config_kind" => self.kinds = parse_list(value, |s| s.parse())?,
            "delta_grid" | "deltas" | "delta" => self.delta_grid = parse_list(value, parse_number)?,
            "horizon" | "t_cdm" => self.horizon = parse_count(value)?,
            "steps_per_arm" => self.steps_per_arm = parse_count(value)?,
            "runs" | "runs_per_cell" => self.runs = parse_count(value)?,
            "algorithms" => self.algorithms = parse_list(value, |s| s.parse())?,
            "confidence" | "confidence_mode" => self.confidence = value.parse()?,
            "prior_strength" | "m" => self.prior_strength = parse_number(value)?,
            "exp4p_delta" => self.exp4p_delta = parse_number(value)?,
            "ucb_alpha" | "alpha_ucb" => self.ucb_alpha = parse_number(value)?,
            "ridge" | "lambda_r" => self.ridge = parse_number(value)?,
            "length_scale" => self.kernel.length_scale = parse_number(value)?,
            "kernel_lambda" => self.kernel.lambda = parse_number(value)?,
            "exploration" | "eta_ucb" => self.kernel.exploration = parse_number(value)?,
            "backend" => self.backend = value.parse()?,
            "tolerance" => self.tolerance = parse_number(value)?,
            "fraction" => self.fraction = parse_number(value)?,
            "pairs" => self.pairs = parse_count(value)?,
            "seed" | "master_seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| config_err(format!("seed '{value}' is not a u64")))?
            }
            other => return Err(config_err(format!("unknown setting '{other}'"))),
        }
        Ok(())
    }

    /// Applies every setting in `text`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {}: expected 'key = value'", i + 1)))?;
            self.set(k, v).map_err(|e| config_err(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, xs: &[usize]| {
            if xs.is_empty() || xs.contains(&0) {
                Err(config_err(format!(
                    "{name} must be a non-empty list of positive counts"
                )))
            } else {
                Ok(())
            }
        };
        positive("arms", &self.arms)?;
        positive("experts", &self.experts)?;
        if self.arms.contains(&1) && self.experiment != Experiment::Pcc {
            return Err(config_err("bandits need at least two arms"));
        }
        if self.kinds.is_empty() || self.algorithms.is_empty() {
            return Err(config_err("kinds and algorithms must be non-empty"));
        }
        if self.delta_grid.is_empty() || self.delta_grid.iter().any(|d| !(0.0..=1.0).contains(d)) {
            return Err(config_err("delta_grid must be a non-empty subset of [0, 1]"));
        }
        for (name, v) in [
            ("horizon", self.horizon),
            ("steps_per_arm", self.steps_per_arm),
            ("runs", self.runs),
        ] {
            if v == 0 {
                return Err(config_err(format!("{name} must be positive")));
            }
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(config_err("fraction must lie in (0, 1]"));
        }
        if !(self.tolerance > 0.0) || !(self.prior_strength >= 0.0) || !(self.ridge > 0.0) || !(self.ucb_alpha >= 0.0) {
            return Err(config_err(
                "tolerance and ridge must be positive; prior strength and ucb_alpha >= 0",
            ));
        }
        if !(self.exp4p_delta > 0.0 && self.exp4p_delta < 1.0) {
            return Err(config_err("exp4p_delta must lie in (0, 1)"));
        }
        self.kernel.validate()?;
        Ok(())
    }

    /// Policy constants for a panel of `num_experts` seen by the policy.
    pub fn policy_params(&self, num_experts: usize, num_arms: usize) -> PolicyParams {
        PolicyParams {
            num_experts,
            num_arms,
            horizon: self.horizon,
            with_confidence: self.confidence.is_some(),
            prior_strength: self.prior_strength,
            delta: self.exp4p_delta,
            ridge: self.ridge,
            ucb_alpha: self.ucb_alpha,
        }
    }
}
