//! Per-arm RBF kernel ridge regression with an incrementally maintained
//! inverse, used both as a KernelUCB learner and as a plain regressor.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, numeric, Result};
use crate::perlin::{Context, PerlinBandit};
use crate::stats::{self, argmax_random_tie};

/// Kernel and exploration hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    /// RBF length-scale.
    pub length_scale: f64,
    /// Ridge regulariser added to the kernel diagonal.
    pub lambda: f64,
    /// Multiplier on the posterior standard deviation during UCB training.
    pub exploration: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self {
            length_scale: 0.2,
            lambda: 1.0,
            exploration: 1.0,
        }
    }
}

impl KernelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.length_scale > 0.0) || !(self.lambda > 0.0) || !(self.exploration >= 0.0) {
            return Err(invalid(format!("invalid kernel parameters {self:?}")));
        }
        Ok(())
    }

    fn kernel(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let d2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
        (-d2 / (2.0 * self.length_scale * self.length_scale)).exp()
    }
}

/// How an expert gathers its prior experience.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingBackend {
    /// Per-arm kernel UCB exploration on the prior bandit.
    KernelUcb,
    /// Round-robin arms on uniform contexts, then the same ridge fit.
    Regression,
}

impl std::str::FromStr for TrainingBackend {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kernel_ucb" | "kernel-ucb" | "kernelucb" => Ok(Self::KernelUcb),
            "regression" => Ok(Self::Regression),
            other => Err(invalid(format!("unknown training backend '{other}'"))),
        }
    }
}

/// Kernel ridge model of one arm.
///
/// Keeps `(K + λI)^-1` and the dual weights `(K + λI)^-1 y` so that adding a
/// point costs O(n^2).
#[derive(Debug, Clone, Default)]
pub struct ArmModel {
    points: Vec<[f64; 2]>,
    inverse: Vec<f64>,
    weights: Vec<f64>,
}

impl ArmModel {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn kernel_row(&self, params: &KernelParams, x: [f64; 2], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.points.iter().map(|&p| params.kernel(p, x)));
    }

    /// `(K + λI)^-1 k` for a kernel row `k`.
    fn solve_into(&self, k: &[f64], out: &mut Vec<f64>) {
        let n = self.len();
        out.clear();
        out.extend((0..n).map(|i| stats::dot(&self.inverse[i * n..(i + 1) * n], k)));
    }

    /// Posterior mean at `x` (0 with no data).
    pub fn mean(&self, params: &KernelParams, x: [f64; 2]) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, w)| w * params.kernel(p, x))
            .sum()
    }

    /// Appends an observation given its precomputed kernel row and solve.
    fn push_with(&mut self, params: &KernelParams, x: [f64; 2], y: f64, row: &[f64], solved: &[f64]) -> Result<()> {
        let n = self.len();
        let schur = 1.0 + params.lambda - stats::dot(row, solved);
        if !(schur > 0.0) || !schur.is_finite() {
            return Err(numeric(format!("kernel system became singular (schur {schur})")));
        }
        let residual = (y - stats::dot(row, &self.weights)) / schur;

        let m = n + 1;
        let mut inverse = vec![0.0; m * m];
        for i in 0..n {
            let ui = solved[i] / schur;
            let src = &self.inverse[i * n..(i + 1) * n];
            let dst = &mut inverse[i * m..i * m + n];
            for j in 0..n {
                dst[j] = src[j] + ui * solved[j];
            }
            inverse[i * m + n] = -ui;
            inverse[n * m + i] = -ui;
        }
        inverse[n * m + n] = 1.0 / schur;
        self.inverse = inverse;

        for (w, u) in self.weights.iter_mut().zip(solved) {
            *w -= u * residual;
        }
        self.weights.push(residual);
        self.points.push(x);
        Ok(())
    }

    pub fn push(&mut self, params: &KernelParams, x: [f64; 2], y: f64) -> Result<()> {
        let mut row = Vec::new();
        let mut solved = Vec::new();
        self.kernel_row(params, x, &mut row);
        self.solve_into(&row, &mut solved);
        self.push_with(params, x, y, &row, &solved)
    }

    #[cfg(test)]
    pub(crate) fn dual_weights(&self) -> &[f64] {
        &self.weights
    }
}

/// One kernel ridge model per arm; the learned value estimator of an expert.
#[derive(Debug, Clone)]
pub struct KernelEstimator {
    params: KernelParams,
    arms: Vec<ArmModel>,
}

impl KernelEstimator {
    pub fn new(num_arms: usize, params: KernelParams) -> Result<Self> {
        params.validate()?;
        if num_arms == 0 {
            return Err(invalid("estimator needs at least one arm"));
        }
        Ok(Self {
            params,
            arms: vec![ArmModel::default(); num_arms],
        })
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn arm_model(&self, k: usize) -> &ArmModel {
        &self.arms[k]
    }

    /// Posterior means clamped to `[0,1]`.
    pub fn predict_into(&self, x: &Context, out: &mut [f64]) {
        let c = x.coords();
        for (o, arm) in out.iter_mut().zip(&self.arms) {
            *o = arm.mean(&self.params, c).clamp(0.0, 1.0);
        }
    }

    pub fn predict(&self, x: &Context) -> Vec<f64> {
        let mut out = vec![0.0; self.arms.len()];
        self.predict_into(x, &mut out);
        out
    }

    pub fn observe(&mut self, k: usize, x: &Context, reward: f64) -> Result<()> {
        let params = self.params;
        let arm = self
            .arms
            .get_mut(k)
            .ok_or_else(|| invalid(format!("arm {k} out of range")))?;
        arm.push(&params, x.coords(), reward)
    }

    /// Trains on `steps` interactions with `prior`.
    pub fn train<R: Rng + ?Sized>(
        prior: &PerlinBandit,
        steps: usize,
        backend: TrainingBackend,
        params: KernelParams,
        rng: &mut R,
    ) -> Result<Self> {
        let mut est = Self::new(prior.num_arms(), params)?;
        match backend {
            TrainingBackend::Regression => {
                for t in 0..steps {
                    let x = Context::sample(rng);
                    let k = t % prior.num_arms();
                    let r = prior.pull(k, &x, rng)?;
                    est.observe(k, &x, r)?;
                }
            }
            TrainingBackend::KernelUcb => est.train_ucb(prior, steps, rng)?,
        }
        Ok(est)
    }

    fn train_ucb<R: Rng + ?Sized>(&mut self, prior: &PerlinBandit, steps: usize, rng: &mut R) -> Result<()> {
        let params = self.params;
        let k_arms = self.arms.len();
        let mut rows = vec![Vec::new(); k_arms];
        let mut solves = vec![Vec::new(); k_arms];
        let mut scores = vec![0.0; k_arms];
        for _ in 0..steps {
            let x = Context::sample(rng);
            let c = x.coords();
            for (k, arm) in self.arms.iter().enumerate() {
                arm.kernel_row(&params, c, &mut rows[k]);
                arm.solve_into(&rows[k], &mut solves[k]);
                let mu = stats::dot(&rows[k], &arm.weights);
                let var = (1.0 - stats::dot(&rows[k], &solves[k])).max(0.0);
                scores[k] = mu + params.exploration * var.sqrt();
            }
            let k = argmax_random_tie(&scores, rng);
            let r = prior.pull(k, &x, rng)?;
            self.arms[k].push_with(&params, c, r, &rows[k], &solves[k])?;
        }
        Ok(())
    }
}
