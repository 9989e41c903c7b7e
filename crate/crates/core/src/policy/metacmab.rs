//! Meta contextual bandit: LinUCB over per-arm meta-contexts built from the
//! experts' advice (and confidence).

use rand::RngCore;

use super::{check_reward, check_shapes, Policy};
use crate::error::{invalid, numeric, Result};
use crate::experts::{AdviceMatrix, ConfidenceMatrix};
use crate::stats::{argmax_random_tie, dot};

/// Length of a meta-context for `n` experts.
pub fn meta_context_dim(num_experts: usize, with_confidence: bool) -> usize {
    if with_confidence {
        2 * num_experts + 1
    } else {
        num_experts + 1
    }
}

/// Meta-context of arm `k`: `(ξ¹, c¹, …, ξᴺ, cᴺ, 1)`, or `(ξ¹, …, ξᴺ, 1)`
/// without confidence.
pub fn build_meta_context(advice: &AdviceMatrix, confidence: Option<&ConfidenceMatrix>, k: usize, out: &mut Vec<f64>) {
    out.clear();
    for n in 0..advice.num_experts() {
        out.push(advice.get(n, k));
        if let Some(c) = confidence {
            out.push(c.get(n, k));
        }
    }
    out.push(1.0);
}

#[derive(Debug, Clone)]
pub struct MetaCmab {
    dim: usize,
    num_experts: usize,
    with_confidence: bool,
    alpha: f64,
    /// Ridge design matrix, row-major.
    a: Vec<f64>,
    /// Its inverse, kept by Sherman-Morrison updates.
    a_inv: Vec<f64>,
    b: Vec<f64>,
    contexts: Vec<Vec<f64>>,
    pending: Option<usize>,
    scratch: Vec<f64>,
}

impl MetaCmab {
    pub fn new(num_experts: usize, with_confidence: bool, ridge: f64, alpha: f64) -> Result<Self> {
        if num_experts == 0 {
            return Err(invalid("meta-CMAB needs at least one expert"));
        }
        let dim = meta_context_dim(num_experts, with_confidence);
        let mut s = Self::with_prior_diagonal(&vec![ridge; dim], alpha)?;
        s.num_experts = num_experts;
        s.with_confidence = with_confidence;
        Ok(s)
    }

    /// LinUCB on raw `D`-dimensional contexts with prior `A = diag(prior)`.
    pub fn with_prior_diagonal(prior: &[f64], alpha: f64) -> Result<Self> {
        let dim = prior.len();
        if dim == 0 || prior.iter().any(|p| !(*p > 0.0)) {
            return Err(invalid("prior diagonal must be non-empty and positive"));
        }
        if !(alpha >= 0.0) {
            return Err(invalid(format!("exploration scale must be >= 0, got {alpha}")));
        }
        let mut a = vec![0.0; dim * dim];
        let mut a_inv = vec![0.0; dim * dim];
        for (i, &p) in prior.iter().enumerate() {
            a[i * dim + i] = p;
            a_inv[i * dim + i] = 1.0 / p;
        }
        Ok(Self {
            dim,
            num_experts: dim.saturating_sub(1),
            with_confidence: false,
            alpha,
            a,
            a_inv,
            b: vec![0.0; dim],
            contexts: Vec::new(),
            pending: None,
            scratch: vec![0.0; dim],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn design_matrix(&self) -> &[f64] {
        &self.a
    }

    pub fn inverse_design(&self) -> &[f64] {
        &self.a_inv
    }

    /// Ridge estimate `A⁻¹ b`.
    pub fn theta(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| dot(&self.a_inv[i * self.dim..(i + 1) * self.dim], &self.b))
            .collect()
    }

    fn check_dim(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim {
            return Err(invalid(format!(
                "meta-context has length {}, expected {}",
                y.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// `θ·y + α sqrt(yᵀ A⁻¹ y)` for each meta-context.
    pub fn scores(&mut self, contexts: &[Vec<f64>]) -> Result<Vec<f64>> {
        let theta = self.theta();
        let d = self.dim;
        let mut out = Vec::with_capacity(contexts.len());
        for y in contexts {
            self.check_dim(y)?;
            for i in 0..d {
                self.scratch[i] = dot(&self.a_inv[i * d..(i + 1) * d], y);
            }
            let var = dot(y, &self.scratch);
            if !(var >= -1e-12) || !var.is_finite() {
                return Err(numeric(format!("meta-CMAB variance {var} is invalid")));
            }
            out.push(dot(&theta, y) + self.alpha * var.max(0.0).sqrt());
        }
        Ok(out)
    }

    pub fn select_context(&mut self, contexts: &[Vec<f64>], rng: &mut dyn RngCore) -> Result<usize> {
        if contexts.is_empty() {
            return Err(invalid("no meta-contexts to choose from"));
        }
        Ok(argmax_random_tie(&self.scores(contexts)?, rng))
    }

    /// `A += y yᵀ`, `b += r y`.
    pub fn update_context(&mut self, y: &[f64], reward: f64) -> Result<()> {
        check_reward(reward)?;
        self.check_dim(y)?;
        let d = self.dim;
        for i in 0..d {
            self.scratch[i] = dot(&self.a_inv[i * d..(i + 1) * d], y);
        }
        let denom = 1.0 + dot(y, &self.scratch);
        if !(denom > 0.0) || !denom.is_finite() {
            return Err(numeric("Sherman-Morrison denominator is not positive"));
        }
        for i in 0..d {
            for j in 0..d {
                self.a[i * d + j] += y[i] * y[j];
                self.a_inv[i * d + j] -= self.scratch[i] * self.scratch[j] / denom;
            }
            self.b[i] += reward * y[i];
        }
        Ok(())
    }

    /// Advice coefficients of θ divided by the sum of their magnitudes.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let theta = self.theta();
        let stride = if self.with_confidence { 2 } else { 1 };
        let w: Vec<f64> = (0..self.num_experts).map(|n| theta[n * stride]).collect();
        let z: f64 = w.iter().map(|v| v.abs()).sum();
        if z > 0.0 {
            w.into_iter().map(|v| v / z).collect()
        } else {
            w
        }
    }
}

impl Policy for MetaCmab {
    fn name(&self) -> &'static str {
        "metacmab"
    }

    fn select(
        &mut self,
        advice: &AdviceMatrix,
        confidence: Option<&ConfidenceMatrix>,
        rng: &mut dyn RngCore,
    ) -> Result<usize> {
        check_shapes(advice, confidence)?;
        if confidence.is_some() != self.with_confidence || advice.num_experts() != self.num_experts {
            return Err(invalid(
                "advice/confidence layout differs from the one meta-CMAB was built for",
            ));
        }
        let mut contexts = std::mem::take(&mut self.contexts);
        contexts.resize_with(advice.num_arms(), Vec::new);
        for (k, y) in contexts.iter_mut().enumerate() {
            build_meta_context(advice, confidence, k, y);
        }
        let arm = self.select_context(&contexts, rng);
        self.contexts = contexts;
        let arm = arm?;
        self.pending = Some(arm);
        Ok(arm)
    }

    fn update(&mut self, _: &AdviceMatrix, _: Option<&ConfidenceMatrix>, arm: usize, reward: f64) -> Result<()> {
        let chosen = self
            .pending
            .take()
            .ok_or_else(|| invalid("meta-CMAB update without a preceding select"))?;
        if chosen != arm {
            return Err(invalid(format!("update for arm {arm} but arm {chosen} was selected")));
        }
        let y = std::mem::take(&mut self.contexts[arm]);
        let res = self.update_context(&y, reward);
        self.contexts[arm] = y;
        res
    }

    fn weights_snapshot(&self) -> Option<Vec<f64>> {
        Some(self.normalized_weights())
    }
}
