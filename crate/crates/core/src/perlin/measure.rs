//! Monte-Carlo distance and correlation between Perlin bandits.

use rand::Rng;

use super::bandit::PerlinBandit;
use super::grid::{landscape_value, Context};
use crate::error::{invalid, numeric, Result};
use crate::stats;

/// Default number of shared contexts used by distance estimates.
pub const DEFAULT_DISTANCE_SAMPLES: usize = 1024;

pub fn sample_contexts<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Context> {
    (0..n).map(|_| Context::sample(rng)).collect()
}

/// Landscape values of every arm on `contexts`, arm-major.
fn value_table(b: &PerlinBandit, contexts: &[Context]) -> Vec<Vec<f64>> {
    b.arms()
        .iter()
        .map(|g| contexts.iter().map(|x| landscape_value(g, x)).collect())
        .collect()
}

fn mean_sq_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let k = a.len() as f64;
    let n = a[0].len() as f64;
    let total: f64 = a
        .iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y).powi(2)).sum::<f64>())
        .sum();
    total / (k * n)
}

fn check_pair(a: &PerlinBandit, b: &PerlinBandit, contexts: &[Context]) -> Result<()> {
    if a.num_arms() != b.num_arms() {
        return Err(invalid(format!(
            "arm count mismatch: {} vs {}",
            a.num_arms(),
            b.num_arms()
        )));
    }
    if contexts.is_empty() {
        return Err(invalid("distance needs at least one context"));
    }
    Ok(())
}

/// Mean over `contexts` of `(1/K) Σ_k (f_k^a(x) - f_k^b(x))^2`.
pub fn distance_on(a: &PerlinBandit, b: &PerlinBandit, contexts: &[Context]) -> Result<f64> {
    check_pair(a, b, contexts)?;
    Ok(mean_sq_diff(&value_table(a, contexts), &value_table(b, contexts)))
}

pub fn bandit_distance<R: Rng + ?Sized>(
    a: &PerlinBandit,
    b: &PerlinBandit,
    n_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if n_samples == 0 {
        return Err(invalid("n_samples must be >= 1"));
    }
    distance_on(a, b, &sample_contexts(n_samples, rng))
}

/// Distance from a fixed reference bandit, normalised by the distance to its
/// exact inverse, evaluated repeatedly on one context sample.
#[derive(Debug, Clone)]
pub struct DistanceProbe {
    contexts: Vec<Context>,
    reference: Vec<Vec<f64>>,
    denominator: f64,
}

impl DistanceProbe {
    pub fn new(reference: &PerlinBandit, contexts: Vec<Context>) -> Result<Self> {
        if contexts.is_empty() {
            return Err(invalid("distance needs at least one context"));
        }
        let table = value_table(reference, &contexts);
        let denominator = mean_sq_diff(&table, &value_table(&reference.inverted(), &contexts));
        if denominator <= 0.0 || !denominator.is_finite() {
            return Err(numeric("reference landscape is flat on the context sample"));
        }
        Ok(Self {
            contexts,
            reference: table,
            denominator,
        })
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn scaled_distance(&self, other: &PerlinBandit) -> Result<f64> {
        if other.num_arms() != self.reference.len() {
            return Err(invalid(format!(
                "arm count mismatch: {} vs {}",
                self.reference.len(),
                other.num_arms()
            )));
        }
        Ok(mean_sq_diff(&self.reference, &value_table(other, &self.contexts)) / self.denominator)
    }
}

pub fn scaled_distance_on(a: &PerlinBandit, b: &PerlinBandit, contexts: &[Context]) -> Result<f64> {
    check_pair(a, b, contexts)?;
    DistanceProbe::new(a, contexts.to_vec())?.scaled_distance(b)
}

/// `d(a,b) / d(a, invert(a))` on one shared sample of `n_samples` contexts.
pub fn scaled_distance<R: Rng + ?Sized>(
    a: &PerlinBandit,
    b: &PerlinBandit,
    n_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if n_samples == 0 {
        return Err(invalid("n_samples must be >= 1"));
    }
    scaled_distance_on(a, b, &sample_contexts(n_samples, rng))
}

/// Pearson correlation of the pooled landscape values of two bandits.
pub fn value_pcc_on(a: &PerlinBandit, b: &PerlinBandit, contexts: &[Context]) -> Result<f64> {
    check_pair(a, b, contexts)?;
    let xs: Vec<f64> = value_table(a, contexts).into_iter().flatten().collect();
    let ys: Vec<f64> = value_table(b, contexts).into_iter().flatten().collect();
    stats::pearson(&xs, &ys)
}

pub fn value_pcc<R: Rng + ?Sized>(a: &PerlinBandit, b: &PerlinBandit, n_samples: usize, rng: &mut R) -> Result<f64> {
    if n_samples == 0 {
        return Err(invalid("n_samples must be >= 1"));
    }
    value_pcc_on(a, b, &sample_contexts(n_samples, rng))
}
