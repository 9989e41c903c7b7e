//! EXP4.P with a confidence prior on the expert weights.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::RngCore;

use super::{check_reward, check_shapes, Policy};
use crate::error::{invalid, numeric, Result};
use crate::experts::{AdviceMatrix, ConfidenceMatrix};

pub const DEFAULT_DELTA: f64 = 0.1;

#[derive(Debug, Clone)]
struct Pending {
    arm: usize,
    probs: Vec<f64>,
    normalized: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Exp4p {
    w: Vec<f64>,
    gamma: f64,
    bonus: f64,
    prior_strength: f64,
    num_arms: usize,
    pending: Option<Pending>,
}

/// Each expert's advice row scaled to sum 1; an all-zero row becomes uniform.
fn normalize_rows(advice: &AdviceMatrix) -> Vec<f64> {
    let k = advice.num_arms();
    let mut out = Vec::with_capacity(advice.num_experts() * k);
    for row in advice.rows() {
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            out.extend(row.iter().map(|v| v / s));
        } else {
            out.extend(std::iter::repeat_n(1.0 / k as f64, k));
        }
    }
    out
}

impl Exp4p {
    /// `num_experts` includes any appended random expert. `horizon` and
    /// `num_arms` fix the learning rate `sqrt(ln N / (K T))`.
    pub fn new(num_experts: usize, num_arms: usize, horizon: usize, delta: f64, prior_strength: f64) -> Result<Self> {
        if num_experts < 2 {
            return Err(invalid("EXP4.P needs at least two experts"));
        }
        if num_arms == 0 || horizon == 0 {
            return Err(invalid("EXP4.P needs K >= 1 and T >= 1"));
        }
        if !(delta > 0.0 && delta < 1.0) || !(prior_strength >= 0.0) {
            return Err(invalid(format!(
                "bad EXP4.P parameters delta={delta} M={prior_strength}"
            )));
        }
        let n = num_experts as f64;
        let kt = (num_arms * horizon) as f64;
        Ok(Self {
            w: vec![1.0; num_experts],
            gamma: (n.ln() / kt).sqrt(),
            bonus: ((n / delta).ln() / kt).sqrt(),
            prior_strength,
            num_arms,
            pending: None,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.w
    }

    pub fn set_log_weights(&mut self, w: Vec<f64>) -> Result<()> {
        if w.len() != self.w.len() || w.iter().any(|v| !v.is_finite()) {
            return Err(invalid("log-weights must be finite and match the expert count"));
        }
        self.w = w;
        Ok(())
    }

    /// Per-arm probabilities and the row-normalised advice they came from.
    pub fn probabilities(
        &self,
        advice: &AdviceMatrix,
        confidence: Option<&ConfidenceMatrix>,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        check_shapes(advice, confidence)?;
        let (n, k) = (advice.num_experts(), advice.num_arms());
        if n != self.w.len() || k != self.num_arms {
            return Err(invalid(format!(
                "EXP4.P built for {}x{}, got {n}x{k} advice",
                self.w.len(),
                self.num_arms
            )));
        }
        if self.w.iter().any(|v| !v.is_finite()) {
            return Err(numeric("EXP4.P weights are not finite"));
        }
        let xi = normalize_rows(advice);
        let mut logits = vec![0.0; n];
        let mut probs = vec![0.0; k];
        for (arm, p) in probs.iter_mut().enumerate() {
            for (e, l) in logits.iter_mut().enumerate() {
                let prior = confidence.map_or(0.0, |c| 0.5 * self.gamma * self.prior_strength * c.get(e, arm));
                *l = prior + self.w[e];
            }
            let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = logits.iter().map(|l| (l - top).exp()).sum();
            *p = (0..n).map(|e| (logits[e] - top).exp() / z * xi[e * k + arm]).sum();
        }
        let total: f64 = probs.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(numeric("EXP4.P arm probabilities vanish"));
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Ok((probs, xi))
    }

    /// Samples an arm and returns it with the per-arm probabilities.
    pub fn select_with_probs(
        &mut self,
        advice: &AdviceMatrix,
        confidence: Option<&ConfidenceMatrix>,
        rng: &mut dyn RngCore,
    ) -> Result<(usize, Vec<f64>)> {
        let (probs, normalized) = self.probabilities(advice, confidence)?;
        let arm = WeightedIndex::new(&probs)
            .map_err(|e| numeric(format!("EXP4.P sampling: {e}")))?
            .sample(rng);
        self.pending = Some(Pending {
            arm,
            probs: probs.clone(),
            normalized,
        });
        Ok((arm, probs))
    }

    /// Weight update from explicit normalised advice and probabilities.
    pub fn update_with(&mut self, normalized: &[f64], probs: &[f64], arm: usize, reward: f64) -> Result<()> {
        check_reward(reward)?;
        let k = self.num_arms;
        if probs.len() != k || normalized.len() != k * self.w.len() || arm >= k {
            return Err(invalid("EXP4.P update shapes do not match"));
        }
        if !(probs[arm] > 0.0) {
            return Err(numeric(format!("chosen arm {arm} has zero probability")));
        }
        for (e, w) in self.w.iter_mut().enumerate() {
            let row = &normalized[e * k..(e + 1) * k];
            let y_hat = row[arm] * reward / probs[arm];
            let mut v_hat = 0.0;
            for (x, &p) in row.iter().zip(probs) {
                if *x > 0.0 {
                    if !(p > 0.0) {
                        return Err(numeric("zero probability on an advised arm"));
                    }
                    v_hat += x / p;
                }
            }
            *w += 0.5 * self.gamma * (y_hat + v_hat * self.bonus);
        }
        Ok(())
    }

    /// Softmax of the weights of the first `real` experts, summing to 1.
    pub fn normalized_weights(&self, real: usize) -> Vec<f64> {
        let w = &self.w[..real.min(self.w.len())];
        let top = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = w.iter().map(|v| (v - top).exp()).collect();
        let z: f64 = e.iter().sum();
        e.into_iter().map(|v| v / z).collect()
    }
}

impl Policy for Exp4p {
    fn name(&self) -> &'static str {
        "exp4p"
    }

    fn select(
        &mut self,
        advice: &AdviceMatrix,
        confidence: Option<&ConfidenceMatrix>,
        rng: &mut dyn RngCore,
    ) -> Result<usize> {
        self.select_with_probs(advice, confidence, rng).map(|(a, _)| a)
    }

    fn update(&mut self, _: &AdviceMatrix, _: Option<&ConfidenceMatrix>, arm: usize, reward: f64) -> Result<()> {
        let p = self
            .pending
            .take()
            .ok_or_else(|| invalid("EXP4.P update without a preceding select"))?;
        if p.arm != arm {
            return Err(invalid(format!("update for arm {arm} but arm {} was selected", p.arm)));
        }
        self.update_with(&p.normalized, &p.probs, arm, reward)
    }

    /// Weights of all experts the policy sees; the harness drops the
    /// trailing random expert and renormalises.
    fn weights_snapshot(&self) -> Option<Vec<f64>> {
        Some(self.normalized_weights(self.w.len()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[&[f64]]) -> AdviceMatrix {
        AdviceMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn symmetric_start() {
        let p = Exp4p::new(2, 2, 100, DEFAULT_DELTA, 100.0).unwrap();
        let (probs, _) = p.probabilities(&m(&[&[1.0, 0.0], &[0.0, 1.0]]), None).unwrap();
        assert!((probs[0] - 0.5).abs() < 1e-15 && (probs[1] - 0.5).abs() < 1e-15);
        assert_eq!(p.normalized_weights(2), vec![0.5, 0.5]);
        assert!((p.gamma() - (2f64.ln() / 200.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn saturated_weight_follows_one_expert() {
        let mut p = Exp4p::new(2, 3, 100, DEFAULT_DELTA, 0.0).unwrap();
        p.set_log_weights(vec![1.0, 1e6]).unwrap();
        let (probs, _) = p
            .probabilities(&m(&[&[1.0, 0.0, 0.0], &[0.2, 0.3, 0.5]]), None)
            .unwrap();
        for (a, b) in probs.iter().zip([0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_advice_gives_uniform_probabilities() {
        let mut p = Exp4p::new(3, 4, 50, DEFAULT_DELTA, 100.0).unwrap();
        p.set_log_weights(vec![1.0, 1.5, 0.5]).unwrap();
        let adv = m(&[&[0.3; 4], &[0.7; 4], &[0.0; 4]]);
        let conf = ConfidenceMatrix::broadcast(&[0.9, 0.1, 0.4], 4).unwrap();
        for c in [None, Some(&conf)] {
            let (probs, _) = p.probabilities(&adv, c).unwrap();
            assert!(probs.iter().all(|q| (q - 0.25).abs() < 1e-12));
        }
    }

    #[test]
    fn probabilities_form_a_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut p = Exp4p::new(5, 4, 200, DEFAULT_DELTA, 100.0).unwrap();
        for _ in 0..200 {
            let rows: Vec<Vec<f64>> = (0..5)
                .map(|_| (0..4).map(|_| rand::Rng::random(&mut rng)).collect())
                .collect();
            let adv = AdviceMatrix::from_rows(&rows).unwrap();
            let conf = ConfidenceMatrix::broadcast(&(0..5).map(|_| rand::Rng::random(&mut rng)).collect::<Vec<_>>(), 4)
                .unwrap();
            let (arm, probs) = p.select_with_probs(&adv, Some(&conf), &mut rng).unwrap();
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(probs.iter().all(|&q| q >= 0.0));
            let r = if rand::Rng::random::<bool>(&mut rng) { 1.0 } else { 0.0 };
            p.update(&adv, Some(&conf), arm, r).unwrap();
        }
        let w = p.normalized_weights(4);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12 && w.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn zero_reward_and_identical_rows() {
        let mut p = Exp4p::new(3, 2, 10, DEFAULT_DELTA, 0.0).unwrap();
        let xi = [0.5, 0.5, 0.5, 0.5, 1.0, 0.0];
        let probs = [0.6, 0.4];
        p.update_with(&xi, &probs, 1, 0.0).unwrap();
        let w = p.log_weights().to_vec();
        assert_eq!(w[0], w[1]);
        // reward 0: only the exploration bonus moves the weights
        let n = 3f64;
        let gamma = (n.ln() / 20.0).sqrt();
        let bonus = ((n / 0.1).ln() / 20.0).sqrt();
        assert!((w[2] - (1.0 + 0.5 * gamma * (1.0 / 0.6) * bonus)).abs() < 1e-12);
    }

    #[test]
    fn single_step_matches_straight_line_formulas() {
        // K=2, N=2 with hand-set inputs, written out term by term.
        let mut p = Exp4p::new(2, 2, 100, 0.1, 0.0).unwrap();
        let xi = [0.25, 0.75, 0.9, 0.1];
        let probs = [0.35, 0.65];
        let (arm, r) = (1usize, 1.0);
        p.update_with(&xi, &probs, arm, r).unwrap();

        let gamma = (2f64.ln() / (2.0 * 100.0)).sqrt();
        let root = ((2.0f64 / 0.1).ln() / (2.0 * 100.0)).sqrt();
        let y0 = 0.75 * 1.0 / 0.65;
        let y1 = 0.1 * 1.0 / 0.65;
        let v0 = 0.25 / 0.35 + 0.75 / 0.65;
        let v1 = 0.9 / 0.35 + 0.1 / 0.65;
        let w0 = 1.0 + gamma / 2.0 * (y0 + v0 * root);
        let w1 = 1.0 + gamma / 2.0 * (y1 + v1 * root);
        assert!((p.log_weights()[0] - w0).abs() < 1e-12);
        assert!((p.log_weights()[1] - w1).abs() < 1e-12);
    }

    #[test]
    fn protocol_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let adv = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let mut p = Exp4p::new(2, 2, 10, DEFAULT_DELTA, 0.0).unwrap();
        assert!(p.update(&adv, None, 0, 1.0).is_err());
        let (arm, _) = p.select_with_probs(&adv, None, &mut rng).unwrap();
        assert!(p.update(&adv, None, 1 - arm, 1.0).is_err());
        assert!(p.update_with(&[1.0, 0.0, 0.0, 1.0], &[1.0, 0.0], 1, 1.0).is_err());
        assert!(p.set_log_weights(vec![f64::NAN, 0.0]).is_err());
        assert!(Exp4p::new(1, 2, 10, DEFAULT_DELTA, 0.0).is_err());
    }
}
