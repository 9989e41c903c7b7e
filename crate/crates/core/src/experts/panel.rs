//! Expert panels at controlled distances from the truth.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::confidence::{expert_expected_reward_on, hindsight_confidence_on, noisy_confidence};
use super::expert::{Expert, TRAIN_STEPS_PER_ARM};
use super::kernel::{KernelParams, TrainingBackend};
use super::matrix::{AdviceMatrix, ConfidenceMatrix};
use crate::error::{invalid, Error, Result};
use crate::perlin::{calibrate_bias, Context, PerlinBandit, DEFAULT_TOLERANCE};

/// Attempts per expert before a calibration failure is reported.
pub const CALIBRATION_ATTEMPTS: usize = 4;

/// How the per-expert target distances are laid out around Δ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelKind {
    Homogeneous,
    Heterogeneous,
    Polarized,
}

impl PanelKind {
    pub const ALL: [PanelKind; 3] = [Self::Homogeneous, Self::Heterogeneous, Self::Polarized];

    pub fn name(self) -> &'static str {
        match self {
            Self::Homogeneous => "homogeneous",
            Self::Heterogeneous => "heterogeneous",
            Self::Polarized => "polarized",
        }
    }
}

impl std::fmt::Display for PanelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PanelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "homogeneous" | "hom" => Ok(Self::Homogeneous),
            "heterogeneous" | "het" => Ok(Self::Heterogeneous),
            "polarized" | "polarised" | "pol" => Ok(Self::Polarized),
            other => Err(invalid(format!("unknown panel kind '{other}'"))),
        }
    }
}

/// Half-width of the distance window around `delta`.
pub fn window_half_width(delta: f64) -> f64 {
    delta.min(1.0 - delta)
}

/// Per-expert target distances for a panel of `n` experts.
pub fn target_distances(kind: PanelKind, delta: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("a panel needs at least one expert"));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(invalid(format!("delta {delta} outside [0, 1]")));
    }
    let w = window_half_width(delta);
    Ok(match kind {
        PanelKind::Homogeneous => vec![delta; n],
        PanelKind::Heterogeneous if n == 1 => vec![delta],
        PanelKind::Heterogeneous => (0..n)
            .map(|i| (delta - w + 2.0 * w * i as f64 / (n - 1) as f64).clamp(0.0, 1.0))
            .collect(),
        PanelKind::Polarized => {
            let near = n.div_ceil(2);
            (0..n)
                .map(|i| if i < near { delta - w } else { delta + w }.clamp(0.0, 1.0))
                .collect()
        }
    })
}

/// Everything needed to build a panel besides the truth and the RNG.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelSpec {
    pub kind: PanelKind,
    pub delta: f64,
    pub num_experts: usize,
    pub tolerance: f64,
    pub steps_per_arm: usize,
    pub backend: TrainingBackend,
    pub kernel: KernelParams,
}

impl PanelSpec {
    pub fn new(kind: PanelKind, delta: f64, num_experts: usize) -> Self {
        Self {
            kind,
            delta,
            num_experts,
            tolerance: DEFAULT_TOLERANCE,
            steps_per_arm: TRAIN_STEPS_PER_ARM,
            backend: TrainingBackend::KernelUcb,
            kernel: KernelParams::default(),
        }
    }
}

/// N experts sharing K arms, with optional per-expert confidence.
#[derive(Debug, Clone)]
pub struct ExpertPanel {
    experts: Vec<Expert>,
    confidences: Option<Vec<f64>>,
}

/// Builds a panel: one independent biased prior per expert, calibrated to its
/// target distance from `truth`, then trained.
pub fn make_panel<R: Rng + ?Sized>(spec: &PanelSpec, truth: &PerlinBandit, rng: &mut R) -> Result<ExpertPanel> {
    spec.kernel.validate()?;
    let targets = target_distances(spec.kind, spec.delta, spec.num_experts)?;
    let steps = spec.steps_per_arm * truth.num_arms();
    let mut experts = Vec::with_capacity(targets.len());
    for &target in &targets {
        let calibrated = calibrate_with_retries(truth, target, spec.tolerance, rng)?;
        let mut expert = Expert::train(calibrated.bandit, steps, spec.backend, spec.kernel, rng)?;
        expert.target_distance = Some(target);
        expert.achieved_distance = Some(calibrated.achieved);
        experts.push(expert);
    }
    ExpertPanel::new(experts)
}

fn calibrate_with_retries<R: Rng + ?Sized>(
    truth: &PerlinBandit,
    target: f64,
    tol: f64,
    rng: &mut R,
) -> Result<crate::perlin::CalibratedBias> {
    let mut last = None;
    for _ in 0..CALIBRATION_ATTEMPTS {
        match calibrate_bias(truth, target, tol, rng) {
            Ok(c) => return Ok(c),
            Err(e @ Error::Calibration { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

impl ExpertPanel {
    pub fn new(experts: Vec<Expert>) -> Result<Self> {
        let first = experts
            .first()
            .ok_or_else(|| invalid("a panel needs at least one expert"))?;
        let k = first.num_arms();
        if experts.iter().any(|e| e.num_arms() != k) {
            return Err(invalid("all experts in a panel must share the arm count"));
        }
        Ok(Self {
            experts,
            confidences: None,
        })
    }

    pub fn len(&self) -> usize {
        self.experts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experts.is_empty()
    }

    pub fn num_arms(&self) -> usize {
        self.experts[0].num_arms()
    }

    pub fn experts(&self) -> &[Expert] {
        &self.experts
    }

    pub fn confidences(&self) -> Option<&[f64]> {
        self.confidences.as_deref()
    }

    pub fn set_confidences(&mut self, confidences: Vec<f64>) -> Result<()> {
        if confidences.len() != self.experts.len() {
            return Err(invalid(format!(
                "{} confidences for {} experts",
                confidences.len(),
                self.experts.len()
            )));
        }
        if confidences.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(invalid("confidence outside [0, 1]"));
        }
        self.confidences = Some(confidences);
        Ok(())
    }

    /// Attaches hindsight confidence computed on `contexts`, optionally
    /// perturbed by Beta noise of level `eta`.
    pub fn attach_confidence<R: Rng + ?Sized>(
        &mut self,
        truth: &PerlinBandit,
        contexts: &[Context],
        eta: f64,
        rng: &mut R,
    ) -> Result<()> {
        let mut cs = Vec::with_capacity(self.experts.len());
        for e in &self.experts {
            let c = hindsight_confidence_on(e, truth, contexts)?;
            cs.push(noisy_confidence(c, eta, rng)?);
        }
        self.set_confidences(cs)
    }

    /// Panel with `extra` appended; a random expert gets confidence 0.5.
    pub fn with_expert(&self, extra: Expert) -> Result<Self> {
        let mut experts = self.experts.clone();
        let is_random = extra.is_random();
        experts.push(extra);
        let mut out = Self::new(experts)?;
        if let Some(cs) = &self.confidences {
            let mut cs = cs.clone();
            cs.push(if is_random { 0.5 } else { f64::NAN });
            if cs.iter().any(|c| c.is_nan()) {
                return Err(invalid("appended expert needs a confidence"));
            }
            out.confidences = Some(cs);
        }
        Ok(out)
    }

    /// The panel plus one synthetic random expert.
    pub fn with_random_expert(&self) -> Self {
        self.with_expert(Expert::random(self.num_arms()))
            .expect("random expert shares the arm count")
    }

    pub fn advise_into(&self, x: &Context, rng: &mut dyn RngCore, out: &mut AdviceMatrix) {
        debug_assert_eq!(out.num_experts(), self.len());
        for (n, e) in self.experts.iter().enumerate() {
            e.advise_into(x, rng, out.row_mut(n));
        }
    }

    /// `N x K` value advice at `x`. Only random experts consume `rng`.
    pub fn advise(&self, x: &Context, rng: &mut dyn RngCore) -> AdviceMatrix {
        let mut m = AdviceMatrix::zeros(self.len(), self.num_arms());
        self.advise_into(x, rng, &mut m);
        m
    }

    /// Confidence broadcast to an `N x K` matrix, if attached.
    pub fn confidence_matrix(&self) -> Option<ConfidenceMatrix> {
        self.confidences
            .as_ref()
            .map(|cs| ConfidenceMatrix::broadcast(cs, self.num_arms()).expect("validated confidences"))
    }

    /// Expected greedy reward of each expert on `contexts`.
    pub fn expected_rewards(&self, truth: &PerlinBandit, contexts: &[Context]) -> Vec<f64> {
        self.experts
            .iter()
            .map(|e| expert_expected_reward_on(e, truth, contexts))
            .collect()
    }

    /// Keeps the `ceil(fraction * N)` experts with the highest expected reward
    /// on `contexts`, in their original order.
    pub fn top_fraction(&self, truth: &PerlinBandit, fraction: f64, contexts: &[Context]) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(invalid(format!("fraction {fraction} outside (0, 1]")));
        }
        let keep = (fraction * self.len() as f64 - 1e-9).ceil() as usize;
        if keep == 0 {
            return Err(invalid("top fraction selects no experts"));
        }
        let rewards = self.expected_rewards(truth, contexts);
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| rewards[b].total_cmp(&rewards[a]).then(a.cmp(&b)));
        let mut kept = order[..keep].to_vec();
        kept.sort_unstable();
        Ok(self.select(&kept))
    }

    fn select(&self, idx: &[usize]) -> Self {
        Self {
            experts: idx.iter().map(|&i| self.experts[i].clone()).collect(),
            confidences: self.confidences.as_ref().map(|cs| idx.iter().map(|&i| cs[i]).collect()),
        }
    }

    pub fn snapshot(&self) -> PanelSnapshot {
        PanelSnapshot {
            targets: self.experts.iter().map(|e| e.target_distance).collect(),
            achieved: self.experts.iter().map(|e| e.achieved_distance).collect(),
            confidences: self.confidences.clone(),
            random: self.experts.iter().map(Expert::is_random).collect(),
        }
    }
}

/// Serializable summary of a panel; estimator state is left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSnapshot {
    pub targets: Vec<Option<f64>>,
    pub achieved: Vec<Option<f64>>,
    pub confidences: Option<Vec<f64>>,
    pub random: Vec<bool>,
}
