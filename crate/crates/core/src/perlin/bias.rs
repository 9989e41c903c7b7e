//! Rotation-based bias: wrapped-Cauchy perturbation of gradient vectors and
//! calibration of the perturbation to a target scaled distance.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Cauchy, Distribution};
use serde::{Deserialize, Serialize};

use super::bandit::PerlinBandit;
use super::grid::VectorGrid;
use super::measure::{sample_contexts, DistanceProbe, DEFAULT_DISTANCE_SAMPLES};
use crate::error::{invalid, Error, Result};

/// Maximum number of rotation probes tried by [`calibrate_bias`].
pub const MAX_CALIBRATION_PROBES: usize = 40;
pub const DEFAULT_TOLERANCE: f64 = 0.02;

/// Draws an angle in `[0, 2π)` from a wrapped Cauchy distribution with the
/// given mean and concentration `rho` in `(0, 1]`.
///
/// A Cauchy variate with scale `-ln rho` is wrapped around the circle, so
/// `rho = 1` is a point mass at `mean` and `rho -> 0` tends to uniform.
pub fn wrapped_cauchy_angle<R: Rng + ?Sized>(mean: f64, rho: f64, rng: &mut R) -> Result<f64> {
    let offset = wrapped_cauchy_offset(rho, rng)?;
    Ok((mean + offset).rem_euclid(TAU))
}

fn wrapped_cauchy_offset<R: Rng + ?Sized>(rho: f64, rng: &mut R) -> Result<f64> {
    check_scale(rho)?;
    let gamma = -rho.ln();
    if gamma <= 0.0 {
        return Ok(0.0);
    }
    let cauchy = Cauchy::new(0.0, gamma).map_err(|e| invalid(format!("cauchy scale: {e}")))?;
    Ok(cauchy.sample(rng).rem_euclid(TAU))
}

fn check_scale(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(invalid(format!("cauchy scale must lie in (0, 1], got {rho}")));
    }
    Ok(())
}

fn rotate(v: [f64; 2], angle: f64) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

/// Rotates every vector of `grid` by `mean + θ`, θ wrapped-Cauchy with concentration `scale`.
pub fn rotate_grid<R: Rng + ?Sized>(grid: &VectorGrid, mean: f64, scale: f64, rng: &mut R) -> Result<VectorGrid> {
    check_scale(scale)?;
    let mut out = Vec::with_capacity(grid.vectors().len());
    for &v in grid.vectors() {
        let angle = mean + wrapped_cauchy_offset(scale, rng)?;
        out.push(rotate(v, angle));
    }
    VectorGrid::from_vectors(grid.side(), out)
}

/// Applies [`rotate_grid`] to every arm.
pub fn rotate_bandit<R: Rng + ?Sized>(
    bandit: &PerlinBandit,
    mean: f64,
    scale: f64,
    rng: &mut R,
) -> Result<PerlinBandit> {
    check_scale(scale)?;
    let arms = bandit
        .arms()
        .iter()
        .map(|g| rotate_grid(g, mean, scale, rng))
        .collect::<Result<Vec<_>>>()?;
    PerlinBandit::from_arms(arms)
}

/// Resolved bias parameters for one prior bandit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasSpec {
    /// Target scaled distance Δ.
    pub target_distance: f64,
    /// 0 for Δ <= 0.5, π otherwise.
    pub rotation_mean: f64,
    /// Wrapped-Cauchy concentration that produced the bandit.
    pub cauchy_scale: f64,
    pub tolerance: f64,
}

impl BiasSpec {
    pub fn new(target_distance: f64, tolerance: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&target_distance) {
            return Err(invalid(format!("target distance {target_distance} outside [0, 1]")));
        }
        if !(tolerance > 0.0) {
            return Err(invalid(format!("tolerance must be positive, got {tolerance}")));
        }
        Ok(Self {
            target_distance,
            rotation_mean: if target_distance > 0.5 { PI } else { 0.0 },
            cauchy_scale: 1.0,
            tolerance,
        })
    }
}

/// Outcome of [`calibrate_bias`].
#[derive(Debug, Clone)]
pub struct CalibratedBias {
    pub bandit: PerlinBandit,
    pub achieved: f64,
    pub spec: BiasSpec,
}

/// Produces a rotated copy of `base` whose scaled distance to `base` is within
/// `tol` of `target`.
///
/// Bisects the wrapped-Cauchy concentration with a fresh rotation draw per
/// probe, measuring every probe on one shared context sample.
pub fn calibrate_bias<R: Rng + ?Sized>(
    base: &PerlinBandit,
    target: f64,
    tol: f64,
    rng: &mut R,
) -> Result<CalibratedBias> {
    calibrate_bias_with(base, target, tol, DEFAULT_DISTANCE_SAMPLES, rng)
}

pub fn calibrate_bias_with<R: Rng + ?Sized>(
    base: &PerlinBandit,
    target: f64,
    tol: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<CalibratedBias> {
    let mut spec = BiasSpec::new(target, tol)?;
    let probe = DistanceProbe::new(base, sample_contexts(n_samples.max(1), rng))?;
    let inverted_mean = spec.rotation_mean != 0.0;

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best: Option<(f64, f64)> = None;
    for _ in 0..MAX_CALIBRATION_PROBES {
        let rho = 0.5 * (lo + hi);
        let rho = if rho > 0.0 { rho } else { f64::MIN_POSITIVE };
        let candidate = rotate_bandit(base, spec.rotation_mean, rho, rng)?;
        let d = probe.scaled_distance(&candidate)?;
        let err = (d - target).abs();
        if best.is_none_or(|(_, e)| err < e) {
            best = Some((d, err));
        }
        if err <= tol {
            spec.cauchy_scale = rho;
            return Ok(CalibratedBias {
                bandit: candidate,
                achieved: d,
                spec,
            });
        }
        // Concentration moves the bandit towards `base` (mean 0) or towards
        // its inverse (mean π).
        let need_closer_to_mean = (d > target) != inverted_mean;
        if need_closer_to_mean {
            lo = rho;
        } else {
            hi = rho;
        }
    }
    Err(Error::Calibration {
        target,
        best: best.map_or(f64::NAN, |(d, _)| d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perlin::measure::scaled_distance;
    use crate::perlin::sample_bandit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn near_unit_scale_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = VectorGrid::sample(5, &mut rng).unwrap();
        let r = rotate_grid(&g, 0.0, 1.0 - 1e-12, &mut rng).unwrap();
        for (a, b) in g.vectors().iter().zip(r.vectors()) {
            assert!((a[0] - b[0]).abs() < 1e-6 && (a[1] - b[1]).abs() < 1e-6);
        }
        let r = rotate_grid(&g, 0.0, 1.0, &mut rng).unwrap();
        assert_eq!(r, g);
    }

    #[test]
    fn half_turn_negates() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = VectorGrid::sample(5, &mut rng).unwrap();
        let r = rotate_grid(&g, PI, 1.0 - 1e-12, &mut rng).unwrap();
        for (a, b) in g.vectors().iter().zip(r.vectors()) {
            assert!((a[0] + b[0]).abs() < 1e-6 && (a[1] + b[1]).abs() < 1e-6);
        }
    }

    #[test]
    fn rotation_preserves_norm_and_rejects_bad_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = VectorGrid::sample(5, &mut rng).unwrap();
        for rho in [1e-9, 0.1, 0.5, 0.9] {
            let r = rotate_grid(&g, 0.3, rho, &mut rng).unwrap();
            assert_eq!(r.side(), 5);
            for v in r.vectors() {
                assert!((v[0].hypot(v[1]) - 1.0).abs() < 1e-9);
            }
        }
        assert!(rotate_grid(&g, 0.0, 0.0, &mut rng).is_err());
        assert!(rotate_grid(&g, 0.0, 1.5, &mut rng).is_err());
        assert!(rotate_grid(&g, 0.0, f64::NAN, &mut rng).is_err());
    }

    /// Kuiper statistic of angles against the uniform circle distribution.
    fn kuiper_uniform(angles: &mut [f64]) -> f64 {
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = angles.len() as f64;
        let (mut d_plus, mut d_minus) = (0.0f64, 0.0f64);
        for (i, a) in angles.iter().enumerate() {
            let f = a / TAU;
            d_plus = d_plus.max((i as f64 + 1.0) / n - f);
            d_minus = d_minus.max(f - i as f64 / n);
        }
        let v = d_plus + d_minus;
        (n.sqrt() + 0.155 + 0.24 / n.sqrt()) * v
    }

    #[test]
    fn vanishing_scale_is_uniform_on_circle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut angles: Vec<f64> = (0..10_000)
            .map(|_| wrapped_cauchy_angle(0.0, 1e-12, &mut rng).unwrap())
            .collect();
        // 1% critical value of the scaled Kuiper statistic
        assert!(kuiper_uniform(&mut angles) < 2.001);

        // sanity: a concentrated distribution is rejected by the same test
        let mut tight: Vec<f64> = (0..10_000)
            .map(|_| wrapped_cauchy_angle(1.0, 0.5, &mut rng).unwrap())
            .collect();
        assert!(kuiper_uniform(&mut tight) > 2.001);
    }

    #[test]
    fn calibration_hits_endpoints_and_middle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = sample_bandit(4, 5, &mut rng).unwrap();

        let c = calibrate_bias(&base, 0.0, 0.02, &mut rng).unwrap();
        assert!(c.achieved <= 0.02);
        assert_eq!(c.spec.rotation_mean, 0.0);

        let c = calibrate_bias(&base, 1.0, 0.02, &mut rng).unwrap();
        assert!(c.achieved >= 0.98);
        assert_eq!(c.spec.rotation_mean, PI);

        let c = calibrate_bias(&base, 0.5, 0.02, &mut rng).unwrap();
        assert!((0.48..=0.52).contains(&c.achieved));
        let again = scaled_distance(&base, &c.bandit, 4096, &mut rng).unwrap();
        assert!((again - 0.5).abs() <= 0.04, "re-measured {again}");
    }

    #[test]
    fn bias_spec_validation() {
        assert!(BiasSpec::new(-0.1, 0.02).is_err());
        assert!(BiasSpec::new(0.5, 0.0).is_err());
        assert_eq!(BiasSpec::new(0.5, 0.02).unwrap().rotation_mean, 0.0);
        assert_eq!(BiasSpec::new(0.51, 0.02).unwrap().rotation_mean, PI);
    }
}
