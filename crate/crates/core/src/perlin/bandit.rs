use rand::Rng;
use serde::{Deserialize, Serialize};

use super::grid::{landscape_value, Context, VectorGrid};
use crate::error::{invalid, Result};

/// Default lattice side (5x5 gradient vectors per arm).
pub const DEFAULT_GRID_SIDE: usize = 5;

/// Contextual bandit whose arms are Perlin landscapes over the unit square
/// with Bernoulli rewards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BanditRepr", into = "BanditRepr")]
pub struct PerlinBandit {
    arms: Vec<VectorGrid>,
}

#[derive(Serialize, Deserialize)]
struct BanditRepr {
    arms: Vec<VectorGrid>,
}

impl From<PerlinBandit> for BanditRepr {
    fn from(b: PerlinBandit) -> Self {
        BanditRepr { arms: b.arms }
    }
}

impl TryFrom<BanditRepr> for PerlinBandit {
    type Error = crate::Error;

    fn try_from(r: BanditRepr) -> Result<Self> {
        PerlinBandit::from_arms(r.arms)
    }
}

impl PerlinBandit {
    pub fn from_arms(arms: Vec<VectorGrid>) -> Result<Self> {
        if arms.len() < 2 {
            return Err(invalid(format!("a bandit needs at least 2 arms, got {}", arms.len())));
        }
        let side = arms[0].side();
        if arms.iter().any(|g| g.side() != side) {
            return Err(invalid("all arms must share the grid side"));
        }
        Ok(Self { arms })
    }

    /// Samples `arms` independent grids of `grid_side`x`grid_side` random unit vectors.
    pub fn sample<R: Rng + ?Sized>(arms: usize, grid_side: usize, rng: &mut R) -> Result<Self> {
        if arms < 2 {
            return Err(invalid(format!("a bandit needs at least 2 arms, got {arms}")));
        }
        let grids = (0..arms)
            .map(|_| VectorGrid::sample(grid_side, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { arms: grids })
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn grid_side(&self) -> usize {
        self.arms[0].side()
    }

    pub fn arms(&self) -> &[VectorGrid] {
        &self.arms
    }

    pub fn arm(&self, k: usize) -> Result<&VectorGrid> {
        self.arms
            .get(k)
            .ok_or_else(|| invalid(format!("arm {k} out of range for {} arms", self.arms.len())))
    }

    /// Expected reward of arm `k` at `x`.
    pub fn value(&self, k: usize, x: &Context) -> Result<f64> {
        Ok(landscape_value(self.arm(k)?, x))
    }

    /// Expected rewards of every arm at `x`, written into `out`.
    pub fn values_into(&self, x: &Context, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.arms.iter().map(|g| landscape_value(g, x)));
    }

    pub fn values(&self, x: &Context) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.arms.len());
        self.values_into(x, &mut v);
        v
    }

    /// One Bernoulli pull of arm `k` at `x`.
    pub fn pull<R: Rng + ?Sized>(&self, k: usize, x: &Context, rng: &mut R) -> Result<f64> {
        let p = self.value(k, x)?;
        Ok(bernoulli_from_uniform(p, rng.random::<f64>()))
    }

    /// Bandit with every gradient negated: the landscape `1 - f` on every arm.
    pub fn inverted(&self) -> Self {
        Self {
            arms: self.arms.iter().map(VectorGrid::negated).collect(),
        }
    }
}

/// Free-function spelling of [`PerlinBandit::sample`].
pub fn sample_bandit<R: Rng + ?Sized>(arms: usize, grid_side: usize, rng: &mut R) -> Result<PerlinBandit> {
    PerlinBandit::sample(arms, grid_side, rng)
}

pub fn invert_bandit(b: &PerlinBandit) -> PerlinBandit {
    b.inverted()
}

/// Bernoulli outcome for success probability `p` given a uniform draw `u` in `[0,1)`.
///
/// Sharing `u` between policies couples their reward noise.
pub fn bernoulli_from_uniform(p: f64, u: f64) -> f64 {
    if u < p {
        1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes_and_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = sample_bandit(4, 5, &mut rng).unwrap();
        assert_eq!(b.num_arms(), 4);
        assert!(b.arms().iter().all(|g| g.vectors().len() == 25));

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = sample_bandit(32, 5, &mut rng).unwrap();
        assert_eq!(b.num_arms(), 32);
        for g in b.arms() {
            for v in g.vectors() {
                assert!((v[0].hypot(v[1]) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn same_seed_same_bandit() {
        let a = sample_bandit(4, 5, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = sample_bandit(4, 5, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn argument_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_bandit(1, 5, &mut rng).is_err());
        assert!(sample_bandit(4, 1, &mut rng).is_err());
        let b = sample_bandit(3, 5, &mut rng).unwrap();
        let x = Context::new(0.3, 0.3).unwrap();
        assert!(b.pull(3, &x, &mut rng).is_err());
        assert!(b.value(7, &x).is_err());
    }

    #[test]
    fn degenerate_bernoulli() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let u = rand::Rng::random::<f64>(&mut rng);
            assert_eq!(bernoulli_from_uniform(1.0, u), 1.0);
            assert_eq!(bernoulli_from_uniform(0.0, u), 0.0);
        }
    }

    #[test]
    fn pull_frequency_matches_landscape() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let b = sample_bandit(2, 5, &mut rng).unwrap();
        let x = Context::new(0.37, 0.81).unwrap();
        let p = b.value(1, &x).unwrap();
        let n = 10_000;
        let hits: f64 = (0..n).map(|_| b.pull(1, &x, &mut rng).unwrap()).sum();
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (hits / n as f64 - p).abs() <= 3.0 * sigma,
            "p={p} mean={}",
            hits / n as f64
        );
    }

    #[test]
    fn inversion_is_an_involution_and_mirrors_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = sample_bandit(3, 5, &mut rng).unwrap();
        assert_eq!(b.inverted().inverted(), b);
        let inv = b.inverted();
        for _ in 0..100 {
            let x = Context::sample(&mut rng);
            for k in 0..3 {
                let s = b.value(k, &x).unwrap() + inv.value(k, &x).unwrap();
                assert!((s - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn json_snapshot_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let b = sample_bandit(3, 5, &mut rng).unwrap();
        let back: PerlinBandit = serde_json::from_str(&serde_json::to_string(&b).unwrap()).unwrap();
        assert_eq!(back.num_arms(), 3);
        let x = Context::new(0.42, 0.17).unwrap();
        for k in 0..3 {
            assert!((b.value(k, &x).unwrap() - back.value(k, &x).unwrap()).abs() < 1e-12);
        }
    }
}
