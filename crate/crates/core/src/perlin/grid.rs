use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A point of the unit square at which experts and bandits are queried.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Context([f64; 2]);

impl Context {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(invalid(format!("context ({x}, {y}) outside the unit square")));
        }
        Ok(Self([x, y]))
    }

    /// Uniform draw from `[0,1)^2`.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self([rng.random::<f64>(), rng.random::<f64>()])
    }

    pub fn coords(&self) -> [f64; 2] {
        self.0
    }
}

impl TryFrom<[f64; 2]> for Context {
    type Error = Error;

    fn try_from(c: [f64; 2]) -> Result<Self> {
        Context::new(c[0], c[1])
    }
}

impl From<Context> for [f64; 2] {
    fn from(c: Context) -> Self {
        c.0
    }
}

/// Square lattice of unit gradient vectors; one per arm of a Perlin bandit.
///
/// Serialised as a list of angles (radians, row-major) so snapshots stay
/// small and always decode to unit vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct VectorGrid {
    side: usize,
    vectors: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    grid_side: usize,
    angles: Vec<f64>,
}

impl From<VectorGrid> for GridRepr {
    fn from(g: VectorGrid) -> Self {
        GridRepr {
            grid_side: g.side,
            angles: g.vectors.iter().map(|v| v[1].atan2(v[0])).collect(),
        }
    }
}

impl TryFrom<GridRepr> for VectorGrid {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        VectorGrid::from_angles(r.grid_side, &r.angles)
    }
}

impl VectorGrid {
    /// Builds a grid from explicit vectors, normalising each one.
    pub fn from_vectors(side: usize, vectors: Vec<[f64; 2]>) -> Result<Self> {
        if side < 2 {
            return Err(invalid(format!("grid side must be >= 2, got {side}")));
        }
        if vectors.len() != side * side {
            return Err(invalid(format!(
                "expected {} vectors for a {side}x{side} grid, got {}",
                side * side,
                vectors.len()
            )));
        }
        let mut out = Vec::with_capacity(vectors.len());
        for v in vectors {
            let norm = v[0].hypot(v[1]);
            if !norm.is_finite() || norm == 0.0 {
                return Err(invalid("gradient vectors must be finite and non-zero"));
            }
            out.push([v[0] / norm, v[1] / norm]);
        }
        Ok(Self { side, vectors: out })
    }

    pub fn from_angles(side: usize, angles: &[f64]) -> Result<Self> {
        let vectors = angles.iter().map(|a| [a.cos(), a.sin()]).collect();
        Self::from_vectors(side, vectors)
    }

    /// Grid whose vectors point in uniformly random directions.
    pub fn sample<R: Rng + ?Sized>(side: usize, rng: &mut R) -> Result<Self> {
        if side < 2 {
            return Err(invalid(format!("grid side must be >= 2, got {side}")));
        }
        let vectors = (0..side * side)
            .map(|_| {
                let a = rng.random::<f64>() * TAU;
                [a.cos(), a.sin()]
            })
            .collect();
        Ok(Self { side, vectors })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn vectors(&self) -> &[[f64; 2]] {
        &self.vectors
    }

    /// Gradient at lattice column `ix`, row `iy`.
    pub fn at(&self, ix: usize, iy: usize) -> [f64; 2] {
        self.vectors[iy * self.side + ix]
    }

    pub(crate) fn map_vectors(&self, mut f: impl FnMut([f64; 2]) -> [f64; 2]) -> Self {
        Self {
            side: self.side,
            vectors: self.vectors.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn negated(&self) -> Self {
        self.map_vectors(|v| [-v[0], -v[1]])
    }

    /// Raw Perlin value in `[-√2/2, √2/2]`.
    pub fn raw_value(&self, x: &Context) -> f64 {
        let span = (self.side - 1) as f64;
        let [px, py] = x.coords();
        let (ix, fx) = cell(px * span, self.side);
        let (iy, fy) = cell(py * span, self.side);

        let n00 = dot(self.at(ix, iy), fx, fy);
        let n10 = dot(self.at(ix + 1, iy), fx - 1.0, fy);
        let n01 = dot(self.at(ix, iy + 1), fx, fy - 1.0);
        let n11 = dot(self.at(ix + 1, iy + 1), fx - 1.0, fy - 1.0);

        let (u, v) = (fade(fx), fade(fy));
        lerp(lerp(n00, n10, u), lerp(n01, n11, u), v)
    }
}

/// Landscape value in `[0,1]`: the raw Perlin value mapped by `0.5 + v/√2`.
pub fn landscape_value(grid: &VectorGrid, x: &Context) -> f64 {
    (0.5 + grid.raw_value(x) * FRAC_1_SQRT_2).clamp(0.0, 1.0)
}

/// Lattice cell index and in-cell offset for a lattice coordinate.
fn cell(u: f64, side: usize) -> (usize, f64) {
    let i = (u.floor() as usize).min(side - 2);
    (i, u - i as f64)
}

fn dot(g: [f64; 2], dx: f64, dy: f64) -> f64 {
    g[0] * dx + g[1] * dy
}

/// Quintic smoothstep `6t^5 - 15t^4 + 10t^3`.
pub(crate) fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}
