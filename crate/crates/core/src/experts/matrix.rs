use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Row-per-expert, column-per-arm matrix with entries in `[0,1]`.
///
/// Used both for advice (`ξ`) and for confidence (`c`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

/// Per-step value advice of every expert for every arm.
pub type AdviceMatrix = ExpertMatrix;
/// Per-step confidence of every expert for every arm.
pub type ConfidenceMatrix = ExpertMatrix;

impl ExpertMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid("expert matrix needs at least one row and column"));
        }
        if values.len() != rows * cols {
            return Err(invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(invalid(format!("matrix entry {v} outside [0, 1]")));
        }
        Ok(Self { rows, cols, values })
    }

    pub(crate) fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(invalid("ragged expert matrix"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Every arm of expert `n` gets `per_expert[n]`.
    pub fn broadcast(per_expert: &[f64], cols: usize) -> Result<Self> {
        let values = per_expert.iter().flat_map(|&c| std::iter::repeat_n(c, cols)).collect();
        Self::new(per_expert.len(), cols, values)
    }

    pub fn num_experts(&self) -> usize {
        self.rows
    }

    pub fn num_arms(&self) -> usize {
        self.cols
    }

    pub fn get(&self, n: usize, k: usize) -> f64 {
        self.values[n * self.cols + k]
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.values[n * self.cols..(n + 1) * self.cols]
    }

    pub(crate) fn row_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.values[n * self.cols..(n + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.cols)
    }

    pub fn column(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |n| self.get(n, k))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Copy with one more expert row appended.
    pub fn with_row(&self, row: &[f64]) -> Result<Self> {
        if row.len() != self.cols {
            return Err(invalid("appended row has the wrong arm count"));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(row);
        Self::new(self.rows + 1, self.cols, values)
    }

    /// Copy restricted to the given expert rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            if r >= self.rows {
                return Err(invalid(format!("row {r} out of range")));
            }
            values.extend_from_slice(self.row(r));
        }
        Self::new(rows.len(), self.cols, values)
    }
}
