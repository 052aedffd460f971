//! Memory kernel: density of the new trait given the previous one.

use super::{ModelError, TraitSpace};
use serde::{Deserialize, Serialize};

/// Tolerance on ν-row-stochasticity `Σ_j K[i][j] p_j = 1`.
pub const ROW_SUM_TOL: f64 = 1e-10;

/// Table `k[i][j] = K(θ_i, θ_j)` of nonnegative densities, indexed by source
/// row and destination column. Rows must be ν-stochastic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryKernel {
    rows: Vec<Vec<f64>>,
}

impl MemoryKernel {
    pub fn new(rows: Vec<Vec<f64>>, traits: &TraitSpace) -> Result<Self, ModelError> {
        let n = traits.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(ModelError::KernelShape {
                rows: rows.len(),
                cols: rows.first().map_or(0, |r| r.len()),
                atoms: n,
            });
        }
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(ModelError::KernelEntry { row: i, col: j });
                }
            }
        }
        Ok(Self { rows })
    }

    /// `K ≡ 1`: no memory of the previous infection.
    pub fn uniform(traits: &TraitSpace) -> Self {
        let n = traits.len();
        Self {
            rows: vec![vec![1.0; n]; n],
        }
    }

    pub fn entry(&self, from: usize, to: usize) -> f64 {
        self.rows[from][to]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `Σ_j k[i][j] p_j` for row `i`.
    pub fn row_mass(&self, i: usize, traits: &TraitSpace) -> f64 {
        self.rows[i]
            .iter()
            .zip(traits.weights())
            .map(|(k, p)| k * p)
            .sum()
    }

    pub fn min_entry(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest deviation of any entry from 1 — zero only for `K ≡ 1`.
    pub fn max_deviation_from_uniform(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .map(|v| (v - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Cumulative destination weights `K(θ_i, θ_j) p_j` for inverse-CDF
    /// sampling of the new trait after an infection of a `θ_i` individual.
    pub fn row_cdf(&self, i: usize, traits: &TraitSpace) -> Vec<f64> {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = self.rows[i]
            .iter()
            .zip(traits.weights())
            .map(|(k, p)| {
                acc += k * p;
                acc
            })
            .collect();
        // guard the last edge against rounding
        if let Some(last) = cdf.last_mut() {
            *last = last.max(1.0);
        }
        cdf
    }
}
