//! Initial age/trait density on the grid.

use super::{AgeGrid, ModelError, TraitSpace};
use serde::{Deserialize, Serialize};

pub const MASS_TOL: f64 = 1e-8;

/// Cell-averaged density `values[m][i]` (per unit age per ν-mass) on the age
/// grid × trait atoms, plus per-atom overflow mass beyond the grid. Total
/// mass `Σ values·Δ·p + Σ overflow·p` must be 1 within [`MASS_TOL`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialDensity {
    values: Vec<Vec<f64>>,
    overflow: Vec<f64>,
}

impl InitialDensity {
    pub fn new(
        values: Vec<Vec<f64>>,
        overflow: Vec<f64>,
        grid: &AgeGrid,
        traits: &TraitSpace,
    ) -> Result<Self, ModelError> {
        let rows = values.len();
        let cols = values.first().map_or(0, |r| r.len());
        if rows != grid.count() || values.iter().any(|r| r.len() != traits.len()) {
            return Err(ModelError::DensityShape {
                rows,
                cols,
                want_rows: grid.count(),
                want_cols: traits.len(),
            });
        }
        for (m, row) in values.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(ModelError::DensityEntry { cell: m, atom: i });
                }
            }
        }
        if overflow.len() != traits.len() || overflow.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(ModelError::DensityEntry {
                cell: grid.count(),
                atom: 0,
            });
        }
        let d = Self { values, overflow };
        let mass = d.mass(grid, traits);
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(ModelError::DensityMass(mass));
        }
        Ok(d)
    }

    /// Ages uniform on `[0, upto)`, independent of the trait.
    pub fn uniform_ages(upto: f64, grid: &AgeGrid, traits: &TraitSpace) -> Result<Self, ModelError> {
        let upto = upto.min(grid.max_age());
        if !(upto > 0.0) {
            return Err(ModelError::BadGrid(
                "uniform initial ages need a positive range".into(),
            ));
        }
        let density = 1.0 / upto;
        let mut values = vec![vec![0.0; traits.len()]; grid.count()];
        for (m, row) in values.iter_mut().enumerate() {
            let lo = grid.age(m);
            let hi = grid.age(m + 1);
            let overlap = (upto.min(hi) - lo).max(0.0);
            let v = density * overlap / grid.delta();
            for x in row.iter_mut() {
                *x = v;
            }
        }
        Self::new(values, vec![0.0; traits.len()], grid, traits)
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn overflow(&self) -> &[f64] {
        &self.overflow
    }

    pub fn mass(&self, grid: &AgeGrid, traits: &TraitSpace) -> f64 {
        let mut mass = 0.0;
        for row in &self.values {
            for (i, &v) in row.iter().enumerate() {
                mass += v * grid.delta() * traits.weight(i);
            }
        }
        for (i, &o) in self.overflow.iter().enumerate() {
            mass += o * traits.weight(i);
        }
        mass
    }

    /// Same density on a grid refined by an integer factor (piecewise
    /// constant within each coarse cell, so the refinement is exact).
    pub fn refined(&self, factor: usize) -> Self {
        let mut values = Vec::with_capacity(self.values.len() * factor);
        for row in &self.values {
            for _ in 0..factor {
                values.push(row.clone());
            }
        }
        Self {
            values,
            overflow: self.overflow.clone(),
        }
    }
}
