//! Uniform age grid shared by simulation output, the PDE solver, and the
//! equilibrium quadratures.

use super::ModelError;
use serde::{Deserialize, Serialize};

/// Uniform grid of `count` age cells of width `delta`; cell `m` covers
/// `[m·delta, (m+1)·delta)` and `max_age = count·delta` exactly by
/// construction. Ages at or beyond `max_age` live in an overflow cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgeGrid {
    delta: f64,
    count: usize,
}

impl AgeGrid {
    pub fn new(delta: f64, count: usize) -> Result<Self, ModelError> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(ModelError::BadGrid(format!("step must be positive, got {delta}")));
        }
        if count < 10 {
            return Err(ModelError::BadGrid(format!(
                "max age must be at least 10 steps, got {count}"
            )));
        }
        Ok(Self { delta, count })
    }

    /// Grid with `max_age` rounded to the nearest whole number of steps.
    pub fn with_max_age(delta: f64, max_age: f64) -> Result<Self, ModelError> {
        if !(delta > 0.0) || !max_age.is_finite() {
            return Err(ModelError::BadGrid(format!(
                "step {delta} / max age {max_age} invalid"
            )));
        }
        let count = (max_age / delta).round() as usize;
        Self::new(delta, count)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn max_age(&self) -> f64 {
        self.delta * self.count as f64
    }

    /// Left endpoint of cell `m` (also defined for `m == count`).
    pub fn age(&self, m: usize) -> f64 {
        self.delta * m as f64
    }

    pub fn midpoint(&self, m: usize) -> f64 {
        self.delta * (m as f64 + 0.5)
    }

    /// Cell index containing age `a`, or `None` for the overflow region.
    pub fn cell_of(&self, a: f64) -> Option<usize> {
        if a < 0.0 {
            return None;
        }
        let m = (a / self.delta).floor() as usize;
        (m < self.count).then_some(m)
    }

    /// Grid refined by an integer factor (same max age).
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            delta: self.delta / factor as f64,
            count: self.count * factor,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_age_is_exact_product() {
        let g = AgeGrid::new(1.0 / 64.0, 1280).unwrap();
        assert_eq!(g.max_age(), 20.0);
        assert_eq!(g.age(64), 1.0);
    }

    #[test]
    fn cell_lookup() {
        let g = AgeGrid::new(0.5, 10).unwrap();
        assert_eq!(g.cell_of(0.0), Some(0));
        assert_eq!(g.cell_of(0.49), Some(0));
        assert_eq!(g.cell_of(0.5), Some(1));
        assert_eq!(g.cell_of(5.0), None);
        assert_eq!(g.cell_of(-1.0), None);
    }

    #[test]
    fn too_short_grid_rejected() {
        assert!(AgeGrid::new(1.0, 5).is_err());
        assert!(AgeGrid::with_max_age(1.0, 9.0).is_err());
    }
}
