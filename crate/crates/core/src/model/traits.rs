//! Finite weighted trait space: the discretized `(Θ, ν)`.

use super::ModelError;
use serde::{Deserialize, Serialize};

pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Finite set of trait atoms with strictly positive ν-weights summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitSpace {
    atoms: Vec<String>,
    weights: Vec<f64>,
}

impl TraitSpace {
    pub fn new(atoms: Vec<String>, weights: Vec<f64>) -> Result<Self, ModelError> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(ModelError::EmptyTraitSpace);
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) || (sum - 1.0).abs() > WEIGHT_SUM_TOL
        {
            return Err(ModelError::BadWeights((sum - 1.0).abs()));
        }
        let mut seen = std::collections::HashSet::new();
        for a in &atoms {
            if !seen.insert(a.as_str()) {
                return Err(ModelError::DuplicateAtom(a.clone()));
            }
        }
        Ok(Self { atoms, weights })
    }

    /// Single atom of full mass.
    pub fn single(label: impl Into<String>) -> Self {
        Self {
            atoms: vec![label.into()],
            weights: vec![1.0],
        }
    }

    /// `n` atoms `label-0..label-n` with equal weights.
    pub fn uniform(label: &str, n: usize) -> Result<Self, ModelError> {
        let atoms = (0..n).map(|i| format!("{label}-{i}")).collect();
        // distribute exactly: float 1/n sums can miss 1 by > tol for odd n
        let w = 1.0 / n as f64;
        let mut weights = vec![w; n];
        let correction: f64 = 1.0 - weights.iter().sum::<f64>();
        if n > 0 {
            weights[0] += correction;
        }
        Self::new(atoms, weights)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ν-integral of an atom-indexed quantity: `Σ_i f(i) p_i`.
    pub fn integrate(&self, mut f: impl FnMut(usize) -> f64) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, &p)| f(i) * p)
            .sum()
    }
}
