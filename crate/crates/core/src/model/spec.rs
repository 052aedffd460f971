//! The full model data: trait space, curves, kernel, bound, initial density.

use super::{AgeGrid, Curve, InitialDensity, MemoryKernel, ModelError, TraitSpace};
use serde::{Deserialize, Serialize};

/// Complete model specification consumed by every analysis module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub traits: TraitSpace,
    /// One infectivity curve per trait atom.
    pub lambda: Vec<Curve>,
    /// One susceptibility curve per trait atom.
    pub gamma: Vec<Curve>,
    pub kernel: MemoryKernel,
    /// Uniform bound on the infectivity curves (`λ ≤ λ*`).
    pub lambda_star: f64,
    pub u0: InitialDensity,
    pub age_grid: AgeGrid,
}

impl ModelSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        traits: TraitSpace,
        lambda: Vec<Curve>,
        gamma: Vec<Curve>,
        kernel: MemoryKernel,
        lambda_star: f64,
        u0: InitialDensity,
        age_grid: AgeGrid,
    ) -> Result<Self, ModelError> {
        let n = traits.len();
        if lambda.len() != n {
            return Err(ModelError::CurveCount {
                what: "lambda",
                got: lambda.len(),
                want: n,
            });
        }
        if gamma.len() != n {
            return Err(ModelError::CurveCount {
                what: "gamma",
                got: gamma.len(),
                want: n,
            });
        }
        if kernel.len() != n {
            return Err(ModelError::KernelShape {
                rows: kernel.len(),
                cols: kernel.len(),
                atoms: n,
            });
        }
        if !(lambda_star > 0.0) || !lambda_star.is_finite() {
            return Err(ModelError::BadLambdaStar(lambda_star));
        }
        // re-run the shape/mass checks against this grid and trait space
        let u0 = InitialDensity::new(
            u0.values().to_vec(),
            u0.overflow().to_vec(),
            &age_grid,
            &traits,
        )?;
        Ok(Self {
            traits,
            lambda,
            gamma,
            kernel,
            lambda_star,
            u0,
            age_grid,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.traits.len()
    }

    pub fn lambda(&self, atom: usize) -> &Curve {
        &self.lambda[atom]
    }

    pub fn gamma(&self, atom: usize) -> &Curve {
        &self.gamma[atom]
    }

    /// Replace the initial density (shape-checked against the grid).
    pub fn with_u0(mut self, u0: InitialDensity) -> Result<Self, ModelError> {
        let u0 = InitialDensity::new(
            u0.values().to_vec(),
            u0.overflow().to_vec(),
            &self.age_grid,
            &self.traits,
        )?;
        self.u0 = u0;
        Ok(self)
    }

    /// Replace the age grid, rebuilding the default initial density on it.
    pub fn with_grid(mut self, grid: AgeGrid, u0: InitialDensity) -> Result<Self, ModelError> {
        let u0 = InitialDensity::new(u0.values().to_vec(), u0.overflow().to_vec(), &grid, &self.traits)?;
        self.age_grid = grid;
        self.u0 = u0;
        Ok(self)
    }
}
