//! The endemicity function `H` whose roots are endemic forces of infection.

use super::quad::{DecayKernel, QuadError};
use crate::model::ModelSpec;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HError {
    #[error("H needs a positive long-run susceptibility mean for every atom")]
    ZeroGammaStar,
    #[error("H evaluated at negative argument {0}")]
    NegativeArgument(f64),
}

/// `H(x) = x Σ_i p_i S*_i ∫_0^∞ exp(-x ∫_0^a γ(s,θ_i) ds) da`, with the tail
/// beyond the last knot in closed form. `H(0)` is the limit
/// `Σ_i p_i S*_i / γ*_i`, so the per-atom means must be supplied.
pub struct HFunction<'a> {
    spec: &'a ModelSpec,
    s_star: &'a [f64],
    gamma_star: &'a [f64],
    kernels: Vec<DecayKernel>,
}

impl<'a> HFunction<'a> {
    pub fn new(
        spec: &'a ModelSpec,
        s_star: &'a [f64],
        gamma_star: &'a [f64],
    ) -> Result<Self, HError> {
        assert_eq!(s_star.len(), spec.n_atoms());
        assert_eq!(gamma_star.len(), spec.n_atoms());
        if gamma_star.iter().any(|&g| g <= 0.0) {
            return Err(HError::ZeroGammaStar);
        }
        let kernels = (0..spec.n_atoms())
            .map(|i| DecayKernel::new(spec.gamma(i)))
            .collect();
        Ok(Self {
            spec,
            s_star,
            gamma_star,
            kernels,
        })
    }

    /// Limit value `H(0) = Σ_i p_i S*_i / γ*_i`.
    pub fn at_zero(&self) -> f64 {
        self.spec
            .traits
            .integrate(|i| self.s_star[i] / self.gamma_star[i])
    }

    pub fn eval(&self, x: f64) -> Result<f64, HError> {
        if x < 0.0 {
            return Err(HError::NegativeArgument(x));
        }
        if x == 0.0 {
            return Ok(self.at_zero());
        }
        let mut acc = 0.0;
        for i in 0..self.spec.n_atoms() {
            let integral = self.kernels[i]
                .exp_integral(x, 0.0, f64::INFINITY)
                .map_err(|QuadError::TailDivergent| HError::ZeroGammaStar)?;
            acc += self.spec.traits.weight(i) * self.s_star[i] * integral;
        }
        Ok(x * acc)
    }
}
