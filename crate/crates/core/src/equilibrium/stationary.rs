//! The stationary density attached to an endemic root.

use super::find::EquilibriumError;
use super::quad::DecayKernel;
use crate::model::{InitialDensity, ModelSpec};
use serde::Serialize;

/// `u*(a, θ) = F* S*(θ) exp(-F* ∫_0^a γ(s, θ) ds)`, stored in closed form.
///
/// `eval` gives exact point values; `grid_projection` integrates the closed
/// form over every grid cell (analytic tail mass folded into the overflow
/// cell), which is what the PDE solver consumes. For step curves aligned to
/// the grid the projection is an exact fixed point of the solver.
#[derive(Debug, Clone, Serialize)]
pub struct StationaryDensity {
    pub f_star: f64,
    pub s_star: Vec<f64>,
}

impl StationaryDensity {
    pub fn new(f_star: f64, s_star: Vec<f64>) -> Self {
        Self { f_star, s_star }
    }

    /// Exact point value `u*(a, θ_i)`.
    pub fn eval(&self, spec: &ModelSpec, a: f64, atom: usize) -> f64 {
        self.f_star
            * self.s_star[atom]
            * (-self.f_star * spec.gamma(atom).integral(a)).exp()
    }

    /// Total mass `∫∫ u*` computed from the closed form; 1 up to the root
    /// residual when `f_star` solves `H = 1`.
    pub fn total_mass(&self, spec: &ModelSpec) -> Result<f64, EquilibriumError> {
        let mut mass = 0.0;
        for i in 0..spec.n_atoms() {
            let k = DecayKernel::new(spec.gamma(i));
            let integral = k
                .exp_integral(self.f_star, 0.0, f64::INFINITY)
                .map_err(|_| EquilibriumError::NonPositiveForce(self.f_star))?;
            mass += spec.traits.weight(i) * self.f_star * self.s_star[i] * integral;
        }
        Ok(mass)
    }

    /// Cell-averaged projection on the model grid, normalized to mass
    /// exactly 1, with the analytic tail in the overflow cell.
    pub fn grid_projection(&self, spec: &ModelSpec) -> Result<InitialDensity, EquilibriumError> {
        if !(self.f_star > 0.0) {
            return Err(EquilibriumError::NonPositiveForce(self.f_star));
        }
        let grid = &spec.age_grid;
        let n = spec.n_atoms();
        let mut values = vec![vec![0.0; n]; grid.count()];
        let mut overflow = vec![0.0; n];
        let mut mass = 0.0;
        for i in 0..n {
            let k = DecayKernel::new(spec.gamma(i));
            let scale = self.f_star * self.s_star[i];
            for (m, row) in values.iter_mut().enumerate() {
                let cell = k
                    .exp_integral(self.f_star, grid.age(m), grid.age(m + 1))
                    .map_err(|_| EquilibriumError::NonPositiveForce(self.f_star))?;
                row[i] = scale * cell / grid.delta();
                mass += scale * cell * spec.traits.weight(i);
            }
            let tail = k
                .exp_integral(self.f_star, grid.max_age(), f64::INFINITY)
                .map_err(|_| EquilibriumError::NonPositiveForce(self.f_star))?;
            overflow[i] = scale * tail;
            mass += overflow[i] * spec.traits.weight(i);
        }
        // kill the root residual so the density invariant holds exactly
        for row in &mut values {
            for v in row.iter_mut() {
                *v /= mass;
            }
        }
        for o in &mut overflow {
            *o /= mass;
        }
        InitialDensity::new(values, overflow, grid, &spec.traits)
            .map_err(|e| EquilibriumError::InvalidModel(e.to_string()))
    }
}
