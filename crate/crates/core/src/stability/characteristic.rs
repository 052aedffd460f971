//! The memory-free characteristic function whose right-half-plane roots
//! decide local stability.

use super::quadrature::{AtomQuadrature, StabilityError};
use crate::model::ModelSpec;
use num_complex::Complex64;

pub const KERNEL_UNIFORM_TOL: f64 = 1e-12;

/// `D(α) = ∫ u* e^{-αa} - (F*/R₀) (∫ λ e^{-αa}) (∫ u* ∫_0^a γ(b) e^{-α(a-b)} db da)`,
/// the difference of the two sides of the eigenvalue condition. Defined for
/// memory-free kernels only (`K ≡ 1`), where `S* ≡ 1/R₀` and
/// `u* = (F*/R₀) e^{-F* ∫_0^a γ}`.
pub struct CharacteristicFn {
    atoms: Vec<AtomQuadrature>,
    weights: Vec<f64>,
    f_star: f64,
    r0: f64,
}

impl CharacteristicFn {
    pub fn new(spec: &ModelSpec, f_star: f64) -> Result<Self, StabilityError> {
        let dev = spec.kernel.max_deviation_from_uniform();
        if dev > KERNEL_UNIFORM_TOL {
            return Err(StabilityError::MemoryKernelNotConstant(dev));
        }
        if !(f_star > 0.0) {
            return Err(StabilityError::NonPositiveForce(f_star));
        }
        let mut r0 = 0.0;
        for i in 0..spec.n_atoms() {
            let li = spec
                .lambda(i)
                .total_integral()
                .ok_or_else(|| StabilityError::LambdaNotIntegrable(spec.lambda(i).terminal_level()))?;
            r0 += spec.traits.weight(i) * li;
        }
        let atoms = (0..spec.n_atoms())
            .map(|i| AtomQuadrature::new(spec, i, f_star))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            atoms,
            weights: spec.traits.weights().to_vec(),
            f_star,
            r0,
        })
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn eval(&self, alpha: Complex64) -> Result<Complex64, StabilityError> {
        let scale = self.f_star / self.r0; // u* prefactor F* S* with S* = 1/R₀
        let mut u_transform = Complex64::new(0.0, 0.0);
        let mut lambda_transform = Complex64::new(0.0, 0.0);
        let mut killed = Complex64::new(0.0, 0.0);
        for (q, &p) in self.atoms.iter().zip(&self.weights) {
            u_transform += p * q.survival_transform(alpha)?;
            lambda_transform += p * q.lambda_transform(alpha);
            killed += p * q.killed_susceptibility_transform(alpha)?;
        }
        let lhs = scale * u_transform;
        let rhs = (self.f_star / self.r0) * lambda_transform * (scale * killed);
        Ok(lhs - rhs)
    }
}
