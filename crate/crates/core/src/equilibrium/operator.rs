//! The trait-mixing operator and its positive eigenfunction.

use crate::model::{ModelSpec, TraitSpace};
use serde::Serialize;
use thiserror::Error;

pub const POWER_ITERATION_TOL: f64 = 1e-12;
pub const POWER_ITERATION_CAP: usize = 100_000;

#[derive(Debug, Error, PartialEq)]
pub enum OperatorError {
    #[error("kernel must be strictly positive for the eigenproblem")]
    NonPositiveKernel,
    #[error("power iteration did not converge in {0} iterations")]
    NoConvergence(usize),
    #[error("infectivity integral is infinite; the eigenfunction cannot be normalized")]
    LambdaNotIntegrable,
}

/// Table form of the operator `(T B)(θ_i) = Σ_j K(θ_j, θ_i) B(θ_j) p_j`
/// acting on trait vectors.
pub struct KernelOperator {
    /// `table[i][j] = K(θ_j, θ_i) · p_j`
    table: Vec<Vec<f64>>,
}

impl KernelOperator {
    pub fn new(spec: &ModelSpec) -> Self {
        let n = spec.n_atoms();
        let mut table = vec![vec![0.0; n]; n];
        for (i, row) in table.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = spec.kernel.entry(j, i) * spec.traits.weight(j);
            }
        }
        Self { table }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn apply(&self, b: &[f64]) -> Vec<f64> {
        self.table
            .iter()
            .map(|row| row.iter().zip(b).map(|(t, v)| t * v).sum())
            .collect()
    }

    /// ν-mass of a vector: `Σ_i b_i p_i`. The operator preserves it.
    pub fn nu_mass(traits: &TraitSpace, b: &[f64]) -> f64 {
        traits.integrate(|i| b[i])
    }
}

/// Result of the eigenproblem: the positive eigenfunction at eigenvalue 1,
/// normalized by `Σ_i p_i S*_i ∫λ(·, θ_i) = 1`, plus a spectral-gap probe.
#[derive(Debug, Clone, Serialize)]
pub struct SStarSolution {
    pub s_star: Vec<f64>,
    pub iterations: usize,
    /// Estimated modulus of the second-largest eigenvalue (0 for one atom).
    pub second_eigenvalue_modulus: f64,
}

/// Power iteration for the eigenfunction `S*` of the kernel operator.
///
/// The dominant eigenvalue is 1 (mass preservation) and is simple for
/// positive kernels, so plain iteration from the uniform vector converges;
/// a deflated iteration estimates the spectral gap to warn on
/// near-degenerate kernels.
pub fn solve_s_star(spec: &ModelSpec) -> Result<SStarSolution, OperatorError> {
    if spec.kernel.min_entry() <= 0.0 {
        return Err(OperatorError::NonPositiveKernel);
    }
    let n = spec.n_atoms();
    let op = KernelOperator::new(spec);
    let traits = &spec.traits;

    let mut b = vec![1.0; n];
    let mut iterations = 0;
    loop {
        let next = op.apply(&b);
        let mass = KernelOperator::nu_mass(traits, &next);
        let next: Vec<f64> = next.iter().map(|v| v / mass).collect();
        let diff: f64 = traits.integrate(|i| (next[i] - b[i]).abs());
        b = next;
        iterations += 1;
        if diff <= POWER_ITERATION_TOL {
            break;
        }
        if iterations >= POWER_ITERATION_CAP {
            return Err(OperatorError::NoConvergence(iterations));
        }
    }

    // normalization ∫ λ S* da dν = 1
    let mut lambda_mass = 0.0;
    for i in 0..n {
        let li = spec
            .lambda(i)
            .total_integral()
            .ok_or(OperatorError::LambdaNotIntegrable)?;
        lambda_mass += traits.weight(i) * b[i] * li;
    }
    if !(lambda_mass > 0.0) {
        return Err(OperatorError::LambdaNotIntegrable);
    }
    let s_star: Vec<f64> = b.iter().map(|v| v / lambda_mass).collect();

    let second_eigenvalue_modulus = estimate_second_eigenvalue(&op, traits, &s_star);

    Ok(SStarSolution {
        s_star,
        iterations,
        second_eigenvalue_modulus,
    })
}

/// Deflated power iteration: growth rate of vectors with zero ν-mass.
///
/// Eigenvectors at eigenvalues other than 1 have zero ν-mass, so the
/// iteration stays in that invariant subspace (re-projected each step
/// against drift) and its growth rate estimates `|κ₂|`.
fn estimate_second_eigenvalue(op: &KernelOperator, traits: &TraitSpace, s_star: &[f64]) -> f64 {
    let n = s_star.len();
    if n < 2 {
        return 0.0;
    }
    let s_mass = KernelOperator::nu_mass(traits, s_star);
    let mut v: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let project = |v: &mut Vec<f64>| {
        let m = KernelOperator::nu_mass(traits, v) / s_mass;
        for (x, s) in v.iter_mut().zip(s_star) {
            *x -= m * s;
        }
    };
    project(&mut v);
    let norm = |v: &[f64]| traits.integrate(|i| v[i].abs()).max(1e-300);
    let n0 = norm(&v);
    for x in v.iter_mut() {
        *x /= n0;
    }

    let burn_in = 64usize;
    let window = 64usize;
    let mut log_growth = 0.0;
    for k in 0..burn_in + window {
        let mut next = op.apply(&v);
        project(&mut next);
        let nn = norm(&next);
        if nn < 1e-250 {
            return 0.0; // annihilated: kernel acts as rank one here
        }
        if k >= burn_in {
            log_growth += nn.ln();
        }
        for x in next.iter_mut() {
            *x /= nn;
        }
        v = next;
    }
    (log_growth / window as f64).exp()
}
