//! Structural diagnostics: the mass identity and the weak-form residual.

use super::solver::{solve_pde_with, PdeConfig, PdeError, PdeSolution};
use crate::model::ModelSpec;

/// Residual of the conservation identity at lattice time `t`.
///
/// The identity splits unit mass into initial-population survivors and the
/// decayed cohorts born since; both terms are re-evaluated here with the
/// definition-level quadrature (`F·S·Δ` births), independently of the
/// solver's conservative bookkeeping, so the residual measures the scheme's
/// consistency and shrinks first order in the grid step.
pub fn mass_identity_residual(
    spec: &ModelSpec,
    solution: &PdeSolution,
    t: f64,
) -> Result<f64, PdeError> {
    let grid = &spec.age_grid;
    let delta = grid.delta();
    let n = (t / delta).round() as usize;
    if ((t / delta) - n as f64).abs() > 1e-9 || n >= solution.times.len() {
        return Err(PdeError::GridMismatch(format!(
            "time {t} is not on the solved lattice"
        )));
    }
    let cells = grid.count();
    let n_atoms = spec.n_atoms();
    let weights = spec.traits.weights();
    let gamma_left: Vec<Vec<f64>> = (0..n_atoms)
        .map(|i| (0..cells).map(|m| spec.gamma(i).eval(grid.age(m))).collect())
        .collect();
    let gamma_ovf: Vec<f64> = (0..n_atoms)
        .map(|i| spec.gamma(i).eval(grid.max_age()))
        .collect();
    let gamma_at = |i: usize, idx: usize| {
        if idx < cells {
            gamma_left[i][idx]
        } else {
            gamma_ovf[i]
        }
    };

    // survivors of the initial density
    let mut term1 = 0.0;
    for i in 0..n_atoms {
        for m in 0..cells {
            let v = spec.u0.values()[m][i];
            if v == 0.0 {
                continue;
            }
            let mut exponent = 0.0;
            for k in 0..n {
                exponent += solution.force[k] * gamma_at(i, m + k);
            }
            term1 += weights[i] * delta * v * (-exponent * delta).exp();
        }
        let o = spec.u0.overflow()[i];
        if o != 0.0 {
            let mut exponent = 0.0;
            for k in 0..n {
                exponent += solution.force[k] * gamma_ovf[i];
            }
            term1 += weights[i] * o * (-exponent * delta).exp();
        }
    }

    // cohorts born at each step, decayed to time t
    let mut term2 = 0.0;
    for i in 0..n_atoms {
        for birth in 0..n {
            let born_mass = solution.force[birth] * solution.s[birth][i] * delta;
            if born_mass == 0.0 {
                continue;
            }
            let mut exponent = 0.0;
            for j in 0..(n - birth - 1) {
                exponent += solution.force[birth + 1 + j] * gamma_at(i, j);
            }
            term2 += weights[i] * born_mass * (-exponent * delta).exp();
        }
    }

    Ok((term1 + term2 - 1.0).abs())
}

/// A test function `f(s, a, θ)` with its partial derivatives in time and age.
pub struct TestFunction<'a> {
    pub f: &'a dyn Fn(f64, f64, usize) -> f64,
    pub df_ds: &'a dyn Fn(f64, f64, usize) -> f64,
    pub df_da: &'a dyn Fn(f64, f64, usize) -> f64,
}

/// Weak-form residual of the limit equation over `[0, horizon]`:
/// `|⟨μ_T, f_T⟩ - ⟨μ_0, f_0⟩ - ∫⟨μ_s, ∂_a f + ∂_s f⟩ ds - ∫⟨μ_s, λ⟩⟨μ_s, R f_s⟩ ds|`
/// with trapezoid time quadrature on the solver lattice. Cell averages pair
/// with midpoint evaluation; the overflow mass sits at the maximum age.
pub fn weak_form_residual(
    spec: &ModelSpec,
    horizon: f64,
    test: &TestFunction<'_>,
) -> Result<f64, PdeError> {
    let grid = &spec.age_grid;
    let delta = grid.delta();
    let cells = grid.count();
    let n_atoms = spec.n_atoms();
    let weights = spec.traits.weights();

    // ⟨μ, g(a, θ)⟩ against a state
    let pair = |state: &super::solver::DensityState, g: &dyn Fn(f64, usize) -> f64| -> f64 {
        let mut acc = 0.0;
        for (m, row) in state.cells.iter().enumerate() {
            let mid = grid.midpoint(m);
            for (i, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    acc += weights[i] * delta * v * g(mid, i);
                }
            }
        }
        for (i, &o) in state.overflow.iter().enumerate() {
            if o != 0.0 {
                acc += weights[i] * o * g(grid.max_age(), i);
            }
        }
        acc
    };

    // Σ_j f(s, 0, θ_j) K(θ_i, θ_j) p_j, per source atom i
    let boundary_mix = |s: f64| -> Vec<f64> {
        (0..n_atoms)
            .map(|i| {
                (0..n_atoms)
                    .map(|j| (test.f)(s, 0.0, j) * spec.kernel.entry(i, j) * weights[j])
                    .sum()
            })
            .collect()
    };

    let mut first = None;
    let mut last = None;
    let mut integrand_prev: Option<f64> = None;
    let mut integral = 0.0;
    let config = PdeConfig::new(horizon);
    solve_pde_with(spec, &config, |view| {
        let s = view.t;
        let term_transport = pair(view.state, &|a, i| {
            (test.df_da)(s, a, i) + (test.df_ds)(s, a, i)
        });
        let mixed = boundary_mix(s);
        let term_jump = view.force
            * pair(view.state, &|a, i| {
                spec.gamma(i).eval(a) * (mixed[i] - (test.f)(s, a, i))
            });
        let integrand = term_transport + term_jump;
        if let Some(prev) = integrand_prev {
            integral += 0.5 * delta * (prev + integrand);
        }
        integrand_prev = Some(integrand);
        if view.step == 0 {
            first = Some(pair(view.state, &|a, i| (test.f)(s, a, i)));
        }
        last = Some(pair(view.state, &|a, i| (test.f)(s, a, i)));
    })?;

    Ok((last.unwrap() - first.unwrap() - integral).abs())
}
