//! One shot of vaccination after an infection: step susceptibility with an
//! immunity window, a vaccinated plateau, and a closed-form `H`.

use crate::equilibrium::solve_s_star;
use crate::model::{
    AgeGrid, Curve, InitialDensity, MemoryKernel, ModelError, ModelSpec, TraitSpace,
};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OneShotError {
    #[error("susceptibility levels must satisfy 0 < β and α ≤ 1; atom {atom} has α={alpha}, β={beta}")]
    BetaZero { atom: usize, alpha: f64, beta: f64 },
    #[error("times must satisfy t_r ≥ t_i ≥ 0 and t_v ≥ t_i (atom {0})")]
    BadTimes(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("eigenproblem failed: {0}")]
    SStar(String),
}

/// One trait atom of the vaccination model.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OneShotAtom {
    /// Susceptibility after immunity wanes, before vaccination.
    pub alpha: f64,
    /// Susceptibility after the vaccine shot.
    pub beta: f64,
    /// Infectious period (infectivity support).
    pub t_i: f64,
    /// End of the full-immunity window.
    pub t_r: f64,
    /// Vaccination time after infection.
    pub t_v: f64,
    /// Infectivity level on `[0, t_i)`.
    pub lambda_level: f64,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct OneShotParams {
    pub atoms: Vec<OneShotAtom>,
    /// Memory kernel rows; `None` means no memory (`K ≡ 1`).
    pub kernel: Option<Vec<Vec<f64>>>,
    pub grid_delta: f64,
    pub max_age: f64,
}

impl OneShotParams {
    pub fn memory_free(atoms: Vec<OneShotAtom>) -> Self {
        let horizon = atoms
            .iter()
            .map(|a| a.t_v.max(a.t_r))
            .fold(0.0f64, f64::max);
        Self {
            atoms,
            kernel: None,
            grid_delta: 1.0 / 64.0,
            max_age: (2.0 * horizon).max(20.0).ceil(),
        }
    }
}

/// Closed-form `H` of the one-shot model under the `S*ν/κ` change of
/// measure: `H(x) = κ(E*[1/α] + x E*[T_R ∧ T_V] - E*[(1/α - 1/β) e^{-xα(T_V-T_R)₊}])`.
#[derive(Debug, Clone, Serialize)]
pub struct OneShotClosedForm {
    pub kappa: f64,
    /// `S*_i p_i / κ` per atom.
    star_weights: Vec<f64>,
    atoms: Vec<OneShotAtom>,
}

impl OneShotClosedForm {
    pub fn h(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (a, w) in self.atoms.iter().zip(&self.star_weights) {
            let gap = (a.t_v - a.t_r).max(0.0);
            acc += w
                * (1.0 / a.alpha + x * a.t_r.min(a.t_v)
                    - (1.0 / a.alpha - 1.0 / a.beta) * (-x * a.alpha * gap).exp());
        }
        self.kappa * acc
    }

    /// Printed derivative
    /// `H'(x) = κ(E*[T_R∧T_V] + E*[(1 - α/β)(T_V-T_R)₊ e^{-xα(T_V-T_R)₊}])`.
    pub fn h_prime(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (a, w) in self.atoms.iter().zip(&self.star_weights) {
            let gap = (a.t_v - a.t_r).max(0.0);
            acc += w
                * (a.t_r.min(a.t_v)
                    + (1.0 - a.alpha / a.beta) * gap * (-x * a.alpha * gap).exp());
        }
        self.kappa * acc
    }

    /// `H(0) = κ E*[1/β]`.
    pub fn h_at_zero(&self) -> f64 {
        self.kappa
            * self
                .atoms
                .iter()
                .zip(&self.star_weights)
                .map(|(a, w)| w / a.beta)
                .sum::<f64>()
    }
}

#[derive(Debug, Clone)]
pub struct BuiltOneShot {
    pub spec: ModelSpec,
    pub closed_form: OneShotClosedForm,
}

pub fn build_one_shot(params: &OneShotParams) -> Result<BuiltOneShot, OneShotError> {
    let n = params.atoms.len();
    let mut lambda = Vec::with_capacity(n);
    let mut gamma = Vec::with_capacity(n);
    let mut lambda_star = 0.0f64;
    for (i, a) in params.atoms.iter().enumerate() {
        if !(a.beta > 0.0 && a.beta <= 1.0 && a.alpha > 0.0 && a.alpha <= 1.0) {
            return Err(OneShotError::BetaZero {
                atom: i,
                alpha: a.alpha,
                beta: a.beta,
            });
        }
        if !(a.t_i >= 0.0 && a.t_r >= a.t_i && a.t_v >= a.t_i) {
            return Err(OneShotError::BadTimes(i));
        }
        lambda.push(Curve::level_before(a.t_i, a.lambda_level).map_err(ModelError::from)?);
        lambda_star = lambda_star.max(a.lambda_level);
        let g = if a.t_v > a.t_r {
            Curve::step(vec![a.t_r, a.t_v], vec![0.0, a.alpha, a.beta])
        } else {
            Curve::step(vec![a.t_v], vec![0.0, a.beta])
        };
        gamma.push(g.map_err(ModelError::from)?);
    }

    let traits = TraitSpace::new(
        (0..n).map(|i| format!("shot-{i}")).collect(),
        params.atoms.iter().map(|a| a.weight).collect(),
    )?;
    let kernel = match &params.kernel {
        Some(rows) => MemoryKernel::new(rows.clone(), &traits)?,
        None => MemoryKernel::uniform(&traits),
    };
    let grid = AgeGrid::with_max_age(params.grid_delta, params.max_age)?;
    let min_ti = params
        .atoms
        .iter()
        .map(|a| a.t_i)
        .fold(f64::INFINITY, f64::min);
    let u0 = InitialDensity::uniform_ages(min_ti.max(0.5).min(grid.max_age()), &grid, &traits)?;
    let spec = ModelSpec::new(traits, lambda, gamma, kernel, lambda_star, u0, grid)?;

    let sol = solve_s_star(&spec).map_err(|e| OneShotError::SStar(e.to_string()))?;
    let kappa = spec.traits.integrate(|i| sol.s_star[i]);
    let star_weights: Vec<f64> = (0..n)
        .map(|i| sol.s_star[i] * spec.traits.weight(i) / kappa)
        .collect();

    Ok(BuiltOneShot {
        spec,
        closed_form: OneShotClosedForm {
            kappa,
            star_weights,
            atoms: params.atoms.clone(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OneShotRegime {
    MonotoneUnique,
    NonmonotoneUnique,
    Extinction,
    Bistable,
}

/// Case analysis of the one-shot model.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeReport {
    pub regime: OneShotRegime,
    pub h0: f64,
    pub h_prime_at_zero: f64,
    /// `E*[1/β]` against `1/κ = R₀*`: the endemic threshold pair.
    pub e_star_inv_beta: f64,
    pub r0_star: f64,
    /// Factored monotonicity comparison `E*[T_R∧T_V]` vs
    /// `E*[α/β - 1]·E*[(T_V-T_R)₊]` printed in the case analysis.
    pub factored_lhs: f64,
    pub factored_rhs: f64,
    pub x_min: f64,
    pub h_at_min: f64,
}

/// Classify the long-time regime from the closed form.
pub fn one_shot_regime(built: &BuiltOneShot) -> RegimeReport {
    let cf = &built.closed_form;
    let h0 = cf.h_at_zero();
    let hp0 = cf.h_prime(0.0);
    let e_star_inv_beta = h0 / cf.kappa;
    let r0_star = 1.0 / cf.kappa;

    let mut factored_lhs = 0.0;
    let mut factored_rhs_a = 0.0;
    let mut factored_rhs_b = 0.0;
    for (a, w) in cf.atoms.iter().zip(&cf.star_weights) {
        factored_lhs += w * a.t_r.min(a.t_v);
        factored_rhs_a += w * (a.alpha / a.beta - 1.0);
        factored_rhs_b += w * (a.t_v - a.t_r).max(0.0);
    }
    let factored_rhs = factored_rhs_a * factored_rhs_b;

    // x_min: root of H' when H dips at the origin (H' is increasing in the
    // α ≥ β regime, and H' → κ E*[T∧] > 0 anyway)
    let (x_min, h_at_min) = if hp0 >= 0.0 {
        (0.0, h0)
    } else {
        let mut hi = 1.0;
        while cf.h_prime(hi) <= 0.0 {
            hi *= 2.0;
            if hi > 1e9 {
                break;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cf.h_prime(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 * (1.0 + hi) {
                break;
            }
        }
        let x = 0.5 * (lo + hi);
        (x, cf.h(x))
    };

    let regime = if h0 < 1.0 {
        if x_min == 0.0 {
            OneShotRegime::MonotoneUnique
        } else {
            OneShotRegime::NonmonotoneUnique
        }
    } else if x_min > 0.0 && h_at_min < 1.0 {
        OneShotRegime::Bistable
    } else {
        OneShotRegime::Extinction
    };

    RegimeReport {
        regime,
        h0,
        h_prime_at_zero: hp0,
        e_star_inv_beta,
        r0_star,
        factored_lhs,
        factored_rhs,
        x_min,
        h_at_min,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{find_equilibria, HFunction};
    use crate::model::gamma_star;

    /// Example 5.5 parameters on a single atom with R0 = 4.
    pub fn monotony_example() -> OneShotParams {
        OneShotParams::memory_free(vec![OneShotAtom {
            alpha: 1.0,
            beta: 0.5,
            t_i: 1.0,
            t_r: 1.0,
            t_v: 2.0,
            lambda_level: 4.0,
            weight: 1.0,
        }])
    }

    #[test]
    fn closed_form_matches_quadrature_h() {
        let built = build_one_shot(&monotony_example()).unwrap();
        let spec = &built.spec;
        let sol = crate::equilibrium::solve_s_star(spec).unwrap();
        let gs: Vec<f64> = (0..spec.n_atoms())
            .map(|i| gamma_star(spec, i).unwrap())
            .collect();
        let h = HFunction::new(spec, &sol.s_star, &gs).unwrap();
        for k in 0..=40 {
            let x = 0.01 + (10.0 - 0.01) * k as f64 / 40.0;
            let quad = h.eval(x).unwrap();
            let closed = built.closed_form.h(x);
            assert!(
                (quad - closed).abs() < 1e-8,
                "x={x}: quadrature {quad} vs closed {closed}"
            );
        }
        assert!((built.closed_form.kappa - 0.25).abs() < 1e-10);
    }

    #[test]
    fn equal_levels_reduce_to_monotone_step() {
        // α = β: the closed form loses its exponential term
        let params = OneShotParams::memory_free(vec![OneShotAtom {
            alpha: 0.5,
            beta: 0.5,
            t_i: 0.5,
            t_r: 1.0,
            t_v: 3.0,
            lambda_level: 4.0,
            weight: 1.0,
        }]);
        let built = build_one_shot(&params).unwrap();
        let spec = &built.spec;
        let sol = crate::equilibrium::solve_s_star(spec).unwrap();
        let gs: Vec<f64> = (0..spec.n_atoms())
            .map(|i| gamma_star(spec, i).unwrap())
            .collect();
        let h = HFunction::new(spec, &sol.s_star, &gs).unwrap();
        for &x in &[0.01, 0.3, 1.0, 5.0, 10.0] {
            assert!((h.eval(x).unwrap() - built.closed_form.h(x)).abs() < 1e-8);
        }
        let report = one_shot_regime(&built);
        assert_eq!(report.regime, OneShotRegime::MonotoneUnique);
    }

    #[test]
    fn h_prime_matches_central_difference() {
        let built = build_one_shot(&monotony_example()).unwrap();
        let cf = &built.closed_form;
        for &x in &[0.1, 1.0, 2.9, 7.0] {
            let h = 1e-5;
            let fd = (cf.h(x + h) - cf.h(x - h)) / (2.0 * h);
            assert!((cf.h_prime(x) - fd).abs() < 1e-6, "x={x}");
        }
    }

    #[test]
    fn example_regimes() {
        // monotone boundary case β T_V = α (T_V - T_R): unique equilibrium
        let built = build_one_shot(&monotony_example()).unwrap();
        let report = one_shot_regime(&built);
        assert_eq!(report.regime, OneShotRegime::MonotoneUnique);
        assert!(report.h0 < 1.0);

        // extinction: strong dip cannot save a super-threshold H(0) if the
        // minimum stays above 1
        let params = OneShotParams::memory_free(vec![OneShotAtom {
            alpha: 1.0,
            beta: 0.05,
            t_i: 0.25,
            t_r: 0.25,
            t_v: 0.5,
            lambda_level: 8.0, // R0 = 2, κ = 0.5
            weight: 1.0,
        }]);
        let built = build_one_shot(&params).unwrap();
        let report = one_shot_regime(&built);
        assert!(report.h0 > 1.0, "H(0) = {}", report.h0);
        assert_eq!(report.regime, OneShotRegime::Extinction);

        // bistable: deep dip below 1 before the linear growth takes over
        let built = build_one_shot(&bistable_params()).unwrap();
        let report = one_shot_regime(&built);
        assert!(report.h0 > 1.0);
        assert!(report.h_at_min < 1.0);
        assert_eq!(report.regime, OneShotRegime::Bistable);
        assert!(report.e_star_inv_beta > report.r0_star);
    }

    /// Two-atom parameter set exhibiting two endemic roots; kept in sync
    /// with the repository model file.
    pub fn bistable_params() -> OneShotParams {
        let mut p = OneShotParams::memory_free(vec![
            OneShotAtom {
                alpha: 1.0,
                beta: 0.05,
                t_i: 0.25,
                t_r: 0.25,
                t_v: 6.0,
                lambda_level: 16.0,
                weight: 0.5,
            },
            OneShotAtom {
                alpha: 1.0,
                beta: 0.0625,
                t_i: 0.25,
                t_r: 0.3125,
                t_v: 6.0,
                lambda_level: 16.0,
                weight: 0.5,
            },
        ]);
        p.max_age = 48.0;
        p
    }

    #[test]
    fn bistable_set_has_exactly_two_roots() {
        let built = build_one_shot(&bistable_params()).unwrap();
        let report = find_equilibria(&built.spec).unwrap();
        assert_eq!(report.roots.len(), 2, "{:#?}", report.roots);
        for root in &report.roots {
            // verify against the closed form, independent of the quadrature
            let h = built.closed_form.h(root.f_star);
            assert!((h - 1.0).abs() <= 1e-9, "closed-form H({}) = {h}", root.f_star);
        }
        assert!(!report.unique_condition);
    }
}
