//! SIS-type model with exponentially distributed infectious period capped
//! at `a*`, discretized into equal-probability quantile atoms.

use crate::model::{
    AgeGrid, Curve, InitialDensity, MemoryKernel, ModelError, ModelSpec, TraitSpace,
};

#[derive(Debug, Clone)]
pub struct SisScenario {
    pub lambda_star: f64,
    pub rho: f64,
    pub a_star: f64,
    /// Number of equal-probability quantile atoms.
    pub quantiles: usize,
    pub grid_delta: f64,
    pub max_age: f64,
}

impl SisScenario {
    pub fn new(lambda_star: f64, rho: f64, a_star: f64) -> Self {
        Self {
            lambda_star,
            rho,
            a_star,
            quantiles: 256,
            grid_delta: 1.0 / 64.0,
            max_age: (a_star + 17.0).ceil(),
        }
    }

    pub fn with_quantiles(mut self, q: usize) -> Self {
        self.quantiles = q;
        self
    }
}

#[derive(Debug, Clone)]
pub struct BuiltSis {
    pub spec: ModelSpec,
    /// Infectious periods carried by the atoms.
    pub durations: Vec<f64>,
    pub e_t: f64,
    pub r0: f64,
}

/// Build the model: `T = E ∧ a*` with `E ~ Exp(ρ)` sliced into `Q`
/// equal-probability atoms, each carrying the conditional mean of its
/// slice, so `E[T]` is preserved exactly. Curves are
/// `λ = λ* 1_{[0,T)}`, `γ = 1_{[T,∞)}` and the kernel is memory-free.
pub fn build_sis(scenario: &SisScenario) -> Result<BuiltSis, ModelError> {
    let q = scenario.quantiles;
    let rho = scenario.rho;
    let a_star = scenario.a_star;
    assert!(q >= 1 && rho > 0.0 && a_star > 0.0 && scenario.lambda_star > 0.0);

    // antiderivative of the exponential quantile -ln(1-u)/ρ
    let quantile_integral =
        |u: f64| -> f64 { ((1.0 - u) * (1.0 - (1.0 - u).ln())) / rho };
    let p_cut = 1.0 - (-rho * a_star).exp(); // P(E < a*)

    let mut durations = Vec::with_capacity(q);
    for k in 0..q {
        let q0 = k as f64 / q as f64;
        let q1 = (k + 1) as f64 / q as f64;
        let mean = if q0 >= p_cut {
            a_star
        } else if q1 <= p_cut {
            (quantile_integral(q0) - quantile_integral(q1)) / (q1 - q0)
        } else {
            let body = quantile_integral(q0) - quantile_integral(p_cut);
            (body + (q1 - p_cut) * a_star) / (q1 - q0)
        };
        durations.push(mean);
    }

    let e_t = durations.iter().sum::<f64>() / q as f64;
    let r0 = scenario.lambda_star * e_t;

    let traits = TraitSpace::uniform("sis", q)?;
    let lambda: Vec<Curve> = durations
        .iter()
        .map(|&t| Curve::level_before(t, scenario.lambda_star))
        .collect::<Result<_, _>>()?;
    let gamma: Vec<Curve> = durations
        .iter()
        .map(|&t| Curve::level_from(t, 1.0))
        .collect::<Result<_, _>>()?;
    let grid = AgeGrid::with_max_age(scenario.grid_delta, scenario.max_age)?;
    let u0 = InitialDensity::uniform_ages(e_t.min(1.0), &grid, &traits)?;
    let kernel = MemoryKernel::uniform(&traits);
    let spec = ModelSpec::new(traits, lambda, gamma, kernel, scenario.lambda_star, u0, grid)?;

    Ok(BuiltSis {
        spec,
        durations,
        e_t,
        r0,
    })
}
