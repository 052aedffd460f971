//! Renewal-process vaccination: between infections the individual receives
//! vaccine shots at renewal times, each resetting a base susceptibility
//! curve. Every sampled renewal path becomes one trait atom.

use crate::model::{
    AgeGrid, Curve, CurveForm, InitialDensity, MemoryKernel, ModelError, ModelSpec, TraitSpace,
};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RenewalError {
    #[error("base susceptibility must start at zero, got σ(0) = {0}")]
    SigmaAtZero(f64),
    #[error("need at least 100 sampled paths for Monte Carlo use, got {0}")]
    TooFewPaths(usize),
    #[error("path {0} exceeded the segment budget before covering the horizon")]
    PathTooShort(usize),
    #[error("distributions need positive weights summing to 1 and positive durations")]
    BadDistribution,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One base-susceptibility atom of `Θ₁`: infection duration, curve, weight.
#[derive(Debug, Clone)]
pub struct InfectionAtom {
    pub t_i: f64,
    pub sigma: Curve,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct RenewalParams {
    pub infection: Vec<InfectionAtom>,
    /// Inter-vaccination durations over `Θ₂`: `(duration, weight)`.
    pub vaccination: Vec<(f64, f64)>,
    /// Infectivity level on `[0, T_I)`.
    pub lambda_level: f64,
    /// Number of sampled renewal paths (one trait atom each).
    pub paths: usize,
    pub seed: u64,
    pub grid_delta: f64,
    pub max_age: f64,
}

#[derive(Debug, Clone)]
pub struct BuiltRenewal {
    pub spec: ModelSpec,
    /// `E[∫_0^{T_V} σ] / E[T_V]` from the renewal theorem.
    pub gamma_star_analytic: f64,
    /// Renewal-reward estimate over the sampled complete cycles.
    pub gamma_star_monte_carlo: f64,
}

const SEGMENT_BUDGET: usize = 200_000;

pub fn build_renewal(params: &RenewalParams) -> Result<BuiltRenewal, RenewalError> {
    if params.paths < 100 {
        return Err(RenewalError::TooFewPaths(params.paths));
    }
    let w1: f64 = params.infection.iter().map(|a| a.weight).sum();
    let w2: f64 = params.vaccination.iter().map(|v| v.1).sum();
    if (w1 - 1.0).abs() > 1e-12
        || (w2 - 1.0).abs() > 1e-12
        || params.infection.iter().any(|a| !(a.t_i > 0.0) || a.weight <= 0.0)
        || params.vaccination.iter().any(|v| !(v.0 > 0.0) || v.1 <= 0.0)
    {
        return Err(RenewalError::BadDistribution);
    }
    for a in &params.infection {
        let s0 = a.sigma.eval(0.0);
        if s0 != 0.0 {
            return Err(RenewalError::SigmaAtZero(s0));
        }
    }

    // analytic γ* = E[∫_0^{T_V} σ] / E[T_V]
    let mean_integral: f64 = params
        .vaccination
        .iter()
        .map(|&(tv, wv)| {
            wv * params
                .infection
                .iter()
                .map(|a| a.weight * a.sigma.integral(tv))
                .sum::<f64>()
        })
        .sum();
    let mean_tv: f64 = params.vaccination.iter().map(|&(tv, wv)| wv * tv).sum();
    let gamma_star_analytic = mean_integral / mean_tv;

    let inf_cdf: Vec<f64> = cumulative(params.infection.iter().map(|a| a.weight));
    let vac_cdf: Vec<f64> = cumulative(params.vaccination.iter().map(|v| v.1));

    let mut rng = ChaCha12Rng::seed_from_u64(params.seed);
    let mut unit = move || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);

    let n = params.paths;
    let mut gamma = Vec::with_capacity(n);
    let mut lambda = Vec::with_capacity(n);
    let mut reward_ratio_sum = 0.0;
    let mut lambda_star = 0.0f64;
    for p in 0..n {
        let first = pick(&inf_cdf, unit());
        let t_i = params.infection[first].t_i;
        lambda.push(Curve::level_before(t_i, params.lambda_level).map_err(ModelError::from)?);
        lambda_star = lambda_star.max(params.lambda_level);

        // renewal intervals until the horizon is covered
        let mut tau = t_i;
        let mut pieces: Vec<(f64, f64, usize)> = Vec::new(); // (start, len, σ atom)
        let mut cycle_integral = 0.0;
        let mut cycle_length = 0.0;
        while tau < params.max_age {
            let v = pick(&vac_cdf, unit());
            let tv = params.vaccination[v].0;
            let s = pick(&inf_cdf, unit());
            pieces.push((tau, tv, s));
            cycle_integral += params.infection[s].sigma.integral(tv);
            cycle_length += tv;
            tau += tv;
            if pieces.len() > SEGMENT_BUDGET {
                return Err(RenewalError::PathTooShort(p));
            }
        }
        reward_ratio_sum += cycle_integral / cycle_length;
        gamma.push(compose_path(&params.infection, &pieces).with_cesaro_mean(gamma_star_analytic));
    }

    let traits = TraitSpace::uniform("path", n)?;
    let grid = AgeGrid::with_max_age(params.grid_delta, params.max_age)?;
    let min_ti = params
        .infection
        .iter()
        .map(|a| a.t_i)
        .fold(f64::INFINITY, f64::min);
    let u0 = InitialDensity::uniform_ages(min_ti.max(0.5).min(grid.max_age()), &grid, &traits)?;
    let kernel = MemoryKernel::uniform(&traits);
    let spec = ModelSpec::new(traits, lambda, gamma, kernel, lambda_star, u0, grid)?;

    Ok(BuiltRenewal {
        spec,
        gamma_star_analytic,
        gamma_star_monte_carlo: reward_ratio_sum / n as f64,
    })
}

fn cumulative(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = last.max(1.0);
    }
    out
}

fn pick(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Concatenate shifted copies of the base curves into one path curve.
///
/// Step bases compose into a step curve; otherwise the path is a piecewise
/// linear curve with jump pairs at the vaccination times.
fn compose_path(infection: &[InfectionAtom], pieces: &[(f64, f64, usize)]) -> Curve {
    let all_step = infection.iter().all(|a| a.sigma.is_step());
    if all_step {
        let mut breakpoints = Vec::new();
        let mut levels = vec![0.0];
        for &(start, len, atom) in pieces {
            let sigma = &infection[atom].sigma;
            // level at the interval start is σ(0) = 0
            push_step(&mut breakpoints, &mut levels, start, 0.0);
            if let CurveForm::Step(_) = sigma.form() {
                for seg in sigma.segments() {
                    if seg.start > 0.0 && seg.start < len {
                        push_step(
                            &mut breakpoints,
                            &mut levels,
                            start + seg.start,
                            seg.value_at_start,
                        );
                    }
                }
            }
        }
        Curve::step(breakpoints, levels).expect("composed step path")
    } else {
        let mut knots: Vec<(f64, f64)> = vec![(0.0, 0.0)];
        for &(start, len, atom) in pieces {
            let sigma = &infection[atom].sigma;
            // jump down to σ(0) = 0 at the interval start
            let left = knots.last().map(|k| k.1).unwrap_or(0.0);
            if left != 0.0 {
                knots.push((start, left));
                knots.push((start, 0.0));
            } else if knots.last().map(|k| k.0) != Some(start) {
                knots.push((start, 0.0));
            }
            for seg in sigma.segments() {
                if seg.start > 0.0 && seg.start < len {
                    knots.push((start + seg.start, seg.value_at_start));
                }
            }
            // value carried to the end of the interval
            knots.push((start + len, sigma.eval(len)));
        }
        // drop the final automatically-added endpoint duplicate if the next
        // interval immediately re-anchors there
        knots.dedup();
        Curve::piecewise_linear(knots).expect("composed linear path")
    }
}

fn push_step(breakpoints: &mut Vec<f64>, levels: &mut Vec<f64>, at: f64, level: f64) {
    if breakpoints.last().copied() == Some(at) {
        *levels.last_mut().unwrap() = level;
    } else {
        breakpoints.push(at);
        levels.push(level);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gamma_star, validate_model};

    fn jump_sigma() -> Curve {
        // σ ≡ 1_{a>0}: zero exactly at the reset instant, one afterwards
        Curve::step(vec![0.0], vec![0.0, 1.0]).unwrap()
    }

    fn ramp_sigma(c: f64) -> Curve {
        Curve::piecewise_linear(vec![(0.0, 0.0), (c, 1.0)]).unwrap()
    }

    #[test]
    fn jump_susceptibility_has_unit_mean() {
        let params = RenewalParams {
            infection: vec![InfectionAtom {
                t_i: 1.0,
                sigma: jump_sigma(),
                weight: 1.0,
            }],
            vaccination: vec![(2.0, 0.6), (3.0, 0.4)],
            lambda_level: 2.0,
            paths: 128,
            seed: 9,
            grid_delta: 1.0 / 32.0,
            max_age: 30.0,
        };
        let built = build_renewal(&params).unwrap();
        assert!((built.gamma_star_analytic - 1.0).abs() < 1e-12);
        assert!((built.gamma_star_monte_carlo - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ramp_with_deterministic_interval_gives_half() {
        let c = 2.0;
        let params = RenewalParams {
            infection: vec![InfectionAtom {
                t_i: 1.0,
                sigma: ramp_sigma(c),
                weight: 1.0,
            }],
            vaccination: vec![(c, 1.0)],
            lambda_level: 2.0,
            paths: 128,
            seed: 17,
            grid_delta: 1.0 / 32.0,
            max_age: 30.0,
        };
        let built = build_renewal(&params).unwrap();
        assert!((built.gamma_star_analytic - 0.5).abs() < 1e-12);
        // deterministic cycles: the reward ratio is exact per path
        assert!((built.gamma_star_monte_carlo - 0.5).abs() < 1e-12);
        // per-atom γ* uses the stored renewal ratio
        assert_eq!(gamma_star(&built.spec, 0), Ok(0.5));
    }

    #[test]
    fn built_paths_validate_and_vanish_at_zero() {
        let params = RenewalParams {
            infection: vec![
                InfectionAtom {
                    t_i: 0.5,
                    sigma: ramp_sigma(1.5),
                    weight: 0.5,
                },
                InfectionAtom {
                    t_i: 1.0,
                    sigma: jump_sigma(),
                    weight: 0.5,
                },
            ],
            vaccination: vec![(1.0, 0.3), (2.5, 0.7)],
            lambda_level: 3.0,
            paths: 100,
            seed: 23,
            grid_delta: 1.0 / 32.0,
            max_age: 20.0,
        };
        let built = build_renewal(&params).unwrap();
        let report = validate_model(&built.spec);
        assert!(report.bounds_ok && report.kernel_ok, "{:#?}", report.checks);
        assert!(report.check("gamma_at_zero").unwrap().passed);
        assert!(report.check("support_order").unwrap().passed);
        for i in 0..built.spec.n_atoms() {
            assert_eq!(built.spec.gamma(i).eval(0.0), 0.0);
        }
    }

    #[test]
    fn path_curves_reset_at_vaccination_times() {
        let c = 2.0;
        let params = RenewalParams {
            infection: vec![InfectionAtom {
                t_i: 1.0,
                sigma: ramp_sigma(c),
                weight: 1.0,
            }],
            vaccination: vec![(c, 1.0)],
            lambda_level: 1.0,
            paths: 100,
            seed: 1,
            grid_delta: 1.0 / 32.0,
            max_age: 20.0,
        };
        let built = build_renewal(&params).unwrap();
        let g = built.spec.gamma(0);
        // γ = 0 during infection, then sawtooth ramps of period 2
        assert_eq!(g.eval(0.5), 0.0);
        assert!((g.eval(2.0) - 0.5).abs() < 1e-12); // mid-ramp of [1, 3)
        assert!(g.eval(3.0) < 1e-12); // reset at τ1 = 3
        assert!((g.eval(4.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn too_few_paths_rejected() {
        let params = RenewalParams {
            infection: vec![InfectionAtom {
                t_i: 1.0,
                sigma: jump_sigma(),
                weight: 1.0,
            }],
            vaccination: vec![(1.0, 1.0)],
            lambda_level: 1.0,
            paths: 10,
            seed: 1,
            grid_delta: 1.0 / 32.0,
            max_age: 10.0,
        };
        assert!(matches!(
            build_renewal(&params),
            Err(RenewalError::TooFewPaths(10))
        ));
    }
}
