//! Right-half-plane root scan for the characteristic function.

use super::characteristic::CharacteristicFn;
use super::quadrature::StabilityError;
use super::winding::{newton_polish, winding_number, Region};
use crate::model::ModelSpec;
use num_complex::Complex64;
use serde::Serialize;

pub const ROOT_ABS_TOL: f64 = 1e-8;
pub const BOUNDARY_ZERO_TOL: f64 = 1e-9;
pub const MIN_BOUNDARY_SAMPLES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StabilityVerdict {
    /// Winding zero and the boundary kept a safe margin from zero.
    NoRootsInRegion,
    RootsFound,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RootFinding {
    pub re: f64,
    pub im: f64,
    pub abs_d: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub region: Region,
    pub winding: i64,
    pub integer_defect: f64,
    pub roots: Vec<RootFinding>,
    /// `-F* σ` when a uniform susceptibility bound is available.
    pub w_ess_bound: Option<f64>,
    pub verdict: StabilityVerdict,
    pub min_boundary_abs: f64,
    /// |D| jump between the neighbors of the boundary minimum — the local
    /// discretization error estimate the inconclusive test uses.
    pub boundary_error_estimate: f64,
    pub boundary_samples: usize,
    pub evaluations: usize,
}

/// Essential-growth bound `-F* σ` of the linearized semigroup.
pub fn w_ess_bound(f_star: f64, sigma: f64) -> Result<f64, StabilityError> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(StabilityError::NonUniformSusceptibility(sigma));
    }
    if !(f_star > 0.0) {
        return Err(StabilityError::NonPositiveForce(f_star));
    }
    Ok(-f_star * sigma)
}

/// Argument-principle scan of the characteristic function over
/// `[0, X] × [-Y, Y]`, with Newton polishing when the winding is positive.
///
/// Conjugate symmetry `D(ᾱ) = conj D(α)` is enforced structurally: the
/// lower half-plane is evaluated by mirroring.
pub fn scan_roots(
    spec: &ModelSpec,
    f_star: f64,
    sigma: Option<f64>,
    region: Region,
    boundary_samples: usize,
) -> Result<StabilityReport, StabilityError> {
    if boundary_samples < MIN_BOUNDARY_SAMPLES {
        return Err(StabilityError::TooFewBoundarySamples(boundary_samples));
    }
    let d = CharacteristicFn::new(spec, f_star)?;
    let mut evaluations = 0usize;
    let mut d_eval = |z: Complex64| -> Result<Complex64, StabilityError> {
        evaluations += 1;
        if z.im >= 0.0 {
            d.eval(z)
        } else {
            Ok(d.eval(z.conj())?.conj())
        }
    };

    let outcome = winding_number(&mut d_eval, region, boundary_samples)?;

    // local discretization error near the boundary minimum of |D|
    let (min_abs, local_jump) = boundary_minimum_profile(&mut d_eval, region, boundary_samples)?;
    let min_boundary_abs = outcome.min_boundary_abs.min(min_abs);
    if min_boundary_abs < BOUNDARY_ZERO_TOL {
        return Err(StabilityError::BoundaryNearZero {
            min_abs: min_boundary_abs,
        });
    }

    let mut roots: Vec<RootFinding> = Vec::new();
    if outcome.winding != 0 {
        roots = polish_interior_roots(&mut d_eval, region)?;
    }

    let verdict = if outcome.winding == 0 {
        if outcome.integer_defect < 0.05 && min_boundary_abs >= 10.0 * local_jump {
            StabilityVerdict::NoRootsInRegion
        } else {
            StabilityVerdict::Inconclusive
        }
    } else if !roots.is_empty() {
        StabilityVerdict::RootsFound
    } else {
        StabilityVerdict::Inconclusive
    };

    let w_ess = match sigma {
        Some(s) => Some(w_ess_bound(f_star, s)?),
        None => None,
    };

    Ok(StabilityReport {
        region,
        winding: outcome.winding,
        integer_defect: outcome.integer_defect,
        roots,
        w_ess_bound: w_ess,
        verdict,
        min_boundary_abs,
        boundary_error_estimate: local_jump,
        boundary_samples,
        evaluations: evaluations + outcome.evaluations,
    })
}

/// Uniform boundary sweep returning the minimum of |D| and the |D| jump
/// between its neighbors.
fn boundary_minimum_profile(
    d_eval: &mut impl FnMut(Complex64) -> Result<Complex64, StabilityError>,
    region: Region,
    samples: usize,
) -> Result<(f64, f64), StabilityError> {
    let corners = [
        Complex64::new(0.0, -region.im_max),
        Complex64::new(region.re_max, -region.im_max),
        Complex64::new(region.re_max, region.im_max),
        Complex64::new(0.0, region.im_max),
    ];
    let perimeter: f64 = (0..4)
        .map(|i| (corners[(i + 1) % 4] - corners[i]).norm())
        .sum();
    let mut values = Vec::with_capacity(samples + 8);
    for i in 0..4 {
        let a = corners[i];
        let b = corners[(i + 1) % 4];
        let steps = ((samples as f64) * (b - a).norm() / perimeter).ceil().max(2.0) as usize;
        for s in 0..steps {
            let z = a + (b - a) * (s as f64 / steps as f64);
            values.push(d_eval(z)?.norm());
        }
    }
    let (argmin, &min_abs) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty boundary");
    let n = values.len();
    let prev = values[(argmin + n - 1) % n];
    let next = values[(argmin + 1) % n];
    let jump = (prev - min_abs).abs().max((next - min_abs).abs());
    Ok((min_abs, jump))
}

/// Newton polish from coarse-grid local minima of |D| in the closed upper
/// half of the region; conjugates are mirrored in.
fn polish_interior_roots(
    d_eval: &mut impl FnMut(Complex64) -> Result<Complex64, StabilityError>,
    region: Region,
) -> Result<Vec<RootFinding>, StabilityError> {
    let grid = 32usize;
    let mut abs = vec![vec![0.0f64; grid + 1]; grid + 1];
    for (ix, row) in abs.iter_mut().enumerate() {
        for (iy, cell) in row.iter_mut().enumerate() {
            let z = Complex64::new(
                region.re_max * ix as f64 / grid as f64,
                region.im_max * iy as f64 / grid as f64,
            );
            *cell = d_eval(z)?.norm();
        }
    }
    let mut seeds: Vec<(f64, Complex64)> = Vec::new();
    for ix in 0..=grid {
        for iy in 0..=grid {
            let v = abs[ix][iy];
            let mut is_min = true;
            for (dx, dy) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let jx = ix as i64 + dx;
                let jy = iy as i64 + dy;
                if (0..=grid as i64).contains(&jx) && (0..=grid as i64).contains(&jy)
                    && abs[jx as usize][jy as usize] < v
                {
                    is_min = false;
                    break;
                }
            }
            if is_min {
                seeds.push((
                    v,
                    Complex64::new(
                        region.re_max * ix as f64 / grid as f64,
                        region.im_max * iy as f64 / grid as f64,
                    ),
                ));
            }
        }
    }
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    seeds.truncate(64);

    let mut roots: Vec<Complex64> = Vec::new();
    for (_, seed) in seeds {
        if let Some((z, abs_d)) = newton_polish(&mut *d_eval, seed, ROOT_ABS_TOL, 60)? {
            let _ = abs_d;
            if region.contains(z, 1e-9)
                && z.im >= -1e-9
                && !roots.iter().any(|r| (r - z).norm() <= 1e-6)
            {
                roots.push(z);
            }
        }
    }
    let mut out = Vec::new();
    for z in roots {
        let abs_d = d_eval(z)?.norm();
        out.push(RootFinding {
            re: z.re,
            im: z.im,
            abs_d,
        });
        if z.im > 1e-9 {
            out.push(RootFinding {
                re: z.re,
                im: -z.im,
                abs_d,
            });
        }
    }
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AgeGrid, Curve, InitialDensity, MemoryKernel, ModelSpec, TraitSpace};

    fn sis_unit_spec() -> ModelSpec {
        let traits = TraitSpace::single("sis");
        let grid = AgeGrid::new(1.0 / 64.0, 1280).unwrap();
        let u0 = InitialDensity::uniform_ages(1.0, &grid, &traits).unwrap();
        ModelSpec::new(
            traits.clone(),
            vec![Curve::level_before(1.0, 2.0).unwrap()],
            vec![Curve::level_from(1.0, 1.0).unwrap()],
            MemoryKernel::uniform(&traits),
            2.0,
            u0,
            grid,
        )
        .unwrap()
    }

    #[test]
    fn w_ess_values() {
        assert_eq!(w_ess_bound(1.0, 1.0), Ok(-1.0));
        assert_eq!(w_ess_bound(0.5, 0.2), Ok(-0.1));
        assert!(matches!(
            w_ess_bound(1.0, 0.0),
            Err(StabilityError::NonUniformSusceptibility(_))
        ));
    }

    #[test]
    fn unit_sis_region_is_root_free() {
        let spec = sis_unit_spec();
        let report = scan_roots(&spec, 1.0, Some(1.0), Region::new(10.0, 50.0), 512).unwrap();
        assert_eq!(report.winding, 0, "{report:?}");
        assert_eq!(report.verdict, StabilityVerdict::NoRootsInRegion);
        assert_eq!(report.w_ess_bound, Some(-1.0));
        assert!(report.roots.is_empty());
    }

    #[test]
    fn too_few_samples_rejected() {
        let spec = sis_unit_spec();
        assert!(matches!(
            scan_roots(&spec, 1.0, None, Region::new(10.0, 50.0), 100),
            Err(StabilityError::TooFewBoundarySamples(100))
        ));
    }
}
