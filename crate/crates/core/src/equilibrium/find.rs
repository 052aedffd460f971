//! Endemic-equilibrium search: threshold, root scan, and uniqueness check.

use super::h_function::{HError, HFunction};
use super::operator::{solve_s_star, OperatorError};
use super::stationary::StationaryDensity;
use crate::model::{gamma_star, validate_model, GammaStarError, ModelSpec};
use serde::Serialize;
use thiserror::Error;

/// Roots of `H - 1` are polished until the residual drops below this.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-9;
/// Log-spaced scan resolution.
pub const SCAN_POINTS_PER_DECADE: usize = 64;
pub const SCAN_X_LO: f64 = 1e-6;
/// Reported roots closer than this are merged.
pub const ROOT_SEPARATION: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum EquilibriumError {
    #[error("model fails validation: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("atom {atom}: {source}")]
    GammaStar {
        atom: usize,
        source: GammaStarError,
    },
    #[error(transparent)]
    H(#[from] HError),
    #[error("H never exceeded 1.5 up to x = {0:.3e}")]
    NoDivergence(f64),
    #[error("stationary density needs a positive force of infection, got {0}")]
    NonPositiveForce(f64),
}

/// One endemic root `F*` with its bracketing interval and `|H(F*) - 1|`.
#[derive(Debug, Clone, Serialize)]
pub struct RootInfo {
    pub f_star: f64,
    pub bracket: (f64, f64),
    pub h_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EquilibriumVerdict {
    /// At least one endemic root was found.
    Endemic,
    /// `H(0) > 1` with the uniqueness condition: disease-free is the only
    /// equilibrium (Theorem branch, certified).
    DiseaseFreeCertified,
    /// No roots at the scan resolution; existence not excluded.
    NoRootsAtScanResolution,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub s_star: Vec<f64>,
    /// `κ = Σ_i S*_i p_i`.
    pub kappa: f64,
    pub gamma_star: Vec<f64>,
    /// `H(0) = Σ_i (S*_i / γ*_i) p_i`; endemic threshold is `H(0) < 1`.
    pub h0: f64,
    /// Mean number of infections under the `S*ν/κ` change of measure.
    pub r0_star: f64,
    pub roots: Vec<RootInfo>,
    pub unique_condition: bool,
    /// First `(atom, age)` violating the uniqueness condition, if any.
    pub unique_witness: Option<(usize, f64)>,
    pub second_eigenvalue_modulus: f64,
    pub verdict: EquilibriumVerdict,
    pub scan_points_per_decade: usize,
    /// Upper end of the scanned bracket.
    pub scan_x_hi: f64,
}

impl EquilibriumReport {
    /// Stationary density attached to one of the reported roots.
    pub fn stationary(&self, root: usize) -> StationaryDensity {
        StationaryDensity::new(self.roots[root].f_star, self.s_star.clone())
    }
}

/// Check `γ(a,·) ≥ (1/a) ∫_0^a γ(s,·) ds` on the grid for all atoms.
///
/// Returns the flag and the first violating `(atom, age)`.
pub fn uniqueness_condition(spec: &ModelSpec) -> (bool, Option<(usize, f64)>) {
    for i in 0..spec.n_atoms() {
        let gamma = spec.gamma(i);
        for m in 1..=spec.age_grid.count() {
            let a = spec.age_grid.age(m);
            let avg = gamma.integral(a) / a;
            if gamma.eval(a) < avg - 1e-12 {
                return (false, Some((i, a)));
            }
        }
    }
    (true, None)
}

/// Full endemic-equilibrium analysis of a validated model.
pub fn find_equilibria(spec: &ModelSpec) -> Result<EquilibriumReport, EquilibriumError> {
    let report = validate_model(spec);
    if !report.endemicity_ok {
        let failing: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        return Err(EquilibriumError::InvalidModel(failing.join(", ")));
    }

    let sol = solve_s_star(spec)?;
    let gamma_stars: Vec<f64> = (0..spec.n_atoms())
        .map(|i| gamma_star(spec, i).map_err(|source| EquilibriumError::GammaStar { atom: i, source }))
        .collect::<Result<_, _>>()?;

    let h = HFunction::new(spec, &sol.s_star, &gamma_stars)?;
    let h0 = h.at_zero();
    let kappa = spec.traits.integrate(|i| sol.s_star[i]);
    let r0_star = spec.traits.integrate(|i| {
        sol.s_star[i] * spec.lambda(i).total_integral().unwrap_or(f64::INFINITY)
    }) / kappa;

    let (roots, x_hi) = scan_roots(&h, h0)?;
    let (unique_condition, unique_witness) = uniqueness_condition(spec);

    let verdict = if !roots.is_empty() {
        EquilibriumVerdict::Endemic
    } else if h0 > 1.0 && unique_condition {
        EquilibriumVerdict::DiseaseFreeCertified
    } else {
        EquilibriumVerdict::NoRootsAtScanResolution
    };

    Ok(EquilibriumReport {
        s_star: sol.s_star,
        kappa,
        gamma_star: gamma_stars,
        h0,
        r0_star,
        roots,
        unique_condition,
        unique_witness,
        second_eigenvalue_modulus: sol.second_eigenvalue_modulus,
        verdict,
        scan_points_per_decade: SCAN_POINTS_PER_DECADE,
        scan_x_hi: x_hi,
    })
}

/// Scan `H - 1` on a log grid, bisect every sign change.
fn scan_roots(h: &HFunction<'_>, h0: f64) -> Result<(Vec<RootInfo>, f64), EquilibriumError> {
    // extend the bracket until H is safely past 1 (it diverges at +∞)
    let mut x_hi = 10.0;
    while h.eval(x_hi)? <= 1.5 {
        x_hi *= 2.0;
        if x_hi > 1e12 {
            return Err(EquilibriumError::NoDivergence(x_hi));
        }
    }

    let decades = (x_hi / SCAN_X_LO).log10();
    let points = (decades * SCAN_POINTS_PER_DECADE as f64).ceil() as usize + 1;
    let ratio = (x_hi / SCAN_X_LO).powf(1.0 / (points - 1) as f64);

    let mut roots: Vec<RootInfo> = Vec::new();
    // the limit value at 0 anchors the first sign
    let mut prev_x = 0.0;
    let mut prev_sign = h0 - 1.0;
    let mut x = SCAN_X_LO;
    for k in 0..points {
        let val = h.eval(x)? - 1.0;
        if prev_sign == 0.0 {
            // exactly on a root at the previous point (measure zero, but cheap)
            roots.push(RootInfo {
                f_star: prev_x,
                bracket: (prev_x, prev_x),
                h_residual: 0.0,
            });
        } else if val == 0.0 || val.signum() != prev_sign.signum() {
            let lo = if prev_x > 0.0 { prev_x } else { x * 1e-8 };
            roots.push(bisect_root(h, lo, x)?);
        }
        prev_x = x;
        prev_sign = val;
        x = if k + 2 == points { x_hi } else { x * ratio };
    }

    // merge near-duplicates, keep ascending order
    roots.sort_by(|a, b| a.f_star.total_cmp(&b.f_star));
    roots.dedup_by(|b, a| (b.f_star - a.f_star).abs() <= ROOT_SEPARATION);
    Ok((roots, x_hi))
}

fn bisect_root(h: &HFunction<'_>, mut lo: f64, mut hi: f64) -> Result<RootInfo, EquilibriumError> {
    let bracket = (lo, hi);
    let mut flo = h.eval(lo)? - 1.0;
    let mut best = (lo, flo.abs());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fmid = h.eval(mid)? - 1.0;
        if fmid.abs() < best.1 {
            best = (mid, fmid.abs());
        }
        if (fmid < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
        if hi - lo <= 2.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(RootInfo {
        f_star: best.0,
        bracket,
        h_residual: best.1,
    })
}
