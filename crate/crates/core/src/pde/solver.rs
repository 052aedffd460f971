//! Conservative characteristics march for the large-population limit PDE.
//!
//! Time step equals the age step, so transport is an exact index shift. The
//! state is the vector of per-cell masses (reported as cell-average
//! densities); one step decays each cell by its characteristic factor and
//! redistributes exactly the removed mass to the boundary cells through the
//! memory kernel, so total mass is conserved to rounding for every model.
//!
//! Susceptibility enters through exact per-cell averages `γ̃` and the decay
//! factor of a cell with level `g` feeding a cell with level `g'` is
//! `exp(-F g Δ) φ(F g' Δ)/φ(F g Δ)` with `φ(x) = (1 - e^{-x})/x`. The `φ`
//! ratio is a second-order correction to the plain characteristics factor
//! `exp(-F γ(a_m) Δ)`; it makes the cell masses of the stationary profile
//! `u* ∝ exp(-F* ∫γ)` an exact fixed point of the march whenever the
//! susceptibility steps are aligned to the grid.
//!
//! Ages beyond the grid accumulate in an overflow cell with curve values
//! frozen at the maximum age (curves are constant beyond their last knot,
//! so freezing is exact once the grid covers all knots).

use crate::equilibrium::DecayKernel;
use crate::math::em1_over;
use crate::model::{validate_model, ModelSpec};
use serde::Serialize;
use thiserror::Error;

pub const MASS_TOL_PER_UNIT_TIME: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum PdeError {
    #[error("model fails validation ({0})")]
    InvalidModel(String),
    #[error("mass drift {drift:.3e} at t = {t} exceeds the {tol:.1e}/unit-time budget")]
    MassDrift { t: f64, drift: f64, tol: f64 },
    #[error("horizon must be positive, got {0}")]
    BadHorizon(f64),
    #[error("solution grid does not match the requested slice ({0})")]
    GridMismatch(String),
}

/// Density state at one time: cell averages `cells[m][i]` plus per-atom
/// overflow mass.
#[derive(Debug, Clone, Serialize)]
pub struct DensityState {
    pub cells: Vec<Vec<f64>>,
    pub overflow: Vec<f64>,
}

impl DensityState {
    pub fn mass(&self, delta: f64, weights: &[f64]) -> f64 {
        let mut m = 0.0;
        for row in &self.cells {
            for (i, &v) in row.iter().enumerate() {
                m += v * delta * weights[i];
            }
        }
        for (i, &o) in self.overflow.iter().enumerate() {
            m += o * weights[i];
        }
        m
    }

    /// `L¹(da ⊗ ν)` distance between two states on the same grid.
    pub fn l1_distance(&self, other: &DensityState, delta: f64, weights: &[f64]) -> f64 {
        let mut d = 0.0;
        for (row, orow) in self.cells.iter().zip(&other.cells) {
            for (i, (&a, &b)) in row.iter().zip(orow).enumerate() {
                d += (a - b).abs() * delta * weights[i];
            }
        }
        for (i, (&a, &b)) in self.overflow.iter().zip(&other.overflow).enumerate() {
            d += (a - b).abs() * weights[i];
        }
        d
    }
}

#[derive(Debug, Clone)]
pub struct PdeConfig {
    pub horizon: f64,
    /// Times at which full density slices are kept (snapped to the grid).
    pub snapshot_times: Vec<f64>,
    pub mass_tol_per_unit_time: f64,
}

impl PdeConfig {
    pub fn new(horizon: f64) -> Self {
        Self {
            horizon,
            snapshot_times: Vec::new(),
            mass_tol_per_unit_time: MASS_TOL_PER_UNIT_TIME,
        }
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }
}

/// Solution on the characteristics lattice.
#[derive(Debug, Clone, Serialize)]
pub struct PdeSolution {
    pub delta: f64,
    pub times: Vec<f64>,
    /// Force of infection `F(t_n)`.
    pub force: Vec<f64>,
    /// Mean susceptibility of new infections `S(t_n, θ_i)`.
    pub s: Vec<Vec<f64>>,
    /// Boundary cell value at each step (`boundary[0]` is the initial one);
    /// reconstruction rebuilds interior slices from these and `force`.
    pub boundary: Vec<Vec<f64>>,
    pub mass: Vec<f64>,
    pub snapshots: Vec<(f64, DensityState)>,
    pub final_state: DensityState,
}

impl PdeSolution {
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn force_at(&self, t: f64) -> f64 {
        let n = (t / self.delta).round() as usize;
        self.force[n.min(self.force.len() - 1)]
    }
}

/// View of the marching state handed to step observers.
pub struct StepView<'a> {
    pub step: usize,
    pub t: f64,
    pub force: f64,
    pub s: &'a [f64],
    pub state: &'a DensityState,
}

/// Exact per-cell averages of a curve on the grid plus its frozen overflow
/// value. Shared by the solver and the reconstruction path.
pub(crate) fn effective_levels(spec: &ModelSpec, atom: usize, gamma: bool) -> (Vec<f64>, f64) {
    let grid = &spec.age_grid;
    let curve = if gamma { spec.gamma(atom) } else { spec.lambda(atom) };
    let kernel = DecayKernel::new(curve);
    let mut cum = Vec::with_capacity(grid.count() + 1);
    for m in 0..=grid.count() {
        cum.push(kernel.cumulative(grid.age(m)));
    }
    let levels = (0..grid.count())
        .map(|m| (cum[m + 1] - cum[m]) / grid.delta())
        .collect();
    (levels, curve.eval(grid.max_age()))
}

/// Mass decay factor of one step: level `g` here, level `g_next` downstream.
#[inline]
pub(crate) fn transport_factor(f_delta: f64, g: f64, g_next: f64) -> f64 {
    (-f_delta * g).exp() * em1_over(f_delta * g_next) / em1_over(f_delta * g)
}

pub fn solve_pde(spec: &ModelSpec, config: &PdeConfig) -> Result<PdeSolution, PdeError> {
    solve_pde_with(spec, config, |_| {})
}

/// March the PDE, calling `observer` on the state at every lattice time
/// (including `t = 0` and the horizon).
pub fn solve_pde_with(
    spec: &ModelSpec,
    config: &PdeConfig,
    mut observer: impl FnMut(StepView<'_>),
) -> Result<PdeSolution, PdeError> {
    let report = validate_model(spec);
    if !(report.bounds_ok && report.kernel_ok) {
        let failing: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        return Err(PdeError::InvalidModel(failing.join(", ")));
    }
    if !(config.horizon > 0.0) {
        return Err(PdeError::BadHorizon(config.horizon));
    }

    let grid = &spec.age_grid;
    let delta = grid.delta();
    let cells = grid.count();
    let n_atoms = spec.n_atoms();
    let weights = spec.traits.weights();
    let steps = (config.horizon / delta).round().max(1.0) as usize;

    let mut lambda_eff = Vec::with_capacity(n_atoms);
    let mut lambda_ovf = Vec::with_capacity(n_atoms);
    let mut gamma_eff = Vec::with_capacity(n_atoms);
    let mut gamma_ovf = Vec::with_capacity(n_atoms);
    for i in 0..n_atoms {
        let (le, lo) = effective_levels(spec, i, false);
        lambda_eff.push(le);
        lambda_ovf.push(lo);
        let (ge, go) = effective_levels(spec, i, true);
        gamma_eff.push(ge);
        gamma_ovf.push(go);
    }
    let decay_groups: Vec<DecayGroups> = (0..n_atoms)
        .map(|i| DecayGroups::build(&gamma_eff[i], gamma_ovf[i]))
        .collect();

    // state: per-atom cell masses
    let mut mass_cells: Vec<Vec<f64>> = (0..n_atoms)
        .map(|i| {
            spec.u0
                .values()
                .iter()
                .map(|row| row[i] * delta)
                .collect()
        })
        .collect();
    let mut overflow: Vec<f64> = spec.u0.overflow().to_vec();

    let snap_steps: Vec<usize> = config
        .snapshot_times
        .iter()
        .map(|&t| (t / delta).round() as usize)
        .collect();

    let mut out = PdeSolution {
        delta,
        times: Vec::with_capacity(steps + 1),
        force: Vec::with_capacity(steps + 1),
        s: Vec::with_capacity(steps + 1),
        boundary: Vec::with_capacity(steps + 1),
        mass: Vec::with_capacity(steps + 1),
        snapshots: Vec::new(),
        final_state: DensityState {
            cells: Vec::new(),
            overflow: Vec::new(),
        },
    };
    out.boundary
        .push((0..n_atoms).map(|i| mass_cells[i][0] / delta).collect());

    let mut removed = vec![0.0; n_atoms];
    for step in 0..=steps {
        let t = step as f64 * delta;

        // quadratures of F(t_n) and S(t_n, ·) on the current state
        let mut force = 0.0;
        let mut gflux = vec![0.0; n_atoms]; // Σ_m γ̃_m mass_m + γ_ovf o, per atom
        for i in 0..n_atoms {
            let li = &lambda_eff[i];
            let gi = &gamma_eff[i];
            let mi = &mass_cells[i];
            let mut lsum = 0.0;
            let mut gsum = 0.0;
            for m in 0..cells {
                lsum += li[m] * mi[m];
                gsum += gi[m] * mi[m];
            }
            force += weights[i] * (lsum + lambda_ovf[i] * overflow[i]);
            gflux[i] = gsum + gamma_ovf[i] * overflow[i];
        }
        let s_now: Vec<f64> = (0..n_atoms)
            .map(|i| {
                (0..n_atoms)
                    .map(|j| spec.kernel.entry(j, i) * weights[j] * gflux[j])
                    .sum()
            })
            .collect();

        let state = DensityState {
            cells: (0..cells)
                .map(|m| (0..n_atoms).map(|i| mass_cells[i][m] / delta).collect())
                .collect(),
            overflow: overflow.clone(),
        };
        let mass = state.mass(delta, weights);
        let budget = config.mass_tol_per_unit_time * (1.0 + t);
        if (mass - 1.0).abs() > budget {
            return Err(PdeError::MassDrift {
                t,
                drift: (mass - 1.0).abs(),
                tol: config.mass_tol_per_unit_time,
            });
        }

        observer(StepView {
            step,
            t,
            force,
            s: &s_now,
            state: &state,
        });

        out.times.push(t);
        out.force.push(force);
        out.s.push(s_now);
        out.mass.push(mass);
        if snap_steps.contains(&step) {
            out.snapshots.push((t, state.clone()));
        }
        if step == steps {
            out.final_state = state;
            break;
        }

        // decay along characteristics, collecting the removed mass
        let f_delta = force * delta;
        for i in 0..n_atoms {
            let mi = &mut mass_cells[i];
            let groups = &decay_groups[i];
            let factors = groups.factors(f_delta);
            let mut gone = 0.0;
            // shift top-down so each value is read before being overwritten
            let into_overflow = mi[cells - 1] * factors.factor(groups, cells - 1);
            gone += mi[cells - 1] - into_overflow;
            for m in (1..cells).rev() {
                let transported = mi[m - 1] * factors.factor(groups, m - 1);
                gone += mi[m - 1] - transported;
                mi[m] = transported;
            }
            let o_decayed = overflow[i] * factors.overflow_decay;
            gone += overflow[i] - o_decayed;
            overflow[i] = o_decayed + into_overflow;
            removed[i] = gone;
            mi[0] = 0.0;
        }
        // boundary: kernel-weighted redistribution of the removed mass
        for i in 0..n_atoms {
            let inflow: f64 = (0..n_atoms)
                .map(|j| spec.kernel.entry(j, i) * weights[j] * removed[j])
                .sum();
            mass_cells[i][0] = inflow;
        }
        out.boundary
            .push((0..n_atoms).map(|i| mass_cells[i][0] / delta).collect());
    }

    Ok(out)
}

/// Cells grouped by their effective susceptibility level: a step computes
/// one `exp`/`φ` pair per level instead of per cell when levels are few.
pub(crate) struct DecayGroups {
    /// Per-cell group index; group of the overflow level comes last.
    cell_group: Vec<u32>,
    levels: Vec<f64>,
    /// Per-cell (level, next level) when there are too many distinct levels.
    raw: Vec<(f64, f64)>,
    overflow_level: f64,
}

pub(crate) struct DecayFactors {
    /// Per-group `e^{-f g Δ}` and `φ(f g Δ)`.
    decay: Vec<f64>,
    phi: Vec<f64>,
    /// Per-cell factors in raw mode.
    raw: Vec<f64>,
    pub overflow_decay: f64,
    /// Group index of the cell after each cell (overflow group for the last).
    next_group: Vec<u32>,
}

impl DecayGroups {
    const MAX_LEVELS: usize = 64;

    pub(crate) fn build(gamma_eff: &[f64], overflow_level: f64) -> Self {
        let cells = gamma_eff.len();
        let mut levels: Vec<f64> = Vec::new();
        let mut cell_group = Vec::with_capacity(cells + 1);
        let mut assign = |g: f64, levels: &mut Vec<f64>| -> Option<u32> {
            match levels.iter().position(|&l| l == g) {
                Some(idx) => Some(idx as u32),
                None => {
                    if levels.len() >= Self::MAX_LEVELS {
                        return None;
                    }
                    levels.push(g);
                    Some((levels.len() - 1) as u32)
                }
            }
        };
        let mut ok = true;
        for &g in gamma_eff.iter().chain(std::iter::once(&overflow_level)) {
            match assign(g, &mut levels) {
                Some(idx) => cell_group.push(idx),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            Self {
                cell_group,
                levels,
                raw: Vec::new(),
                overflow_level,
            }
        } else {
            let mut raw = Vec::with_capacity(cells);
            for m in 0..cells {
                let next = if m + 1 < cells {
                    gamma_eff[m + 1]
                } else {
                    overflow_level
                };
                raw.push((gamma_eff[m], next));
            }
            Self {
                cell_group: Vec::new(),
                levels: Vec::new(),
                raw,
                overflow_level,
            }
        }
    }

    pub(crate) fn factors(&self, f_delta: f64) -> DecayFactors {
        if self.cell_group.is_empty() {
            let raw = self
                .raw
                .iter()
                .map(|&(g, gn)| transport_factor(f_delta, g, gn))
                .collect();
            DecayFactors {
                decay: Vec::new(),
                phi: Vec::new(),
                raw,
                overflow_decay: (-f_delta * self.overflow_level).exp(),
                next_group: Vec::new(),
            }
        } else {
            let decay: Vec<f64> = self.levels.iter().map(|&g| (-f_delta * g).exp()).collect();
            let phi: Vec<f64> = self.levels.iter().map(|&g| em1_over(f_delta * g)).collect();
            let cells = self.cell_group.len() - 1;
            let next_group = (0..cells).map(|m| self.cell_group[m + 1]).collect();
            let og = self.cell_group[cells] as usize;
            DecayFactors {
                overflow_decay: decay[og],
                decay,
                phi,
                raw: Vec::new(),
                next_group,
            }
        }
    }
}

impl DecayFactors {
    #[inline]
    pub(crate) fn factor(&self, groups: &DecayGroups, m: usize) -> f64 {
        if groups.cell_group.is_empty() {
            self.raw[m]
        } else {
            let g = groups.cell_group[m] as usize;
            let gn = self.next_group[m] as usize;
            self.decay[g] * self.phi[gn] / self.phi[g]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::StationaryDensity;
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
    fn zero_infectivity_is_pure_transport() {
        let traits = TraitSpace::single("t");
        let grid = AgeGrid::new(0.25, 40).unwrap();
        let u0 = InitialDensity::uniform_ages(1.0, &grid, &traits).unwrap();
        let spec = ModelSpec::new(
            traits.clone(),
            vec![Curve::constant(0.0)],
            vec![Curve::level_from(1.0, 1.0).unwrap()],
            MemoryKernel::uniform(&traits),
            1.0,
            u0,
            grid,
        )
        .unwrap();
        let sol = solve_pde(&spec, &PdeConfig::new(2.0)).unwrap();
        assert!(sol.force.iter().all(|&f| f == 0.0));
        // u_t(a) = u0(a - t): the unit block now sits on [2, 3)
        let state = &sol.final_state;
        let m_lo = spec.age_grid.cell_of(2.0).unwrap();
        let m_hi = spec.age_grid.cell_of(3.0).unwrap();
        for m in 0..state.cells.len() {
            let expect = if (m_lo..m_hi).contains(&m) { 1.0 } else { 0.0 };
            assert!(
                (state.cells[m][0] - expect).abs() < 1e-12,
                "cell {m}: {}",
                state.cells[m][0]
            );
        }
        assert!((sol.mass.last().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mass_is_conserved_to_rounding() {
        let spec = sis_unit_spec();
        let sol = solve_pde(&spec, &PdeConfig::new(10.0)).unwrap();
        for (&t, &m) in sol.times.iter().zip(&sol.mass) {
            assert!((m - 1.0).abs() < 1e-10, "mass {m} at t={t}");
        }
    }

    #[test]
    fn force_stays_within_bounds_and_s_mass_below_one() {
        let spec = sis_unit_spec();
        let sol = solve_pde(&spec, &PdeConfig::new(20.0)).unwrap();
        for (n, &f) in sol.force.iter().enumerate() {
            assert!((0.0..=spec.lambda_star + 1e-12).contains(&f));
            let s_mass: f64 = spec.traits.integrate(|i| sol.s[n][i]);
            assert!(s_mass <= 1.0 + 1e-8, "S mass {s_mass}");
        }
    }

    #[test]
    fn stationary_projection_is_a_fixed_point() {
        let spec = sis_unit_spec();
        let u_star = StationaryDensity::new(1.0, vec![0.5]);
        let spec = spec
            .clone()
            .with_u0(u_star.grid_projection(&spec).unwrap())
            .unwrap();
        let sol = solve_pde(&spec, &PdeConfig::new(5.0)).unwrap();
        for (&t, &f) in sol.times.iter().zip(&sol.force) {
            assert!((f - 1.0).abs() < 1e-10, "F({t}) = {f}");
        }
    }

    #[test]
    fn stationary_fixed_point_with_interior_junction() {
        // one-shot susceptibility with a jump between two positive levels:
        // the φ-ratio correction keeps the stationary profile exact there too
        let traits = TraitSpace::single("v");
        let grid = AgeGrid::new(1.0 / 64.0, 1280).unwrap();
        let u0 = InitialDensity::uniform_ages(1.0, &grid, &traits).unwrap();
        let spec = ModelSpec::new(
            traits.clone(),
            vec![Curve::level_before(1.0, 4.0).unwrap()],
            vec![Curve::step(vec![1.0, 2.0], vec![0.0, 1.0, 0.5]).unwrap()],
            MemoryKernel::uniform(&traits),
            4.0,
            u0,
            grid,
        )
        .unwrap();
        let report = crate::equilibrium::find_equilibria(&spec).unwrap();
        let f_star = report.roots[0].f_star;
        let u_star = report.stationary(0);
        let spec = spec
            .clone()
            .with_u0(u_star.grid_projection(&spec).unwrap())
            .unwrap();
        let sol = solve_pde(&spec, &PdeConfig::new(5.0)).unwrap();
        for (&t, &f) in sol.times.iter().zip(&sol.force) {
            assert!((f - f_star).abs() < 1e-9, "F({t}) = {f} vs {f_star}");
        }
    }

    #[test]
    fn nonnegative_density_preserved() {
        let spec = sis_unit_spec();
        let sol = solve_pde(&spec, &PdeConfig::new(5.0)).unwrap();
        for row in &sol.final_state.cells {
            assert!(row.iter().all(|&v| v >= 0.0));
        }
        assert!(sol.final_state.overflow.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn snapshots_are_recorded_at_grid_times() {
        let spec = sis_unit_spec();
        let cfg = PdeConfig::new(2.0).with_snapshots(vec![0.0, 1.0]);
        let sol = solve_pde(&spec, &cfg).unwrap();
        assert_eq!(sol.snapshots.len(), 2);
        assert_eq!(sol.snapshots[0].0, 0.0);
        assert_eq!(sol.snapshots[1].0, 1.0);
    }
}
