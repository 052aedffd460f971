//! Density reconstruction from the force and boundary histories.
//!
//! The interior of the solution is determined by `u0`, the force sequence,
//! and the boundary values: cells older than `t` decay the initial
//! condition along characteristics, younger cells decay the boundary value
//! of their birth step. This recomputes slices without marching the full
//! grid, giving an independent cross-check of the solver bookkeeping.

use super::solver::{effective_levels, transport_factor, PdeError, PdeSolution};
use crate::model::ModelSpec;

/// Rebuild the cell-average slice at time `t` (a lattice time) from the
/// stored `force` and `boundary` sequences. Overflow is not part of the
/// reconstructed slice.
pub fn reconstruct_density(
    spec: &ModelSpec,
    solution: &PdeSolution,
    t: f64,
) -> Result<Vec<Vec<f64>>, PdeError> {
    let grid = &spec.age_grid;
    let delta = grid.delta();
    if (solution.delta - delta).abs() > 1e-15 {
        return Err(PdeError::GridMismatch(format!(
            "solution step {} vs grid step {}",
            solution.delta, delta
        )));
    }
    let n = (t / delta).round() as usize;
    if ((t / delta) - n as f64).abs() > 1e-9 || n >= solution.times.len() {
        return Err(PdeError::GridMismatch(format!(
            "time {t} is not on the solved lattice"
        )));
    }
    let cells = grid.count();
    let n_atoms = spec.n_atoms();

    let mut slice = vec![vec![0.0; n_atoms]; cells];
    for i in 0..n_atoms {
        let (gamma_eff, gamma_ovf) = effective_levels(spec, i, true);
        let level = |idx: usize| {
            if idx < cells {
                gamma_eff[idx]
            } else {
                gamma_ovf
            }
        };
        // initial-condition branch: cell m at step n came from cell m - n
        for m in n..cells {
            let mut v = spec.u0.values()[m - n][i];
            if v != 0.0 {
                for k in 0..n {
                    let idx = m - n + k;
                    v *= transport_factor(solution.force[k] * delta, level(idx), level(idx + 1));
                }
            }
            slice[m][i] = v;
        }
        // boundary-born branch: cell m was the boundary value of step n - m
        for m in 0..n.min(cells) {
            let birth = n - m;
            let mut v = solution.boundary[birth][i];
            if v != 0.0 {
                for j in 0..m {
                    v *= transport_factor(
                        solution.force[birth + j] * delta,
                        level(j),
                        level(j + 1),
                    );
                }
            }
            slice[m][i] = v;
        }
    }
    Ok(slice)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AgeGrid, Curve, InitialDensity, MemoryKernel, ModelSpec, TraitSpace};
    use crate::pde::solver::{solve_pde, PdeConfig};

    fn sis_spec(grid: AgeGrid) -> ModelSpec {
        let traits = TraitSpace::single("sis");
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
    fn at_time_zero_returns_u0() {
        let spec = sis_spec(AgeGrid::new(1.0 / 64.0, 1280).unwrap());
        let sol = solve_pde(&spec, &PdeConfig::new(1.0)).unwrap();
        let slice = reconstruct_density(&spec, &sol, 0.0).unwrap();
        for (m, row) in slice.iter().enumerate() {
            assert_eq!(row[0], spec.u0.values()[m][0]);
        }
    }

    #[test]
    fn zero_force_reconstruction_is_a_shift() {
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
        let slice = reconstruct_density(&spec, &sol, 2.0).unwrap();
        for (m, row) in slice.iter().enumerate() {
            let a = grid.age(m);
            let expect = if (2.0..3.0).contains(&a) { 1.0 } else { 0.0 };
            assert!((row[0] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn reconstruction_matches_marched_slice() {
        let spec = sis_spec(AgeGrid::new(1.0 / 64.0, 1280).unwrap());
        let t = 5.0 / 64.0; // five steps
        let cfg = PdeConfig::new(t).with_snapshots(vec![t]);
        let sol = solve_pde(&spec, &cfg).unwrap();
        let slice = reconstruct_density(&spec, &sol, t).unwrap();
        let marched = &sol.snapshots[0].1;
        for m in 0..slice.len() {
            assert!(
                (slice[m][0] - marched.cells[m][0]).abs() <= 1e-10,
                "cell {m}: {} vs {}",
                slice[m][0],
                marched.cells[m][0]
            );
        }
    }

    #[test]
    fn longer_horizon_two_path_equality() {
        let spec = sis_spec(AgeGrid::new(1.0 / 32.0, 320).unwrap());
        let t = 6.0;
        let cfg = PdeConfig::new(t).with_snapshots(vec![t]);
        let sol = solve_pde(&spec, &cfg).unwrap();
        let slice = reconstruct_density(&spec, &sol, t).unwrap();
        let marched = &sol.snapshots[0].1;
        let mut worst = 0.0f64;
        for m in 0..slice.len() {
            worst = worst.max((slice[m][0] - marched.cells[m][0]).abs());
        }
        assert!(worst <= 1e-8, "max deviation {worst}");
    }

    #[test]
    fn off_lattice_time_rejected() {
        let spec = sis_spec(AgeGrid::new(1.0 / 64.0, 1280).unwrap());
        let sol = solve_pde(&spec, &PdeConfig::new(1.0)).unwrap();
        assert!(matches!(
            reconstruct_density(&spec, &sol, 0.013),
            Err(PdeError::GridMismatch(_))
        ));
    }
}
