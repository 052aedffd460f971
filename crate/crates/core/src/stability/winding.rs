//! Argument-principle winding counts and Newton polishing for analytic
//! functions on a rectangle.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Rectangle `[0, re_max] × [-im_max, im_max]` in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Region {
    pub re_max: f64,
    pub im_max: f64,
}

impl Region {
    pub fn new(re_max: f64, im_max: f64) -> Self {
        Self { re_max, im_max }
    }

    pub fn contains(&self, z: Complex64, margin: f64) -> bool {
        z.re >= -margin
            && z.re <= self.re_max + margin
            && z.im.abs() <= self.im_max + margin
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(0.0, -self.im_max),
            Complex64::new(self.re_max, -self.im_max),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(0.0, self.im_max),
        ]
    }
}

/// Boundary walk outcome.
#[derive(Debug, Clone, serde::Serialize)]
pub struct WindingOutcome {
    pub winding: i64,
    /// How far the accumulated argument was from a multiple of 2π.
    pub integer_defect: f64,
    pub min_boundary_abs: f64,
    /// Largest |f| change between adjacent boundary samples after
    /// refinement — a proxy for the discretization error.
    pub max_adjacent_jump: f64,
    pub evaluations: usize,
}

/// Winding number of `f` along the rectangle boundary (counterclockwise).
///
/// Samples are refined recursively wherever the argument turns by more than
/// π/2 between neighbors, so each pole-free zero inside contributes one
/// full turn.
pub fn winding_number<E>(
    mut f: impl FnMut(Complex64) -> Result<Complex64, E>,
    region: Region,
    min_samples: usize,
) -> Result<WindingOutcome, E> {
    let corners = region.corners();
    let perimeter: f64 = (0..4)
        .map(|i| (corners[(i + 1) % 4] - corners[i]).norm())
        .sum();

    let mut total_arg = 0.0f64;
    let mut min_abs = f64::INFINITY;
    let mut max_jump = 0.0f64;
    let mut evals = 0usize;

    for i in 0..4 {
        let a = corners[i];
        let b = corners[(i + 1) % 4];
        let edge_len = (b - a).norm();
        let steps = ((min_samples as f64) * edge_len / perimeter).ceil().max(2.0) as usize;
        let mut prev_z = a;
        let mut prev_f = f(a)?;
        evals += 1;
        min_abs = min_abs.min(prev_f.norm());
        for s in 1..=steps {
            let z = a + (b - a) * (s as f64 / steps as f64);
            let fz = f(z)?;
            evals += 1;
            refine(
                &mut f,
                prev_z,
                prev_f,
                z,
                fz,
                0,
                &mut total_arg,
                &mut min_abs,
                &mut max_jump,
                &mut evals,
            )?;
            prev_z = z;
            prev_f = fz;
        }
    }

    let turns = total_arg / (2.0 * PI);
    let winding = turns.round() as i64;
    Ok(WindingOutcome {
        winding,
        integer_defect: (turns - winding as f64).abs(),
        min_boundary_abs: min_abs,
        max_adjacent_jump: max_jump,
        evaluations: evals,
    })
}

const MAX_REFINE_DEPTH: usize = 48;

#[allow(clippy::too_many_arguments)]
fn refine<E>(
    f: &mut impl FnMut(Complex64) -> Result<Complex64, E>,
    za: Complex64,
    fa: Complex64,
    zb: Complex64,
    fb: Complex64,
    depth: usize,
    total_arg: &mut f64,
    min_abs: &mut f64,
    max_jump: &mut f64,
    evals: &mut usize,
) -> Result<(), E> {
    *min_abs = min_abs.min(fb.norm());
    let turn = (fb / fa).arg();
    if turn.abs() <= PI / 2.0 || depth >= MAX_REFINE_DEPTH {
        *total_arg += turn;
        *max_jump = max_jump.max((fb - fa).norm());
        return Ok(());
    }
    let mid = 0.5 * (za + zb);
    let fm = f(mid)?;
    *evals += 1;
    refine(f, za, fa, mid, fm, depth + 1, total_arg, min_abs, max_jump, evals)?;
    refine(f, mid, fm, zb, fb, depth + 1, total_arg, min_abs, max_jump, evals)
}

/// Newton iteration with a central finite-difference derivative
/// (step `1e-6 (1 + |α|)`). Returns the polished point and `|f|` there.
pub fn newton_polish<E>(
    mut f: impl FnMut(Complex64) -> Result<Complex64, E>,
    seed: Complex64,
    tol: f64,
    max_iter: usize,
) -> Result<Option<(Complex64, f64)>, E> {
    let mut z = seed;
    let mut fz = f(z)?;
    for _ in 0..max_iter {
        if fz.norm() <= tol {
            return Ok(Some((z, fz.norm())));
        }
        let h = 1e-6 * (1.0 + z.norm());
        let fp = f(z + Complex64::new(h, 0.0))?;
        let fm = f(z - Complex64::new(h, 0.0))?;
        let deriv = (fp - fm) / (2.0 * h);
        if deriv.norm() == 0.0 {
            return Ok(None);
        }
        let step = fz / deriv;
        z -= step;
        fz = f(z)?;
        if step.norm() <= 1e-15 * (1.0 + z.norm()) && fz.norm() <= tol {
            return Ok(Some((z, fz.norm())));
        }
    }
    Ok((fz.norm() <= tol).then_some((z, fz.norm())))
}

#[cfg(test)]
mod tests {
    use super::*;

    type NoErr = std::convert::Infallible;

    fn ok(f: impl Fn(Complex64) -> Complex64) -> impl FnMut(Complex64) -> Result<Complex64, NoErr>
    {
        move |z| Ok(f(z))
    }

    #[test]
    fn rational_test_function_has_winding_two() {
        // (α - 1)(α - 2 + 3i)/(α + 5)²: two zeros inside, pole outside
        let f = |z: Complex64| {
            (z - 1.0) * (z - Complex64::new(2.0, -3.0)) / ((z + 5.0) * (z + 5.0))
        };
        let out = winding_number(ok(f), Region::new(10.0, 50.0), 512).unwrap();
        assert_eq!(out.winding, 2);
        assert!(out.integer_defect < 0.02);
    }

    #[test]
    fn entire_function_without_zeros_has_winding_zero() {
        let f = |z: Complex64| z.exp() + 0.0 * z;
        let out = winding_number(ok(f), Region::new(5.0, 20.0), 512).unwrap();
        assert_eq!(out.winding, 0);
    }

    #[test]
    fn high_multiplicity_zero_counted_with_multiplicity() {
        let f = |z: Complex64| (z - Complex64::new(3.0, 1.0)).powu(3);
        let out = winding_number(ok(f), Region::new(10.0, 10.0), 512).unwrap();
        assert_eq!(out.winding, 3);
    }

    #[test]
    fn zeros_outside_do_not_count() {
        let f = |z: Complex64| (z + 1.0) * (z - Complex64::new(3.0, 60.0));
        let out = winding_number(ok(f), Region::new(10.0, 50.0), 512).unwrap();
        assert_eq!(out.winding, 0);
    }

    #[test]
    fn newton_recovers_synthetic_roots() {
        let f = |z: Complex64| {
            (z - 1.0) * (z - Complex64::new(2.0, -3.0)) / ((z + 5.0) * (z + 5.0))
        };
        let (root, _) = newton_polish(ok(f), Complex64::new(1.3, 0.4), 1e-10, 50)
            .unwrap()
            .unwrap();
        assert!((root - Complex64::new(1.0, 0.0)).norm() < 1e-8);
        let (root, _) = newton_polish(ok(f), Complex64::new(2.5, -2.0), 1e-10, 50)
            .unwrap()
            .unwrap();
        assert!((root - Complex64::new(2.0, -3.0)).norm() < 1e-8);
    }
}
