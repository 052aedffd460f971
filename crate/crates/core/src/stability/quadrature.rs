//! Closed-form complex quadratures against the stationary profile.
//!
//! All integrands are exponentials with piecewise-affine exponents, so each
//! step segment contributes in closed form; oscillatory error at large
//! `|Im α|` never arises. Piecewise linear susceptibility is lowered to a
//! step curve on the model grid (exact cell averages) first; infectivity
//! segments are handled exactly in affine form. Tails beyond the last knot
//! integrate analytically with the terminal level.

use crate::math::em1_over_c;
use crate::model::{Curve, ModelSpec};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StabilityError {
    #[error("characteristic equation requires a memory-free kernel (K ≡ 1); max deviation {0:.3e}")]
    MemoryKernelNotConstant(f64),
    #[error("quadrature tail diverges at Re(α) = {re_alpha}: needs Re(α) > {min_re}")]
    TailDivergent { re_alpha: f64, min_re: f64 },
    #[error("infectivity must vanish beyond its last knot (terminal level {0})")]
    LambdaNotIntegrable(f64),
    #[error("uniform susceptibility bound σ must lie in (0, 1], got {0}")]
    NonUniformSusceptibility(f64),
    #[error("stationary force of infection must be positive, got {0}")]
    NonPositiveForce(f64),
    #[error("boundary sample count {0} is below the 512 minimum")]
    TooFewBoundarySamples(usize),
    #[error("|D| = {min_abs:.3e} on the scan boundary: a root sits on or near it; enlarge the region")]
    BoundaryNearZero { min_abs: f64 },
}

/// `∫_0^1 t e^{-zt} dt`, stable for small `|z|`.
fn xem1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        // 1/2 - z/3 + z²/8 - z³/30
        Complex64::new(0.5, 0.0) + z * (Complex64::new(-1.0 / 3.0, 0.0) + z * (0.125 - z / 30.0))
    } else {
        let one = Complex64::new(1.0, 0.0);
        (one - (one + z) * (-z).exp()) / (z * z)
    }
}

/// `∫_0^1 t² e^{-zt} dt`, stable for small `|z|`.
fn x2em1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        Complex64::new(1.0 / 3.0, 0.0) + z * (Complex64::new(-0.25, 0.0) + z * (0.1 - z / 36.0))
    } else {
        let two = Complex64::new(2.0, 0.0);
        (two - (two + two * z + z * z) * (-z).exp()) / (z * z * z)
    }
}

/// `∫_0^L e^{-zt} dt`.
fn seg_exp(z: Complex64, l: f64) -> Complex64 {
    l * em1_over_c(z * l)
}

/// `(∫_0^L e^{-xt} dt - ∫_0^L e^{-(x+α)t} dt) / α`, stable as `α → 0`.
fn seg_exp_diff(x: f64, alpha: Complex64, l: f64) -> Complex64 {
    if alpha.norm() * l < 1e-4 {
        let z = Complex64::new(x * l, 0.0);
        l * l * xem1(z) - alpha * 0.5 * l * l * l * x2em1(z)
    } else {
        (seg_exp(Complex64::new(x, 0.0), l) - seg_exp(Complex64::new(x, 0.0) + alpha, l)) / alpha
    }
}

/// Step decomposition of one atom's susceptibility: bounded segments
/// `(start, length, level)` plus the terminal `(start, level)`.
struct StepProfile {
    segments: Vec<(f64, f64, f64)>,
    tail_start: f64,
    tail_level: f64,
    /// Cumulative `∫_0^{start} γ` per segment, then at the tail start.
    cum: Vec<f64>,
    tail_cum: f64,
}

impl StepProfile {
    fn from_curve(curve: &Curve, spec: &ModelSpec) -> Self {
        let raw: Vec<(f64, Option<f64>, f64)> = if curve.is_step() {
            curve
                .segments()
                .iter()
                .map(|s| (s.start, s.end, s.value_at_start))
                .collect()
        } else {
            // lower to grid-cell averages; exact cumulative at cell edges
            let grid = &spec.age_grid;
            let mut out = Vec::with_capacity(grid.count() + 1);
            for m in 0..grid.count() {
                let g = (curve.integral(grid.age(m + 1)) - curve.integral(grid.age(m)))
                    / grid.delta();
                out.push((grid.age(m), Some(grid.age(m + 1)), g));
            }
            out.push((grid.max_age(), None, curve.eval(grid.max_age())));
            out
        };
        let mut segments = Vec::new();
        let mut cum = Vec::new();
        let mut acc = 0.0;
        let mut tail = (0.0, 0.0);
        let mut tail_cum = 0.0;
        for (start, end, level) in raw {
            match end {
                Some(e) => {
                    segments.push((start, e - start, level));
                    cum.push(acc);
                    acc += (e - start) * level;
                }
                None => {
                    tail = (start, level);
                    tail_cum = acc;
                }
            }
        }
        Self {
            segments,
            tail_start: tail.0,
            tail_level: tail.1,
            cum,
            tail_cum,
        }
    }
}

/// Quadratures of one atom against `e^{-x ∫γ}` with complex shift `α`.
pub struct AtomQuadrature {
    gamma: StepProfile,
    /// Affine infectivity segments `(start, length, value_at_start, slope)`.
    lambda_segs: Vec<(f64, f64, f64, f64)>,
    x: f64,
}

impl AtomQuadrature {
    pub fn new(spec: &ModelSpec, atom: usize, x: f64) -> Result<Self, StabilityError> {
        let lam = spec.lambda(atom);
        if lam.terminal_level() != 0.0 {
            return Err(StabilityError::LambdaNotIntegrable(lam.terminal_level()));
        }
        let lambda_segs = lam
            .segments()
            .iter()
            .filter_map(|s| {
                s.end
                    .map(|e| (s.start, e - s.start, s.value_at_start, s.slope))
            })
            .collect();
        Ok(Self {
            gamma: StepProfile::from_curve(spec.gamma(atom), spec),
            lambda_segs,
            x,
        })
    }

    fn check_tail(&self, alpha: Complex64) -> Result<(), StabilityError> {
        let min_re = -self.x * self.gamma.tail_level;
        if alpha.re <= min_re {
            return Err(StabilityError::TailDivergent {
                re_alpha: alpha.re,
                min_re,
            });
        }
        Ok(())
    }

    /// `∫_0^∞ e^{-x G(a)} e^{-α a} da` with `G = ∫_0^a γ`.
    pub fn survival_transform(&self, alpha: Complex64) -> Result<Complex64, StabilityError> {
        self.check_tail(alpha)?;
        let mut total = Complex64::new(0.0, 0.0);
        for (k, &(start, len, level)) in self.gamma.segments.iter().enumerate() {
            let scale = (-Complex64::new(self.x * self.gamma.cum[k], 0.0) - alpha * start).exp();
            total += scale * seg_exp(Complex64::new(self.x * level, 0.0) + alpha, len);
        }
        let scale = (-Complex64::new(self.x * self.gamma.tail_cum, 0.0)
            - alpha * self.gamma.tail_start)
            .exp();
        total += scale / (Complex64::new(self.x * self.gamma.tail_level, 0.0) + alpha);
        Ok(total)
    }

    /// `∫_0^∞ λ(a) e^{-α a} da` (exact for affine segments).
    pub fn lambda_transform(&self, alpha: Complex64) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for &(start, len, v0, slope) in &self.lambda_segs {
            if v0 == 0.0 && slope == 0.0 {
                continue;
            }
            let scale = (-alpha * start).exp();
            let z = alpha * len;
            total += scale * (v0 * seg_exp(alpha, len) + slope * len * len * xem1(z));
        }
        total
    }

    /// `∫_0^∞ e^{-x G(a)} (∫_0^a γ(b) e^{-α (a-b)} db) da`.
    pub fn killed_susceptibility_transform(
        &self,
        alpha: Complex64,
    ) -> Result<Complex64, StabilityError> {
        self.check_tail(alpha)?;
        let mut total = Complex64::new(0.0, 0.0);
        let mut j = Complex64::new(0.0, 0.0); // J(s_k) = ∫_0^{s_k} γ e^{-α(s_k - b)} db
        for (k, &(_, len, level)) in self.gamma.segments.iter().enumerate() {
            let decay = (-Complex64::new(self.x * self.gamma.cum[k], 0.0)).exp();
            let xg = self.x * level;
            // ∫_0^L e^{-xg t} [J e^{-αt} + g t-part] dt, with the g-part via
            // the stable divided difference of segment exponentials
            let part_j = j * seg_exp(Complex64::new(xg, 0.0) + alpha, len);
            let part_g = level * seg_exp_diff(xg, alpha, len);
            total += decay * (part_j + part_g);
            j = j * (-alpha * len).exp() + level * seg_exp(alpha, len);
        }
        let decay = (-Complex64::new(self.x * self.gamma.tail_cum, 0.0)).exp();
        let g = self.gamma.tail_level;
        let denom = Complex64::new(self.x * g, 0.0) + alpha;
        // tail: ∫_0^∞ e^{-xg t}[J e^{-αt} + (g/α)(1 - e^{-αt})] dt simplifies
        // to J/(xg + α) + 1/(x (xg + α)) with no small-α hazard
        total += decay * (j / denom + Complex64::new(1.0 / self.x, 0.0) / denom);
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AgeGrid, InitialDensity, MemoryKernel, ModelSpec, TraitSpace};

    fn sis_spec() -> ModelSpec {
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

    /// Dense Simpson reference for the complex transforms.
    fn simpson_c(a: f64, b: f64, n: usize, f: impl Fn(f64) -> Complex64) -> Complex64 {
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * (h / 3.0)
    }

    #[test]
    fn survival_transform_matches_reference() {
        // SIS: u*/F*S* profile e^{-x(a-1)_+}; x = 1
        let spec = sis_spec();
        let q = AtomQuadrature::new(&spec, 0, 1.0).unwrap();
        for &alpha in &[
            Complex64::new(0.0, 0.0),
            Complex64::new(0.5, 2.0),
            Complex64::new(0.0, 40.0),
            Complex64::new(-0.3, 7.0),
        ] {
            let got = q.survival_transform(alpha).unwrap();
            // closed form: ∫_0^1 e^{-αa} + e^{α... } tail from 1
            let body = if alpha.norm() < 1e-12 {
                Complex64::new(1.0, 0.0)
            } else {
                (Complex64::new(1.0, 0.0) - (-alpha).exp()) / alpha
            };
            let tail = (-alpha).exp() / (alpha + 1.0);
            let expect = body + tail;
            assert!((got - expect).norm() < 1e-12, "α={alpha}: {got} vs {expect}");
        }
    }

    #[test]
    fn lambda_transform_matches_reference() {
        let spec = sis_spec();
        let q = AtomQuadrature::new(&spec, 0, 1.0).unwrap();
        for &alpha in &[Complex64::new(0.0, 0.0), Complex64::new(1.0, -3.0)] {
            let got = q.lambda_transform(alpha);
            let expect = if alpha.norm() < 1e-12 {
                Complex64::new(2.0, 0.0)
            } else {
                2.0 * (Complex64::new(1.0, 0.0) - (-alpha).exp()) / alpha
            };
            assert!((got - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn killed_transform_matches_printed_sis_value() {
        // paper closed form: ∫ u* ∫_0^a γ(b) e^{-α(a-b)} db da = 1/(R0 (F*+α))
        // so the unscaled version (u*/(F*S*)) equals 1/(F*(F*+α)) with S*=1/R0.
        let spec = sis_spec();
        let f_star = 1.0;
        let q = AtomQuadrature::new(&spec, 0, f_star).unwrap();
        for &alpha in &[
            Complex64::new(0.0, 0.0),
            Complex64::new(0.7, 5.0),
            Complex64::new(0.0, 33.0),
            Complex64::new(1e-9, 1e-9),
        ] {
            let got = q.killed_susceptibility_transform(alpha).unwrap();
            let expect = Complex64::new(1.0, 0.0) / (f_star * (alpha + f_star));
            assert!(
                (got - expect).norm() < 1e-11,
                "α={alpha}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn killed_transform_against_simpson_for_one_shot() {
        // γ with two positive levels: independent dense quadrature oracle
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
        let x = 2.9475;
        let q = AtomQuadrature::new(&spec, 0, x).unwrap();
        let gamma = spec.gamma(0).clone();
        let alpha = Complex64::new(0.4, 3.0);
        // piecewise Simpson split at the γ breakpoints so every panel is smooth
        let splits = |hi: f64| -> Vec<f64> {
            let mut pts: Vec<f64> = [0.0, 1.0, 2.0, hi].iter().cloned().filter(|&p| p <= hi).collect();
            if *pts.last().unwrap() < hi {
                pts.push(hi);
            }
            pts.dedup();
            pts
        };
        let inner = |a: f64| {
            if a == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let pts = splits(a);
            let mut acc = Complex64::new(0.0, 0.0);
            for w in pts.windows(2) {
                // γ is constant within a panel; evaluating it at endpoints
                // would pick up the wrong one-sided limit at breakpoints
                let level = gamma.eval(0.5 * (w[0] + w[1]));
                if level != 0.0 {
                    acc += simpson_c(w[0], w[1], 512, |b| level * (-alpha * (a - b)).exp());
                }
            }
            acc
        };
        let pts = splits(40.0);
        let mut outer = Complex64::new(0.0, 0.0);
        for w in pts.windows(2) {
            outer += simpson_c(w[0], w[1], 2000, |a| {
                Complex64::new((-x * gamma.integral(a)).exp(), 0.0) * inner(a)
            });
        }
        let got = q.killed_susceptibility_transform(alpha).unwrap();
        assert!(
            (got - outer).norm() < 1e-8,
            "{got} vs piecewise Simpson {outer}"
        );
    }

    #[test]
    fn tail_divergence_detected() {
        let spec = sis_spec();
        let q = AtomQuadrature::new(&spec, 0, 1.0).unwrap();
        let alpha = Complex64::new(-1.5, 0.0);
        assert!(matches!(
            q.survival_transform(alpha),
            Err(StabilityError::TailDivergent { .. })
        ));
    }
}
