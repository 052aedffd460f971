//! Exact quadrature of exponentials killed by a cumulative curve integral.
//!
//! Everything endemic rests on integrals `∫ exp(-x ∫_0^a γ(s) ds) da`. For
//! step curves these have closed forms per segment; piecewise linear
//! segments use Gauss-Legendre panels sized so the exponent varies by at
//! most 2 per panel. The tail beyond the last knot is integrated in closed
//! form with the terminal level, so truncation never biases the result.

use crate::math::{em1_over, gauss_legendre_16};
use crate::model::{Curve, Segment};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QuadError {
    #[error("tail integral diverges: terminal susceptibility level is zero")]
    TailDivergent,
}

/// A curve together with its cumulative integral at segment starts.
pub struct DecayKernel {
    segs: Vec<Segment>,
    cum_at_start: Vec<f64>,
}

impl DecayKernel {
    pub fn new(curve: &Curve) -> Self {
        let segs = curve.segments();
        let mut cum_at_start = Vec::with_capacity(segs.len());
        let mut acc = 0.0;
        for seg in &segs {
            cum_at_start.push(acc);
            if let Some(end) = seg.end {
                let len = end - seg.start;
                acc += len * (seg.value_at_start + 0.5 * seg.slope * len);
            }
        }
        Self { segs, cum_at_start }
    }

    /// `G(a) = ∫_0^a γ(s) ds`, exact.
    pub fn cumulative(&self, a: f64) -> f64 {
        let idx = self
            .segs
            .partition_point(|s| s.start <= a)
            .saturating_sub(1);
        let seg = &self.segs[idx];
        let d = a - seg.start;
        self.cum_at_start[idx] + d * (seg.value_at_start + 0.5 * seg.slope * d)
    }

    pub fn terminal_level(&self) -> f64 {
        self.segs.last().unwrap().value_at_start
    }

    pub fn last_knot(&self) -> f64 {
        self.segs.last().unwrap().start
    }

    /// `∫_{a0}^{a1} exp(-x G(a)) da` with `x ≥ 0`; `a1 = ∞` allowed.
    pub fn exp_integral(&self, x: f64, a0: f64, a1: f64) -> Result<f64, QuadError> {
        assert!(x >= 0.0 && a0 >= 0.0 && a1 >= a0);
        let mut total = 0.0;
        for (idx, seg) in self.segs.iter().enumerate() {
            let lo = seg.start.max(a0);
            let hi = match seg.end {
                Some(end) => end.min(a1),
                None => a1,
            };
            if hi <= lo {
                if seg.start >= a1 {
                    break;
                }
                continue;
            }
            let g_lo = {
                let d = lo - seg.start;
                self.cum_at_start[idx] + d * (seg.value_at_start + 0.5 * seg.slope * d)
            };
            let v_lo = seg.value_at(lo);
            if hi.is_infinite() {
                // terminal segment to infinity: constant level
                let g = self.terminal_level();
                if x * g <= 0.0 {
                    return Err(QuadError::TailDivergent);
                }
                total += (-x * g_lo).exp() / (x * g);
                break;
            }
            let len = hi - lo;
            if seg.slope == 0.0 {
                // exact: exp(-x(g_lo + v (a-lo)))
                total += (-x * g_lo).exp() * len * em1_over(x * v_lo * len);
            } else {
                // exponent is quadratic in a: panels sized by its variation
                let d_hi = hi - seg.start;
                let g_hi = self.cum_at_start[idx]
                    + d_hi * (seg.value_at_start + 0.5 * seg.slope * d_hi);
                let var = x * (g_hi - g_lo).abs();
                let panels = (var / 2.0).ceil().max(1.0) as usize;
                let step = len / panels as f64;
                for p in 0..panels {
                    let plo = lo + p as f64 * step;
                    let phi = plo + step;
                    total += gauss_legendre_16(plo, phi, |a| {
                        let d = a - seg.start;
                        let g = self.cum_at_start[idx]
                            + d * (seg.value_at_start + 0.5 * seg.slope * d);
                        (-x * g).exp()
                    });
                }
            }
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sis_survival_integral_closed_form() {
        // γ = 1_{a >= T}: ∫_0^∞ e^{-x G} = T + 1/x
        let g = Curve::level_from(3.0, 1.0).unwrap();
        let k = DecayKernel::new(&g);
        for &x in &[0.5, 1.0, 2.947] {
            let v = k.exp_integral(x, 0.0, f64::INFINITY).unwrap();
            assert!((v - (3.0 + 1.0 / x)).abs() < 1e-12, "x={x} v={v}");
        }
    }

    #[test]
    fn one_shot_survival_matches_printed_form() {
        // γ = α 1_{T_R <= a < T_V} + β 1_{a >= T_V}:
        // x ∫ e^{-xG} = x T_R + 1/α - e^{-xα(T_V - T_R)} (1/α - 1/β)
        let (alpha, beta, tr, tv) = (1.0, 0.5, 1.0, 2.0);
        let g = Curve::step(vec![tr, tv], vec![0.0, alpha, beta]).unwrap();
        let k = DecayKernel::new(&g);
        for &x in &[0.1, 1.0, 2.9475, 10.0] {
            let v = x * k.exp_integral(x, 0.0, f64::INFINITY).unwrap();
            let expect = x * tr + 1.0 / alpha
                - (-x * alpha * (tv - tr)).exp() * (1.0 / alpha - 1.0 / beta);
            assert!((v - expect).abs() < 1e-12, "x={x}: {v} vs {expect}");
        }
    }

    #[test]
    fn zero_terminal_level_tail_diverges() {
        let g = Curve::step(vec![1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
        let k = DecayKernel::new(&g);
        assert_eq!(
            k.exp_integral(1.0, 0.0, f64::INFINITY),
            Err(QuadError::TailDivergent)
        );
        // bounded ranges stay fine
        assert!(k.exp_integral(1.0, 0.0, 5.0).is_ok());
    }

    #[test]
    fn ramp_integral_matches_erf_free_reference() {
        // γ(a) = a on [0, 2] then 2: G(a) = a²/2 then 2a - 2.
        let g = Curve::piecewise_linear(vec![(0.0, 0.0), (2.0, 2.0)]).unwrap();
        let k = DecayKernel::new(&g);
        let x = 1.7;
        // dense Simpson reference on [0, 2]
        let n = 200_000;
        let h = 2.0 / n as f64;
        let f = |a: f64| (-x * if a <= 2.0 { a * a / 2.0 } else { 2.0 * a - 2.0 }).exp();
        let mut simpson = f(0.0) + f(2.0);
        for i in 1..n {
            simpson += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        simpson *= h / 3.0;
        let tail = (-x * 2.0f64).exp() / (2.0 * x);
        let v = k.exp_integral(x, 0.0, f64::INFINITY).unwrap();
        assert!((v - (simpson + tail)).abs() < 1e-10, "{v} vs {}", simpson + tail);
    }

    #[test]
    fn subinterval_integrals_add_up() {
        let g = Curve::step(vec![1.0, 2.0], vec![0.0, 0.7, 0.4]).unwrap();
        let k = DecayKernel::new(&g);
        let x = 1.3;
        let whole = k.exp_integral(x, 0.0, f64::INFINITY).unwrap();
        let parts = k.exp_integral(x, 0.0, 1.5).unwrap()
            + k.exp_integral(x, 1.5, 4.0).unwrap()
            + k.exp_integral(x, 4.0, f64::INFINITY).unwrap();
        assert!((whole - parts).abs() < 1e-13);
    }

    #[test]
    fn cumulative_agrees_with_curve_integral() {
        let g = Curve::piecewise_linear(vec![(0.5, 0.0), (1.5, 1.0), (3.0, 0.25)]).unwrap();
        let k = DecayKernel::new(&g);
        for &a in &[0.0, 0.4, 0.5, 1.0, 2.0, 3.5, 10.0] {
            assert!((k.cumulative(a) - g.integral(a)).abs() < 1e-13);
        }
    }
}
