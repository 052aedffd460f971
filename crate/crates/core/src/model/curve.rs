//! Age-indexed curves for infectivity and susceptibility.
//!
//! A [`Curve`] maps ages `a >= 0` to nonnegative values and is either a step
//! function (right-continuous, constant between breakpoints) or a piecewise
//! linear interpolant. Beyond its last knot every curve extends by its final
//! level, so curves are evaluable at any age. Cumulative integrals are exact.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CurveError {
    #[error("curve requires at least one level/knot")]
    Empty,
    #[error("breakpoints/knot ages must be finite, nonnegative and strictly ascending")]
    BadKnots,
    #[error("step curve needs exactly one more level than breakpoints")]
    LengthMismatch,
    #[error("curve values must be finite")]
    NonFiniteValue,
    #[error("curve evaluated at negative age {0}")]
    NegativeAge(f64),
}

/// Right-continuous step function: `levels[k]` on `[breakpoints[k-1], breakpoints[k])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCurve {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

/// Piecewise linear interpolant of `(age, value)` knots, constant outside.
///
/// A repeated knot age encodes a jump: `(a, v_left), (a, v_right)` with the
/// curve right-continuous at `a`. Renewal-path susceptibilities need this
/// to drop back to zero at vaccination times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlCurve {
    knots: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CurveForm {
    Step(StepCurve),
    PiecewiseLinear(PlCurve),
}

/// One maximal interval on which the curve is affine.
///
/// `end == None` marks the unbounded terminal segment (slope is then `0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: Option<f64>,
    pub value_at_start: f64,
    pub slope: f64,
}

impl Segment {
    pub fn len(&self) -> f64 {
        match self.end {
            Some(e) => e - self.start,
            None => f64::INFINITY,
        }
    }

    pub fn value_at(&self, a: f64) -> f64 {
        self.value_at_start + self.slope * (a - self.start)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    form: CurveForm,
    /// Long-run Cesàro mean override, carried by renewal-path curves whose
    /// analytic mean is known from the renewal theorem.
    cesaro_mean: Option<f64>,
}

impl Curve {
    pub fn step(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self, CurveError> {
        if levels.is_empty() {
            return Err(CurveError::Empty);
        }
        if levels.len() != breakpoints.len() + 1 {
            return Err(CurveError::LengthMismatch);
        }
        check_ascending(&breakpoints)?;
        if levels.iter().any(|v| !v.is_finite()) {
            return Err(CurveError::NonFiniteValue);
        }
        Ok(Self {
            form: CurveForm::Step(StepCurve {
                breakpoints,
                levels,
            }),
            cesaro_mean: None,
        })
    }

    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self, CurveError> {
        if knots.is_empty() {
            return Err(CurveError::Empty);
        }
        for (i, k) in knots.iter().enumerate() {
            if !k.0.is_finite() || k.0 < 0.0 || !k.1.is_finite() {
                return Err(if k.1.is_finite() {
                    CurveError::BadKnots
                } else {
                    CurveError::NonFiniteValue
                });
            }
            if i > 0 {
                // non-decreasing; an age may repeat once to encode a jump
                if k.0 < knots[i - 1].0 {
                    return Err(CurveError::BadKnots);
                }
                if i > 1 && k.0 == knots[i - 1].0 && k.0 == knots[i - 2].0 {
                    return Err(CurveError::BadKnots);
                }
            }
        }
        Ok(Self {
            form: CurveForm::PiecewiseLinear(PlCurve { knots }),
            cesaro_mean: None,
        })
    }

    pub fn constant(level: f64) -> Self {
        Self::step(vec![], vec![level]).expect("constant curve")
    }

    /// `level` on `[0, until)`, zero afterwards.
    pub fn level_before(until: f64, level: f64) -> Result<Self, CurveError> {
        Self::step(vec![until], vec![level, 0.0])
    }

    /// Zero on `[0, from)`, `level` afterwards.
    pub fn level_from(from: f64, level: f64) -> Result<Self, CurveError> {
        Self::step(vec![from], vec![0.0, level])
    }

    pub fn with_cesaro_mean(mut self, mean: f64) -> Self {
        self.cesaro_mean = Some(mean);
        self
    }

    pub fn cesaro_mean_hint(&self) -> Option<f64> {
        self.cesaro_mean
    }

    pub fn is_step(&self) -> bool {
        matches!(self.form, CurveForm::Step(_))
    }

    pub fn form(&self) -> &CurveForm {
        &self.form
    }

    /// Value at age `a >= 0`. Panics on negative ages; `try_eval` reports them.
    pub fn eval(&self, a: f64) -> f64 {
        self.try_eval(a).expect("age must be nonnegative")
    }

    pub fn try_eval(&self, a: f64) -> Result<f64, CurveError> {
        if !(a >= 0.0) {
            return Err(CurveError::NegativeAge(a));
        }
        Ok(match &self.form {
            CurveForm::Step(s) => {
                let idx = s.breakpoints.partition_point(|&b| b <= a);
                s.levels[idx]
            }
            CurveForm::PiecewiseLinear(p) => {
                let k = &p.knots;
                if a <= k[0].0 {
                    k[0].1
                } else if a >= k[k.len() - 1].0 {
                    k[k.len() - 1].1
                } else {
                    let i = k.partition_point(|kn| kn.0 <= a);
                    let (a0, v0) = k[i - 1];
                    let (a1, v1) = k[i];
                    v0 + (v1 - v0) * (a - a0) / (a1 - a0)
                }
            }
        })
    }

    /// Exact cumulative integral `∫_0^a` of the curve.
    pub fn integral(&self, a: f64) -> f64 {
        assert!(a >= 0.0, "age must be nonnegative");
        let mut acc = 0.0;
        for seg in self.segments() {
            if seg.start >= a {
                break;
            }
            let hi = match seg.end {
                Some(e) => e.min(a),
                None => a,
            };
            let len = hi - seg.start;
            let v0 = seg.value_at_start;
            acc += len * (v0 + 0.5 * seg.slope * len);
        }
        acc
    }

    /// `∫_0^∞` when finite (terminal level zero), `None` otherwise.
    pub fn total_integral(&self) -> Option<f64> {
        if self.terminal_level() != 0.0 {
            return None;
        }
        Some(self.integral(self.last_knot()))
    }

    /// Level the curve keeps beyond its last knot.
    pub fn terminal_level(&self) -> f64 {
        match &self.form {
            CurveForm::Step(s) => *s.levels.last().unwrap(),
            CurveForm::PiecewiseLinear(p) => p.knots.last().unwrap().1,
        }
    }

    /// Age of the last breakpoint/knot (0 for constant curves).
    pub fn last_knot(&self) -> f64 {
        match &self.form {
            CurveForm::Step(s) => s.breakpoints.last().copied().unwrap_or(0.0),
            CurveForm::PiecewiseLinear(p) => p.knots.last().unwrap().0,
        }
    }

    /// Maximal affine pieces in age order; the last one is unbounded.
    pub fn segments(&self) -> Vec<Segment> {
        match &self.form {
            CurveForm::Step(s) => {
                let mut out = Vec::with_capacity(s.levels.len());
                let mut start = 0.0;
                for (k, &b) in s.breakpoints.iter().enumerate() {
                    if b > start {
                        out.push(Segment {
                            start,
                            end: Some(b),
                            value_at_start: s.levels[k],
                            slope: 0.0,
                        });
                    }
                    start = b;
                }
                out.push(Segment {
                    start,
                    end: None,
                    value_at_start: *s.levels.last().unwrap(),
                    slope: 0.0,
                });
                out
            }
            CurveForm::PiecewiseLinear(p) => {
                let k = &p.knots;
                let mut out = Vec::with_capacity(k.len() + 1);
                if k[0].0 > 0.0 {
                    out.push(Segment {
                        start: 0.0,
                        end: Some(k[0].0),
                        value_at_start: k[0].1,
                        slope: 0.0,
                    });
                }
                for w in k.windows(2) {
                    let (a0, v0) = w[0];
                    let (a1, v1) = w[1];
                    if a1 > a0 {
                        out.push(Segment {
                            start: a0,
                            end: Some(a1),
                            value_at_start: v0,
                            slope: (v1 - v0) / (a1 - a0),
                        });
                    }
                }
                let last = *k.last().unwrap();
                out.push(Segment {
                    start: last.0,
                    end: None,
                    value_at_start: last.1,
                    slope: 0.0,
                });
                out
            }
        }
    }

    /// Supremum of `{a : value(a) > tol}`; `None` if the set is unbounded,
    /// `Some(0.0)` if it is empty.
    pub fn support_sup(&self, tol: f64) -> Option<f64> {
        if self.terminal_level() > tol {
            return None;
        }
        let mut sup = 0.0f64;
        for seg in self.segments() {
            let Some(end) = seg.end else { continue };
            let v0 = seg.value_at_start;
            let v1 = seg.value_at(end);
            if v0 <= tol && v1 <= tol {
                continue;
            }
            if v1 > tol {
                sup = end;
            } else {
                // slope < 0 here: value crosses tol inside the segment
                sup = sup.max(seg.start + (tol - v0) / seg.slope);
            }
        }
        Some(sup)
    }

    /// Infimum of `{a : value(a) > tol}`; `None` if the set is empty.
    pub fn support_inf(&self, tol: f64) -> Option<f64> {
        for seg in self.segments() {
            let v0 = seg.value_at_start;
            if v0 > tol {
                return Some(seg.start);
            }
            match seg.end {
                Some(end) => {
                    let v1 = seg.value_at(end);
                    if v1 > tol {
                        return Some(seg.start + (tol - v0) / seg.slope);
                    }
                }
                None => return None,
            }
        }
        None
    }

    /// Maximum value over all ages (affine pieces attain extrema at ends).
    pub fn max_value(&self) -> f64 {
        let mut m = self.terminal_level();
        for seg in self.segments() {
            m = m.max(seg.value_at_start);
            if let Some(end) = seg.end {
                m = m.max(seg.value_at(end));
            }
        }
        m
    }

    /// Minimum value over all ages.
    pub fn min_value(&self) -> f64 {
        self.min_value_from(0.0)
    }

    /// Minimum value over `[from, ∞)`.
    pub fn min_value_from(&self, from: f64) -> f64 {
        let mut m = f64::INFINITY;
        for seg in self.segments() {
            let hi = seg.end;
            if let Some(end) = hi {
                if end <= from {
                    continue;
                }
            }
            let lo = seg.start.max(from);
            m = m.min(seg.value_at(lo));
            if let Some(end) = hi {
                m = m.min(seg.value_at(end));
            }
        }
        m.min(self.terminal_level())
    }
}

fn check_ascending(ages: &[f64]) -> Result<(), CurveError> {
    for (i, &a) in ages.iter().enumerate() {
        if !a.is_finite() || a < 0.0 {
            return Err(CurveError::BadKnots);
        }
        if i > 0 && a <= ages[i - 1] {
            return Err(CurveError::BadKnots);
        }
    }
    Ok(())
}

/// [`Curve::try_eval`] as a free function matching the operation contract.
pub fn eval_curve(curve: &Curve, age: f64) -> Result<f64, CurveError> {
    curve.try_eval(age)
}
