use nalgebra::DVector;

use super::quadrature::{self, ABS_TOL, REL_TOL};
use super::sum::CompensatedSum;
use super::{GridFunction, Piece, Point, TimeScale};
use crate::error::{Error, Result};

/// Delta integral `∫_a^b f(t) Δt`.
///
/// Right-scattered points in `[a, b)` contribute `f(t) μ(t)`; continuous runs
/// are integrated with adaptive Gauss–Kronrod. Contributions are accumulated
/// in ascending `t` with compensated summation.
pub fn delta_integral(
    ts: &TimeScale,
    f: &dyn GridFunction,
    a: &Point,
    b: &Point,
) -> Result<DVector<f64>> {
    let mut acc = CompensatedSum::new(f.dim());
    let scattered = |acc: &mut CompensatedSum, p: &Point| {
        if p < b {
            let mu = ts.mu(p);
            if mu > 0.0 {
                acc.add(&(f.eval(p) * mu));
            }
        }
    };
    for piece in ts.points_between(a, b)? {
        match piece {
            Piece::Point(p) => scattered(&mut acc, &p),
            Piece::Interval(lo, hi) => {
                let segment = lo.segment();
                let v = quadrature::integrate(
                    |t| f.eval(&Point::dense(segment, t)),
                    lo.t(),
                    hi.t(),
                    ABS_TOL,
                    REL_TOL,
                )?;
                acc.add(&v);
                scattered(&mut acc, &hi);
            }
        }
    }
    Ok(acc.total())
}

/// Result of [`delta_derivative_numeric`].
#[derive(Clone, Debug, PartialEq)]
pub struct Derivative {
    pub value: DVector<f64>,
    /// Finite-difference step used at a right-dense point; `None` when the
    /// value is the exact difference quotient across a scattered point.
    pub step: Option<f64>,
}

/// Delta derivative: exact difference quotient at right-scattered points,
/// second-order finite differences at right-dense points.
pub fn delta_derivative_numeric(
    ts: &TimeScale,
    f: &dyn GridFunction,
    p: &Point,
) -> Result<Derivative> {
    if ts.is_left_scattered_max(p) {
        return Err(Error::KappaViolation { t: p.t() });
    }
    let class = ts.classify(p);
    if class.is_right_scattered() {
        let s = ts.sigma(p);
        let value = (f.eval(&s) - f.eval(p)) / ts.mu(p);
        return Ok(Derivative { value, step: None });
    }
    let t = p.t();
    let h = 1e-6f64.max(1e-6 * t.abs());
    if let Some((a, b)) = ts.interval_bounds(p) {
        let seg = p.segment();
        let at = |x: f64| f.eval(&Point::dense(seg, x));
        let h = h.min(0.5 * (b - a));
        let value = if t - h >= a && t + h <= b {
            (at(t + h) - at(t - h)) / (2.0 * h)
        } else if t + 2.0 * h <= b {
            (at(t) * -3.0 + at(t + h) * 4.0 - at(t + 2.0 * h)) / (2.0 * h)
        } else {
            (at(t) * 3.0 - at(t - h) * 4.0 + at(t - 2.0 * h)) / (2.0 * h)
        };
        return Ok(Derivative {
            value,
            step: Some(h),
        });
    }
    // Right-dense condensation limit: backward quotient against the family.
    let seg = p.segment();
    let mut n = 0u32;
    let mut q = ts.condensation_point(seg, 0).ok_or(Error::KappaViolation { t })?;
    while q.gap_to_limit().unwrap() > h && n < 2000 {
        n += 1;
        q = ts.condensation_point(seg, n).unwrap();
    }
    let gap = q.gap_to_limit().unwrap();
    Ok(Derivative {
        value: (f.eval(p) - f.eval(&q)) / gap,
        step: Some(gap),
    })
}

/// Time-scale exponential `e_p(t, t0)`: the solution of `y^Δ = p(t) y`, `y(t0) = 1`.
pub fn exp_function(ts: &TimeScale, p: &dyn GridFunction, t: &Point, t0: &Point) -> Result<f64> {
    if t < t0 {
        return Ok(1.0 / exp_function(ts, p, t0, t)?);
    }
    let scalar = |x: &Point| p.eval(x)[0];
    let mut value = 1.0;
    let step = |value: &mut f64, x: &Point| -> Result<()> {
        if x < t {
            let mu = ts.mu(x);
            if mu > 0.0 {
                let factor = 1.0 + mu * scalar(x);
                if factor.abs() <= f64::EPSILON {
                    return Err(Error::NotRegressive { t: x.t() });
                }
                *value *= factor;
            }
        }
        Ok(())
    };
    for piece in ts.points_between(t0, t)? {
        match piece {
            Piece::Point(x) => step(&mut value, &x)?,
            Piece::Interval(lo, hi) => {
                let segment = lo.segment();
                let integral = quadrature::integrate(
                    |s| DVector::from_element(1, scalar(&Point::dense(segment, s))),
                    lo.t(),
                    hi.t(),
                    ABS_TOL * 1e-3,
                    REL_TOL * 1e-3,
                )?;
                value *= integral[0].exp();
                step(&mut value, &hi)?;
            }
        }
    }
    Ok(value)
}
