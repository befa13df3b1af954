use std::sync::Mutex;

use nalgebra::DVector;

use super::ShiftOperator;
use crate::error::{Error, Result};
use crate::scale::{delta_integral, vector_fn, GridFunction, Piece, Point, Segment, TimeScale};

pub const DEFAULT_VERIFY_TOL: f64 = 1e-9;
const NODES_PER_INTERVAL: usize = 64;
const RATIO_FLOOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    DeltaPeriodic,
    QuasiPeriodic,
    None,
}

impl std::fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CertificateKind::DeltaPeriodic => "delta_periodic",
            CertificateKind::QuasiPeriodic => "quasi_periodic",
            CertificateKind::None => "none",
        })
    }
}

/// Outcome of checking `f(δ₊(T, t)) δ₊^Δ(T, t) = γ f(t)` on a sample set.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PeriodicityCertificate {
    pub kind: CertificateKind,
    pub period: f64,
    pub gamma: f64,
    pub max_residual: f64,
    pub sample_count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    pub tolerance: f64,
    /// Measure residuals relative to `max(1, ‖f(t)‖)`.
    pub relative: bool,
    /// Also check the backward shift (Δ-periodic certificate only).
    pub check_backward: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            tolerance: DEFAULT_VERIFY_TOL,
            relative: false,
            check_backward: false,
        }
    }
}

/// Default sample set for `[a, b]_T`: every right-scattered point plus 64
/// evenly spaced nodes on each continuous run.
pub fn sample_points(ts: &TimeScale, a: &Point, b: &Point) -> Result<Vec<Point>> {
    let mut out = Vec::new();
    for piece in ts.points_between(a, b)? {
        match piece {
            Piece::Point(p) => {
                if ts.classify(&p).is_right_scattered() {
                    out.push(p);
                }
            }
            Piece::Interval(lo, hi) => {
                let n = NODES_PER_INTERVAL;
                for i in 0..n {
                    let t = lo.t() + (hi.t() - lo.t()) * i as f64 / (n - 1) as f64;
                    out.push(ts.point(t)?);
                }
            }
        }
    }
    Ok(out)
}

fn check_period(op: &ShiftOperator, period: f64) -> Result<()> {
    if period < op.scale_period() * (1.0 - 1e-12) {
        return Err(Error::PeriodBelowScalePeriod {
            period,
            scale_period: op.scale_period(),
        });
    }
    Ok(())
}

fn scaled(residual: f64, reference: &DVector<f64>, opts: &VerifyOptions) -> f64 {
    if opts.relative {
        residual / reference.norm().max(1.0)
    } else {
        residual
    }
}

/// Pairs `(f(δ(T, t)) δ^Δ(T, t), f(t))` for each sample whose shift stays on the scale.
fn shifted_pairs(
    ts: &TimeScale,
    op: &ShiftOperator,
    f: &dyn GridFunction,
    period: f64,
    samples: &[Point],
    backward: bool,
) -> Result<Vec<(DVector<f64>, DVector<f64>)>> {
    let mut out = Vec::with_capacity(samples.len());
    for p in samples {
        let shifted = if backward {
            op.backward(ts, period, p)
        } else {
            op.forward(ts, period, p)
        };
        let Ok(image) = shifted else { continue };
        let d = if backward {
            op.backward_delta_derivative(ts, period, p)?
        } else {
            op.forward_delta_derivative(ts, period, p)?
        };
        out.push((f.eval(&image) * d, f.eval(p)));
    }
    Ok(out)
}

/// Certify `f(δ₊(T, t)) δ₊^Δ(T, t) = f(t)` on the samples.
pub fn verify_delta_periodic(
    ts: &TimeScale,
    op: &ShiftOperator,
    f: &dyn GridFunction,
    period: f64,
    samples: &[Point],
    opts: &VerifyOptions,
) -> Result<PeriodicityCertificate> {
    check_period(op, period)?;
    let mut pairs = shifted_pairs(ts, op, f, period, samples, false)?;
    let forward_count = pairs.len();
    if opts.check_backward {
        pairs.extend(shifted_pairs(ts, op, f, period, samples, true)?);
    }
    let max_residual = pairs
        .iter()
        .map(|(lhs, rhs)| scaled((lhs - rhs).norm(), rhs, opts))
        .fold(0.0, f64::max);
    let ok = forward_count > 0 && max_residual <= opts.tolerance;
    Ok(PeriodicityCertificate {
        kind: if ok {
            CertificateKind::DeltaPeriodic
        } else {
            CertificateKind::None
        },
        period,
        gamma: 1.0,
        max_residual,
        sample_count: pairs.len(),
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Certify `f(δ₊(T, t)) δ₊^Δ(T, t) = γ f(t)`, estimating `γ` as the median of
/// pointwise ratios.
pub fn verify_quasiperiodic(
    ts: &TimeScale,
    op: &ShiftOperator,
    f: &dyn GridFunction,
    period: f64,
    samples: &[Point],
    opts: &VerifyOptions,
) -> Result<PeriodicityCertificate> {
    check_period(op, period)?;
    let pairs = shifted_pairs(ts, op, f, period, samples, false)?;
    let scale = pairs.iter().map(|(_, w)| w.amax()).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::DegenerateFunction);
    }
    let floor = RATIO_FLOOR * scale;
    let ratios: Vec<f64> = pairs
        .iter()
        .flat_map(|(v, w)| {
            v.iter()
                .zip(w.iter())
                .filter(|(_, wj)| wj.abs() > floor)
                .map(|(vj, wj)| vj / wj)
                .collect::<Vec<_>>()
        })
        .collect();
    if ratios.is_empty() {
        return Err(Error::DegenerateFunction);
    }
    let gamma = median(ratios);
    let max_residual = pairs
        .iter()
        .map(|(v, w)| scaled((v - w * gamma).norm(), w, opts))
        .fold(0.0, f64::max);
    Ok(PeriodicityCertificate {
        kind: if max_residual <= opts.tolerance {
            CertificateKind::QuasiPeriodic
        } else {
            CertificateKind::None
        },
        period,
        gamma,
        max_residual,
        sample_count: pairs.len(),
    })
}

/// A strictly increasing map `ν` used in the substitution rule.
pub trait MonotoneMap: Send + Sync {
    fn apply(&self, t: f64) -> f64;
    fn inverse(&self, s: f64) -> f64;

    /// `ν^Δ(t)`; by default the exact quotient at scattered points and a
    /// central difference at dense points.
    fn delta_derivative(&self, ts: &TimeScale, p: &Point) -> f64 {
        if ts.classify(p).is_right_scattered() {
            let s = ts.sigma(p);
            (self.apply(s.t()) - self.apply(p.t())) / ts.mu(p)
        } else {
            let h = 1e-6f64.max(1e-6 * p.t().abs());
            (self.apply(p.t() + h) - self.apply(p.t() - h)) / (2.0 * h)
        }
    }
}

pub struct IdentityMap;

impl MonotoneMap for IdentityMap {
    fn apply(&self, t: f64) -> f64 {
        t
    }

    fn inverse(&self, s: f64) -> f64 {
        s
    }

    fn delta_derivative(&self, _: &TimeScale, _: &Point) -> f64 {
        1.0
    }
}

/// `ν = δ₊(shift, ·)`, inverted by `δ₋(shift, ·)`, with the operator's analytic derivative.
pub struct ShiftMap<'a> {
    pub op: &'a ShiftOperator,
    pub shift: f64,
}

impl MonotoneMap for ShiftMap<'_> {
    fn apply(&self, t: f64) -> f64 {
        self.op.forward_value(self.shift, t).unwrap_or(f64::NAN)
    }

    fn inverse(&self, s: f64) -> f64 {
        self.op.backward_value(self.shift, s).unwrap_or(f64::NAN)
    }

    fn delta_derivative(&self, ts: &TimeScale, p: &Point) -> f64 {
        self.op
            .forward_delta_derivative(ts, self.shift, p)
            .unwrap_or(f64::NAN)
    }
}

/// Closure-backed map with an explicit inverse.
pub struct FnMap<F, G> {
    pub apply: F,
    pub inverse: G,
}

impl<F, G> MonotoneMap for FnMap<F, G>
where
    F: Fn(f64) -> f64 + Send + Sync,
    G: Fn(f64) -> f64 + Send + Sync,
{
    fn apply(&self, t: f64) -> f64 {
        (self.apply)(t)
    }

    fn inverse(&self, s: f64) -> f64 {
        (self.inverse)(s)
    }
}

/// Image `ν([a, b]_T)` as a time scale of its own.
fn image_scale(ts: &TimeScale, nu: &dyn MonotoneMap, a: &Point, b: &Point) -> Result<TimeScale> {
    let mut segments = Vec::new();
    let mut points: Vec<f64> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    let push_point = |v: f64, at: &Point, last: &mut f64| -> Result<f64> {
        if !(v > *last) || !v.is_finite() {
            return Err(Error::NotMonotone { t: at.t() });
        }
        *last = v;
        Ok(v)
    };
    for piece in ts.points_between(a, b)? {
        match piece {
            Piece::Point(p) => {
                let v = push_point(nu.apply(p.t()), &p, &mut last)?;
                points.push(v);
            }
            Piece::Interval(lo, hi) => {
                if !points.is_empty() {
                    segments.push(Segment::points(std::mem::take(&mut points)));
                }
                let n = 16;
                let mut va = f64::NAN;
                for i in 0..=n {
                    let t = lo.t() + (hi.t() - lo.t()) * i as f64 / n as f64;
                    let v = push_point(nu.apply(t), &lo, &mut last)?;
                    if i == 0 {
                        va = v;
                    }
                }
                segments.push(Segment::interval(va, last));
            }
        }
    }
    if !points.is_empty() {
        segments.push(Segment::points(points));
    }
    TimeScale::new(segments).map_err(|_| Error::NotMonotone { t: a.t() })
}

/// Residual of the substitution rule
/// `∫_a^b g(s) ν^Δ(s) Δs = ∫_{ν(a)}^{ν(b)} g(ν^{-1}(s)) Δ̃s`,
/// the right side evaluated on the image scale `ν(T)`.
pub fn substitution_rule_check(
    ts: &TimeScale,
    nu: &dyn MonotoneMap,
    g: &dyn GridFunction,
    a: &Point,
    b: &Point,
) -> Result<f64> {
    let weighted = vector_fn(g.dim(), |p: &Point| g.eval(p) * nu.delta_derivative(ts, p));
    let lhs = delta_integral(ts, &weighted, a, b)?;

    let image = image_scale(ts, nu, a, b)?;
    let lookup_error: Mutex<Option<Error>> = Mutex::new(None);
    let pulled_back = vector_fn(g.dim(), |s: &Point| match ts.point(nu.inverse(s.t())) {
        Ok(p) => g.eval(&p),
        Err(e) => {
            lookup_error.lock().unwrap().get_or_insert(e);
            DVector::from_element(g.dim(), f64::NAN)
        }
    });
    let rhs = delta_integral(&image, &pulled_back, &image.first(), &image.last())?;
    if let Some(e) = lookup_error.into_inner().unwrap() {
        return Err(e);
    }
    Ok((lhs - rhs).norm())
}

/// Residual of `γ ∫_{t0}^{t} f Δs = ∫_{δ₊(T, t0)}^{δ₊(T, t)} f Δs`.
///
/// With `γ = 1` this is the invariance of integrals of Δ-periodic functions
/// under the shift; otherwise the quasiperiodic variant.
pub fn periodic_integral_invariance_check(
    ts: &TimeScale,
    op: &ShiftOperator,
    f: &dyn GridFunction,
    period: f64,
    gamma: f64,
    t0: &Point,
    t: &Point,
) -> Result<f64> {
    let lhs = delta_integral(ts, f, t0, t)? * gamma;
    let s0 = op.forward(ts, period, t0)?;
    let s1 = op.forward(ts, period, t)?;
    let rhs = delta_integral(ts, f, &s0, &s1)?;
    Ok((lhs - rhs).norm())
}
