//! Partial averaging over shift intervals `[δ^{(i)}(t0), δ^{(i+1)}(t0))`.
//!
//! For a right-hand side that is Δ-periodic in shifts the value on interval
//! `i` is the interval mean of `X`, which by periodicity is the base integral
//! over `[t0, δ₊(T, t0)]` divided by the interval length. For a geometric
//! Δ-quasiperiodic right-hand side with factor `γ` the base integral is
//! scaled by `γ^i`. Both cases share [`AveragedField`].

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use nalgebra::DVector;
use parking_lot::RwLock;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::DomainBox;
use crate::error::{Error, Result};
use crate::scale::{delta_integral, vector_fn, GridFunction, Point, TimeScale};
use crate::shift::{
    verify_delta_periodic, verify_quasiperiodic, CertificateKind, PeriodicityCertificate,
    ShiftOperator, VerifyOptions,
};

/// Right-hand side `X(t, x)` of `x^Δ = ε X(t, x)`.
pub trait RightHandSide: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, p: &Point, x: &DVector<f64>) -> DVector<f64>;
    /// Known bound `M` on `‖X‖`, if any.
    fn bound(&self) -> Option<f64> {
        None
    }
}

type FieldFn = dyn Fn(&Point, &DVector<f64>) -> DVector<f64> + Send + Sync;

#[derive(Clone)]
pub struct VectorField {
    f: Arc<FieldFn>,
    dim: usize,
    bound: Option<f64>,
    lipschitz: Option<f64>,
    certificate: Option<PeriodicityCertificate>,
}

impl std::fmt::Debug for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorField")
            .field("dim", &self.dim)
            .field("bound", &self.bound)
            .field("lipschitz", &self.lipschitz)
            .field("certificate", &self.certificate)
            .finish()
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonPositiveParameter { name, value })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonPositiveParameter { name, value })
    }
}

impl VectorField {
    pub fn new<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&Point, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        VectorField {
            f: Arc::new(f),
            dim,
            bound: None,
            lipschitz: None,
            certificate: None,
        }
    }

    /// Attach `M` (bound) and `λ` (Lipschitz constant in `x`, may be 0) on the working domain.
    pub fn with_constants(mut self, bound: f64, lipschitz: f64) -> Result<Self> {
        self.bound = Some(positive("M", bound)?);
        self.lipschitz = Some(non_negative("lambda", lipschitz)?);
        Ok(self)
    }

    pub fn with_certificate(mut self, certificate: PeriodicityCertificate) -> Self {
        self.certificate = Some(certificate);
        self
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn certificate(&self) -> Option<&PeriodicityCertificate> {
        self.certificate.as_ref()
    }

    /// `t ↦ X(t, x)` for a frozen state.
    pub fn at_state(&self, x: DVector<f64>) -> impl GridFunction + '_ {
        vector_fn(self.dim, move |p: &Point| (self.f)(p, &x))
    }

    /// Verify quasiperiodicity (γ = 1 upgrades to Δ-periodicity) at each of
    /// the given frozen states and attach the combined certificate.
    pub fn certify(
        &mut self,
        ts: &TimeScale,
        op: &ShiftOperator,
        period: f64,
        samples: &[Point],
        states: &[DVector<f64>],
        opts: &VerifyOptions,
    ) -> Result<PeriodicityCertificate> {
        let mut combined: Option<PeriodicityCertificate> = None;
        for x in states {
            let g = self.at_state(x.clone());
            let c = verify_quasiperiodic(ts, op, &g, period, samples, opts)?;
            combined = Some(match combined {
                None => c,
                Some(prev) => {
                    let agree = (prev.gamma - c.gamma).abs() <= opts.tolerance * prev.gamma.abs().max(1.0);
                    PeriodicityCertificate {
                        kind: if agree && prev.kind == c.kind {
                            prev.kind
                        } else {
                            CertificateKind::None
                        },
                        period,
                        gamma: prev.gamma,
                        max_residual: prev.max_residual.max(c.max_residual),
                        sample_count: prev.sample_count + c.sample_count,
                    }
                }
            });
        }
        let mut cert = combined.ok_or(Error::DegenerateFunction)?;
        if cert.kind == CertificateKind::QuasiPeriodic && (cert.gamma - 1.0).abs() <= opts.tolerance {
            let mut residual: f64 = 0.0;
            let mut periodic = true;
            for x in states {
                let g = self.at_state(x.clone());
                let c = verify_delta_periodic(ts, op, &g, period, samples, opts)?;
                residual = residual.max(c.max_residual);
                periodic &= c.kind == CertificateKind::DeltaPeriodic;
            }
            if periodic {
                cert.kind = CertificateKind::DeltaPeriodic;
                cert.gamma = 1.0;
                cert.max_residual = residual;
            }
        }
        self.certificate = Some(cert.clone());
        Ok(cert)
    }
}

impl RightHandSide for VectorField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, p: &Point, x: &DVector<f64>) -> DVector<f64> {
        (self.f)(p, x)
    }

    fn bound(&self) -> Option<f64> {
        self.bound
    }
}

/// `X̃₀(x) = (δ₊(T, t0) - t0)^{-1} ∫_{t0}^{δ₊(T, t0)} X(t, x) Δt`.
pub fn base_average(
    field: &VectorField,
    ts: &TimeScale,
    op: &ShiftOperator,
    period: f64,
    t0: &Point,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    let end = op.forward(ts, period, t0)?;
    let len = ts.span(t0, &end);
    if !(len > 0.0) {
        return Err(Error::ZeroLengthPeriodInterval);
    }
    let g = field.at_state(x.clone());
    Ok(delta_integral(ts, &g, t0, &end)? / len)
}

/// Piecewise-constant-in-`t` averaged right-hand side.
pub struct AveragedField {
    field: VectorField,
    ts: TimeScale,
    t0: Point,
    base_end: Point,
    breakpoints: Vec<Point>,
    lengths: Vec<f64>,
    gamma: f64,
    cache: RwLock<HashMap<Vec<u64>, DVector<f64>>>,
    warned: AtomicBool,
}

const CACHE_LIMIT: usize = 4096;

impl std::fmt::Debug for AveragedField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AveragedField")
            .field("intervals", &self.lengths.len())
            .field("gamma", &self.gamma)
            .finish()
    }
}

impl AveragedField {
    fn build(
        field: &VectorField,
        ts: &TimeScale,
        op: &ShiftOperator,
        period: f64,
        t0: &Point,
        gamma: f64,
        intervals: usize,
    ) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::NonPositiveParameter {
                name: "N",
                value: 0.0,
            });
        }
        let mut breakpoints = vec![*t0];
        for _ in 0..intervals {
            let next = op.iterate(ts, period, breakpoints.last().unwrap(), 1).map_err(|e| match e {
                Error::ShiftLeavesScale { shift, t, .. } => Error::ShiftLeavesScale {
                    shift,
                    t,
                    iteration: Some(breakpoints.len()),
                },
                other => other,
            })?;
            breakpoints.push(next);
        }
        let lengths: Vec<f64> = breakpoints.windows(2).map(|w| ts.span(&w[0], &w[1])).collect();
        if lengths.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::ZeroLengthPeriodInterval);
        }
        Ok(AveragedField {
            field: field.clone(),
            ts: ts.clone(),
            t0: *t0,
            base_end: breakpoints[1],
            breakpoints,
            lengths,
            gamma,
            cache: RwLock::new(HashMap::new()),
            warned: AtomicBool::new(false),
        })
    }

    pub fn breakpoints(&self) -> &[Point] {
        &self.breakpoints
    }

    pub fn interval_lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn interval_count(&self) -> usize {
        self.lengths.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `K`: the largest interval length, `i = 0` included.
    pub fn max_interval_length(&self) -> f64 {
        self.lengths.iter().copied().fold(0.0, f64::max)
    }

    /// `∫_{t0}^{δ₊(T, t0)} X(t, x) Δt`, cached per `x`.
    pub fn base_integral(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        if let Some(v) = self.cache.read().get(&key) {
            return Ok(v.clone());
        }
        let g = self.field.at_state(x.clone());
        let v = delta_integral(&self.ts, &g, &self.t0, &self.base_end)?;
        let mut cache = self.cache.write();
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, v.clone());
        Ok(v)
    }

    /// `X̂_i(x) = γ^i / (δ^{(i+1)} - δ^{(i)}) · ∫_{t0}^{δ₊(T, t0)} X(t, x) Δt`.
    pub fn interval_value(&self, i: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
        let i = i.min(self.lengths.len() - 1);
        Ok(self.base_integral(x)? * (self.gamma.powi(i as i32) / self.lengths[i]))
    }

    /// Index of the interval `[δ^{(i)}, δ^{(i+1)})` holding `p`. Points past the
    /// last breakpoint map onto the last interval.
    pub fn interval_index(&self, p: &Point) -> usize {
        let idx = self.breakpoints.partition_point(|b| b <= p).saturating_sub(1);
        if idx >= self.lengths.len() {
            if !self.warned.swap(true, Ordering::Relaxed) {
                log::warn!(
                    "averaged field evaluated at t = {} beyond the last breakpoint; extending interval {}",
                    p.t(),
                    self.lengths.len() - 1
                );
            }
            return self.lengths.len() - 1;
        }
        idx
    }

    /// `‖∫_{δ^{(i)}}^{δ^{(i+1)}} [X(s, x) - X̂(s, x)] Δs‖`.
    pub fn mean_zero_residual(&self, i: usize, x: &DVector<f64>) -> Result<f64> {
        let phi = vector_fn(self.field.dim, |p: &Point| {
            self.field.eval(p, x) - self.eval(p, x)
        });
        let v = delta_integral(&self.ts, &phi, &self.breakpoints[i], &self.breakpoints[i + 1])?;
        Ok(v.norm())
    }
}

impl RightHandSide for AveragedField {
    fn dim(&self) -> usize {
        self.field.dim
    }

    fn eval(&self, p: &Point, x: &DVector<f64>) -> DVector<f64> {
        let i = self.interval_index(p);
        self.interval_value(i, x)
            .unwrap_or_else(|_| DVector::from_element(self.field.dim, f64::NAN))
    }

    fn bound(&self) -> Option<f64> {
        self.field.bound
    }
}

/// Averaged field of a Δ-periodic right-hand side over `N` shift intervals.
pub fn build_averaged_field_periodic(
    field: &VectorField,
    ts: &TimeScale,
    op: &ShiftOperator,
    period: f64,
    t0: &Point,
    intervals: usize,
) -> Result<AveragedField> {
    match field.certificate() {
        Some(c) if c.kind == CertificateKind::DeltaPeriodic => {}
        Some(c) if c.kind == CertificateKind::QuasiPeriodic && (c.gamma - 1.0).abs() <= 1e-9 => {}
        _ => return Err(Error::CertificateMissing),
    }
    AveragedField::build(field, ts, op, period, t0, 1.0, intervals)
}

/// Averaged field of a geometric Δ-quasiperiodic right-hand side with factor `gamma`.
pub fn build_averaged_field_quasiperiodic(
    field: &VectorField,
    ts: &TimeScale,
    op: &ShiftOperator,
    period: f64,
    t0: &Point,
    gamma: f64,
    intervals: usize,
) -> Result<AveragedField> {
    match field.certificate() {
        Some(c)
            if c.kind != CertificateKind::None
                && (c.gamma - gamma).abs() <= 1e-9 * gamma.abs().max(1.0) => {}
        _ => return Err(Error::CertificateMissing),
    }
    AveragedField::build(field, ts, op, period, t0, gamma, intervals)
}

/// `K = max_{0 ≤ i < N} (δ^{(i+1)}(t0) - δ^{(i)}(t0))`.
pub fn interval_length_bound(
    ts: &TimeScale,
    op: &ShiftOperator,
    period: f64,
    t0: &Point,
    intervals: usize,
) -> Result<f64> {
    if intervals == 0 {
        return Err(Error::NonPositiveParameter {
            name: "N",
            value: 0.0,
        });
    }
    let mut k: f64 = 0.0;
    let mut cur = *t0;
    for i in 0..intervals {
        let next = op.iterate(ts, period, &cur, 1).map_err(|e| match e {
            Error::ShiftLeavesScale { shift, t, .. } => Error::ShiftLeavesScale {
                shift,
                t,
                iteration: Some(i + 1),
            },
            other => other,
        })?;
        k = k.max(ts.span(&cur, &next));
        cur = next;
    }
    Ok(k)
}

/// Number of shift intervals needed so that `δ^{(N)}(t0) ≥ end`; stops early
/// when the next shift leaves the scale.
pub fn intervals_to_cover(
    ts: &TimeScale,
    op: &ShiftOperator,
    period: f64,
    t0: &Point,
    end: &Point,
) -> usize {
    let mut n = 0;
    let mut cur = *t0;
    while cur < *end && n < 1_000_000 {
        match op.forward(ts, period, &cur) {
            Ok(next) => {
                cur = next;
                n += 1;
            }
            Err(_) => break,
        }
    }
    n.max(1)
}

/// `C = 2 M (λ L + K) e^{λ L}`.
pub fn error_bound_constant(bound: f64, lipschitz: f64, horizon: f64, k: f64) -> Result<f64> {
    let m = positive("M", bound)?;
    let l = non_negative("lambda", lipschitz)?;
    let h = positive("L", horizon)?;
    let k = positive("K", k)?;
    Ok(2.0 * m * (l * h + k) * (l * h).exp())
}

/// Sampled estimate of `M` and `λ` over a box.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantsEstimate {
    pub bound: f64,
    pub lipschitz: f64,
    pub sample_count: usize,
}

/// Sample `‖X(t, x)‖` and difference quotients `‖X(t, x) - X(t, y)‖ / ‖x - y‖`
/// at the given scale points and `samples` random states per point.
pub fn estimate_constants(
    field: &dyn RightHandSide,
    points: &[Point],
    domain: &DomainBox,
    samples: usize,
    seed: u64,
) -> ConstantsEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bound: f64 = 0.0;
    let mut lipschitz: f64 = 0.0;
    let mut count = 0;
    for p in points {
        for _ in 0..samples {
            let x = domain.sample(&mut rng);
            let y = domain.sample(&mut rng);
            let fx = field.eval(p, &x);
            let fy = field.eval(p, &y);
            bound = bound.max(fx.norm()).max(fy.norm());
            let dx = (&x - &y).norm();
            if dx > 0.0 {
                lipschitz = lipschitz.max((fx - fy).norm() / dx);
            }
            count += 1;
        }
    }
    ConstantsEstimate {
        bound,
        lipschitz,
        sample_count: count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shift::sample_points;

    fn alternating() -> VectorField {
        VectorField::new(1, |p: &Point, x: &DVector<f64>| {
            let s = if p.index().unwrap_or(0) % 2 == 0 { 1.0 } else { -1.0 };
            x * s
        })
    }

    fn x1(v: f64) -> DVector<f64> {
        DVector::from_element(1, v)
    }

    fn certified(q: f64) -> (TimeScale, ShiftOperator, VectorField) {
        let ts = TimeScale::geometric(q, 64).unwrap();
        let op = ShiftOperator::geometric(q).unwrap();
        let mut f = alternating();
        let samples = sample_points(&ts, &ts.first(), &ts.point(1.0).unwrap()).unwrap();
        let cert = f
            .certify(&ts, &op, 2.0, &samples[..60], &[x1(1.0), x1(-0.5)], &VerifyOptions::default())
            .unwrap();
        assert_eq!(cert.kind, CertificateKind::QuasiPeriodic);
        (ts, op, f)
    }

    #[test]
    fn base_average_example_q2() {
        let (ts, op, f) = certified(2.0);
        let v = base_average(&f, &ts, &op, 2.0, &ts.first(), &x1(1.0)).unwrap();
        assert!((v[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn base_average_of_time_independent_field() {
        let ts = TimeScale::geometric(2.0, 64).unwrap();
        let op = ShiftOperator::geometric(2.0).unwrap();
        let f = VectorField::new(1, |_: &Point, x: &DVector<f64>| x * 2.5);
        let v = base_average(&f, &ts, &op, 2.0, &ts.first(), &x1(2.0)).unwrap();
        assert!((v[0] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn base_average_alternating_on_z() {
        let ts = TimeScale::uniform(0.0, 1.0, 20).unwrap();
        let op = ShiftOperator::additive(0.0, 1.0).unwrap();
        let f = VectorField::new(1, |p: &Point, x: &DVector<f64>| {
            x * if p.index().unwrap() % 2 == 0 { 1.0 } else { -1.0 }
        });
        let v = base_average(&f, &ts, &op, 2.0, &ts.first(), &x1(3.0)).unwrap();
        assert_eq!(v[0], 0.0);
    }

    #[test]
    fn quasiperiodic_construction_matches_scattered_sum_oracle() {
        for q in [1.8f64, 2.0, 3.0] {
            let (ts, op, f) = certified(q);
            let avg =
                build_averaged_field_quasiperiodic(&f, &ts, &op, 2.0, &ts.first(), q.powi(-2), 32).unwrap();
            // oracle: ∫ over [t0, t2] is mu0 - mu1; interval i has length (q^2 - 1)/q^(2i+2)
            let base = (q - 1.0) / q - (q - 1.0) / (q * q);
            for i in 0..32 {
                let len = (q * q - 1.0) / q.powi(2 * i + 2);
                let expected = q.powi(-2 * i) * base / len;
                let got = avg.interval_value(i as usize, &x1(1.0)).unwrap()[0];
                assert!((got - expected).abs() < 1e-12, "q={q} i={i}");
                assert!((got - (q - 1.0) / (q + 1.0)).abs() < 1e-12);
            }
            assert!((avg.max_interval_length() - (q * q - 1.0) / (q * q)).abs() < 1e-15);
        }
    }

    #[test]
    fn periodic_on_hz_is_classical_average() {
        let ts = TimeScale::uniform(0.0, 1.0, 40).unwrap();
        let op = ShiftOperator::additive(0.0, 1.0).unwrap();
        let mut f = VectorField::new(1, |p: &Point, x: &DVector<f64>| {
            x * [1.0, 3.0, -1.0][p.index().unwrap() % 3]
        });
        let samples = sample_points(&ts, &ts.first(), &ts.last()).unwrap();
        let cert = f.certify(&ts, &op, 3.0, &samples, &[x1(1.0)], &VerifyOptions::default()).unwrap();
        assert_eq!(cert.kind, CertificateKind::DeltaPeriodic);
        let avg = build_averaged_field_periodic(&f, &ts, &op, 3.0, &ts.first(), 10).unwrap();
        for i in 0..10 {
            assert!((avg.interval_value(i, &x1(1.0)).unwrap()[0] - 1.0).abs() < 1e-15);
            assert!(avg.mean_zero_residual(i, &x1(1.0)).unwrap() < 1e-12);
        }
        assert_eq!(interval_length_bound(&ts, &op, 3.0, &ts.first(), 10).unwrap(), 3.0);
    }

    #[test]
    fn missing_certificate_rejected() {
        let ts = TimeScale::geometric(2.0, 64).unwrap();
        let op = ShiftOperator::geometric(2.0).unwrap();
        let f = alternating();
        assert!(matches!(
            build_averaged_field_periodic(&f, &ts, &op, 2.0, &ts.first(), 4),
            Err(Error::CertificateMissing)
        ));
        let (ts, op, f) = certified(2.0);
        // certified quasiperiodic with gamma 1/4 is not Δ-periodic
        assert!(build_averaged_field_periodic(&f, &ts, &op, 2.0, &ts.first(), 4).is_err());
        assert!(build_averaged_field_quasiperiodic(&f, &ts, &op, 2.0, &ts.first(), 0.5, 4).is_err());
    }

    #[test]
    fn error_constant() {
        let c = error_bound_constant(1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((c - 4.0 * std::f64::consts::E).abs() < 1e-14);
        let small_k = error_bound_constant(1.0, 1.0, 1.0, 1e-300).unwrap();
        assert!((small_k - 2.0 * std::f64::consts::E).abs() < 1e-14);
        assert!(matches!(
            error_bound_constant(0.0, 1.0, 1.0, 1.0),
            Err(Error::NonPositiveParameter { name: "M", .. })
        ));
    }

    #[test]
    fn interval_bounds() {
        let ts = TimeScale::geometric(2.0, 64).unwrap();
        let op = ShiftOperator::geometric(2.0).unwrap();
        assert_eq!(interval_length_bound(&ts, &op, 2.0, &ts.first(), 10).unwrap(), 0.75);
        let ts3 = TimeScale::geometric(3.0, 64).unwrap();
        let op3 = ShiftOperator::geometric(3.0).unwrap();
        let k = interval_length_bound(&ts3, &op3, 2.0, &ts3.first(), 10).unwrap();
        assert!((k - 8.0 / 9.0).abs() < 1e-15);
        let end = ts.condensation_point(0, 64).unwrap();
        assert_eq!(intervals_to_cover(&ts, &op, 2.0, &ts.first(), &end), 32);
    }

    #[test]
    fn estimator_on_linear_field() {
        let ts = TimeScale::geometric(2.0, 64).unwrap();
        let f = alternating();
        let pts: Vec<Point> = (0..5).map(|i| ts.condensation_point(0, i).unwrap()).collect();
        let d = DomainBox::ball(1, 2.0).unwrap();
        let est = estimate_constants(&f, &pts, &d, 200, 7);
        assert_eq!(est.sample_count, 1000);
        assert!(est.bound <= 2.0 && est.bound > 1.9);
        assert!((est.lipschitz - 1.0).abs() < 1e-12);
    }
}
