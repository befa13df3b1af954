//! Shift operators `δ±(s, t)` on a time scale.
//!
//! A shift is in-domain exactly when its image is a scale point; anything else
//! is reported as [`Error::ShiftLeavesScale`].

mod periodicity;

pub use periodicity::{
    periodic_integral_invariance_check, sample_points, substitution_rule_check,
    verify_delta_periodic, verify_quasiperiodic, CertificateKind, FnMap, IdentityMap, MonotoneMap,
    PeriodicityCertificate, ShiftMap, VerifyOptions, DEFAULT_VERIFY_TOL,
};

use crate::error::{Error, Result};
use crate::scale::{membership_tol, Point, TimeScale};

/// Precomputed images of a shift with one fixed size.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftTableEntry {
    pub shift: f64,
    /// `(t, δ₊(shift, t))` pairs, sorted by `t`.
    pub pairs: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ShiftKind {
    /// `δ±(s, t) = t ± s`, for `R`, `Z`, `hZ`.
    Additive,
    /// `δ₊(s, t) = L - (L - t) q^{-s}`; with `L = 1` this is `(q^s + t - 1) / q^s`.
    Geometric { q: f64, limit: f64 },
    Table(Vec<ShiftTableEntry>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShiftOperator {
    kind: ShiftKind,
    t0: f64,
    scale_period: f64,
}

fn is_integer(s: f64) -> Option<u32> {
    let r = s.round();
    ((s - r).abs() <= 1e-9 && r >= 0.0 && r <= u32::MAX as f64).then_some(r as u32)
}

impl ShiftOperator {
    pub fn new(kind: ShiftKind, t0: f64, scale_period: f64) -> Result<Self> {
        if !(scale_period.is_finite() && scale_period > 0.0) {
            return Err(Error::InvalidShift(format!(
                "scale period must be positive, got {scale_period}"
            )));
        }
        match &kind {
            ShiftKind::Geometric { q, limit } if !(*q > 1.0 && q.is_finite() && limit.is_finite()) => {
                return Err(Error::InvalidShift("geometric shift needs q > 1".into()));
            }
            ShiftKind::Table(entries) => {
                for e in entries {
                    if e.pairs.windows(2).any(|w| w[1].0 <= w[0].0 || w[1].1 <= w[0].1) {
                        return Err(Error::InvalidShift(format!(
                            "table for shift {} must be strictly increasing in t and in the image",
                            e.shift
                        )));
                    }
                }
            }
            _ => {}
        }
        Ok(ShiftOperator {
            kind,
            t0,
            scale_period,
        })
    }

    pub fn additive(t0: f64, scale_period: f64) -> Result<Self> {
        Self::new(ShiftKind::Additive, t0, scale_period)
    }

    /// Geometric shift for the condensation scale `{1 - q^{-n}} ∪ {1}`, `t0 = 0`, period 1.
    pub fn geometric(q: f64) -> Result<Self> {
        Self::new(ShiftKind::Geometric { q, limit: 1.0 }, 0.0, 1.0)
    }

    pub fn table(entries: Vec<ShiftTableEntry>, t0: f64, scale_period: f64) -> Result<Self> {
        Self::new(ShiftKind::Table(entries), t0, scale_period)
    }

    pub fn kind(&self) -> &ShiftKind {
        &self.kind
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn scale_period(&self) -> f64 {
        self.scale_period
    }

    fn leaves(s: f64, p: &Point) -> Error {
        Error::ShiftLeavesScale {
            shift: s,
            t: p.t(),
            iteration: None,
        }
    }

    fn table_lookup(entries: &[ShiftTableEntry], s: f64, t: f64, inverse: bool) -> Option<f64> {
        let e = entries
            .iter()
            .find(|e| (e.shift - s).abs() <= membership_tol(e.shift))?;
        e.pairs.iter().find_map(|&(from, to)| {
            let (key, val) = if inverse { (to, from) } else { (from, to) };
            ((key - t).abs() <= membership_tol(key)).then_some(val)
        })
    }

    /// Value-level forward shift, without resolving the image on a scale.
    pub fn forward_value(&self, s: f64, t: f64) -> Option<f64> {
        match &self.kind {
            ShiftKind::Additive => Some(t + s),
            ShiftKind::Geometric { q, limit } => Some(limit - (limit - t) * q.powf(-s)),
            ShiftKind::Table(e) => Self::table_lookup(e, s, t, false),
        }
    }

    /// Value-level backward shift.
    pub fn backward_value(&self, s: f64, t: f64) -> Option<f64> {
        match &self.kind {
            ShiftKind::Additive => Some(t - s),
            ShiftKind::Geometric { q, limit } => Some(limit - (limit - t) * q.powf(s)),
            ShiftKind::Table(e) => Self::table_lookup(e, s, t, true),
        }
    }

    fn matching_condensation(&self, ts: &TimeScale, p: &Point) -> bool {
        match (&self.kind, ts.condensation_params(p.segment())) {
            (ShiftKind::Geometric { q, limit }, Some((sq, _, sl))) => {
                (q - sq).abs() <= 1e-14 * sq && (limit - sl).abs() <= membership_tol(sl)
            }
            _ => false,
        }
    }

    /// `δ₊(s, t)`.
    pub fn forward(&self, ts: &TimeScale, s: f64, p: &Point) -> Result<Point> {
        if self.matching_condensation(ts, p) {
            if p.is_condensation_limit() {
                return Ok(*p);
            }
            if let (Some(k), Some(n)) = (is_integer(s), p.index()) {
                return ts
                    .condensation_point(p.segment(), n as u32 + k)
                    .ok_or_else(|| Self::leaves(s, p));
            }
        }
        let v = self.forward_value(s, p.t()).ok_or_else(|| Self::leaves(s, p))?;
        ts.point(v).map_err(|_| Self::leaves(s, p))
    }

    /// `δ₋(s, t)`.
    pub fn backward(&self, ts: &TimeScale, s: f64, p: &Point) -> Result<Point> {
        if self.matching_condensation(ts, p) {
            if p.is_condensation_limit() {
                return Ok(*p);
            }
            if let (Some(k), Some(n)) = (is_integer(s), p.index()) {
                let n = n as u32;
                return if n >= k {
                    ts.condensation_point(p.segment(), n - k)
                        .ok_or_else(|| Self::leaves(s, p))
                } else {
                    Err(Self::leaves(s, p))
                };
            }
        }
        let v = self.backward_value(s, p.t()).ok_or_else(|| Self::leaves(s, p))?;
        ts.point(v).map_err(|_| Self::leaves(s, p))
    }

    fn numeric_derivative(
        &self,
        ts: &TimeScale,
        p: &Point,
        map: impl Fn(&Point) -> Result<Point>,
    ) -> Result<f64> {
        let class = ts.classify(p);
        if !class.is_right_scattered() {
            return Err(Error::InvalidShift(
                "tabulated shifts are only differentiable at right-scattered points".into(),
            ));
        }
        let s = ts.sigma(p);
        let (a, b) = (map(p)?, map(&s)?);
        Ok(ts.span(&a, &b) / ts.mu(p))
    }

    fn check_positive(p: &Point, value: f64) -> Result<f64> {
        if value > 0.0 && value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonPositiveDerivative { t: p.t(), value })
        }
    }

    /// Δ-derivative of `δ₊(s, ·)` at `t`.
    pub fn forward_delta_derivative(&self, ts: &TimeScale, s: f64, p: &Point) -> Result<f64> {
        let value = match &self.kind {
            ShiftKind::Additive => 1.0,
            ShiftKind::Geometric { q, .. } => q.powf(-s),
            ShiftKind::Table(_) => self.numeric_derivative(ts, p, |x| self.forward(ts, s, x))?,
        };
        Self::check_positive(p, value)
    }

    /// Δ-derivative of `δ₋(s, ·)` at `t`.
    pub fn backward_delta_derivative(&self, ts: &TimeScale, s: f64, p: &Point) -> Result<f64> {
        let value = match &self.kind {
            ShiftKind::Additive => 1.0,
            ShiftKind::Geometric { q, .. } => q.powf(s),
            ShiftKind::Table(_) => self.numeric_derivative(ts, p, |x| self.backward(ts, s, x))?,
        };
        Self::check_positive(p, value)
    }

    /// `δ^{(i)}(t)`: the forward shift by `period` applied `i` times.
    pub fn iterate(&self, ts: &TimeScale, period: f64, p: &Point, i: usize) -> Result<Point> {
        let mut cur = *p;
        for k in 1..=i {
            cur = self.forward(ts, period, &cur).map_err(|e| match e {
                Error::ShiftLeavesScale { shift, t, .. } => Error::ShiftLeavesScale {
                    shift,
                    t,
                    iteration: Some(k),
                },
                other => other,
            })?;
        }
        Ok(cur)
    }

    /// Check that `δ₊(P, t)` lands on the scale at every sample.
    pub fn verify_scale_period(&self, ts: &TimeScale, samples: &[Point]) -> Result<()> {
        for p in samples {
            self.forward(ts, self.scale_period, p)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_forward_examples() {
        let ts = TimeScale::geometric(2.0, 64).unwrap();
        let op = ShiftOperator::geometric(2.0).unwrap();
        let p = op.forward(&ts, 2.0, &ts.first()).unwrap();
        assert_eq!(p.t(), 0.75);
        for t in [0.0, 0.5, 0.75, 0.9375] {
            let x = ts.point(t).unwrap();
            let f = op.forward(&ts, 3.0, &x).unwrap();
            assert!((f.t() - (8.0 + t - 1.0) / 8.0).abs() < 1e-15);
        }
        assert_eq!(op.forward_delta_derivative(&ts, 2.0, &ts.first()).unwrap(), 0.25);
    }

    #[test]
    fn additive_shift_on_grid() {
        let ts = TimeScale::uniform(0.0, 0.5, 41).unwrap();
        let op = ShiftOperator::additive(0.0, 0.5).unwrap();
        let p = ts.point(1.0).unwrap();
        assert_eq!(op.forward(&ts, 2.0, &p).unwrap().t(), 3.0);
        assert_eq!(op.forward_delta_derivative(&ts, 2.0, &p).unwrap(), 1.0);
        assert_eq!(op.iterate(&ts, 2.0, &ts.first(), 3).unwrap().t(), 6.0);
        let err = op.iterate(&ts, 2.0, &ts.first(), 20).unwrap_err();
        assert!(matches!(err, Error::ShiftLeavesScale { iteration: Some(11), .. }));
        assert!(op.forward(&ts, 0.3, &p).is_err());
    }

    #[test]
    fn iterate_geometric() {
        let ts = TimeScale::geometric(2.0, 64).unwrap();
        let op = ShiftOperator::geometric(2.0).unwrap();
        assert_eq!(op.iterate(&ts, 2.0, &ts.first(), 0).unwrap(), ts.first());
        assert_eq!(op.iterate(&ts, 2.0, &ts.first(), 1).unwrap().t(), 0.75);
        assert_eq!(op.iterate(&ts, 2.0, &ts.first(), 2).unwrap().t(), 15.0 / 16.0);
        // beyond n_max the true family continues
        let far = op.iterate(&ts, 2.0, &ts.first(), 33).unwrap();
        assert_eq!(far.index(), Some(66));
    }

    #[test]
    fn backward_inverts_forward() {
        let ts = TimeScale::geometric(3.0, 64).unwrap();
        let op = ShiftOperator::geometric(3.0).unwrap();
        let mut p = ts.first();
        for _ in 0..20 {
            let f = op.forward(&ts, 2.0, &p).unwrap();
            assert_eq!(op.backward(&ts, 2.0, &f).unwrap(), p);
            p = ts.sigma(&p);
        }
        assert!(op.backward(&ts, 2.0, &ts.first()).is_err());
    }

    #[test]
    fn tabulated_shift() {
        let ts = TimeScale::single(crate::scale::Segment::points(vec![0.0, 1.0, 3.0, 7.0, 15.0])).unwrap();
        let entry = ShiftTableEntry {
            shift: 1.0,
            pairs: vec![(0.0, 1.0), (1.0, 3.0), (3.0, 7.0), (7.0, 15.0)],
        };
        let op = ShiftOperator::table(vec![entry], 0.0, 1.0).unwrap();
        let p = ts.point(1.0).unwrap();
        assert_eq!(op.forward(&ts, 1.0, &p).unwrap().t(), 3.0);
        assert_eq!(op.backward(&ts, 1.0, &p).unwrap().t(), 0.0);
        // (7 - 3) / (3 - 1)
        assert_eq!(op.forward_delta_derivative(&ts, 1.0, &p).unwrap(), 2.0);
        assert!(op.forward(&ts, 1.0, &ts.last()).is_err());
    }

    #[test]
    fn decreasing_table_rejected() {
        let entry = ShiftTableEntry {
            shift: 1.0,
            pairs: vec![(0.0, 3.0), (1.0, 1.0)],
        };
        assert!(ShiftOperator::table(vec![entry], 0.0, 1.0).is_err());
    }
}
