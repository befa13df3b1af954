//! Time scales: closed subsets of the real line assembled from ordered segments.
//!
//! Points are addressed through [`Point`] handles rather than raw `f64` values.
//! On a condensation family `t_n = L - (L - s) q^{-n}` the values crowd against
//! `L` faster than double precision can separate them, so the handle keeps the
//! index `n` and the exact distance to the limit alongside the value.

mod calculus;
mod function;
pub(crate) mod quadrature;
pub(crate) mod sum;

pub use calculus::{delta_derivative_numeric, delta_integral, exp_function, Derivative};
pub use function::{scalar_fn, vector_fn, FnGrid, GridFunction};

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Default number of materialized points on a condensation segment.
pub const DEFAULT_N_MAX: usize = 64;

/// Relative tolerance for matching a query value against a scale point.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

pub fn membership_tol(p: f64) -> f64 {
    MEMBERSHIP_TOL * p.abs().max(1.0)
}

/// One building block of a [`TimeScale`].
#[derive(Clone, Debug, PartialEq)]
pub enum Segment {
    /// `start + i * step` for `i = 0..count`.
    UniformGrid { start: f64, step: f64, count: usize },
    /// Arbitrary strictly increasing isolated points.
    ExplicitPoints(Vec<f64>),
    /// The closed real interval `[a, b]`.
    ContinuousInterval { a: f64, b: f64 },
    /// `t_n = limit - (limit - start) q^{-n}` for all `n >= 0`, together with
    /// the limit itself. Walks toward the limit stop after `n_max`.
    GeometricCondensation {
        q: f64,
        n_max: usize,
        start: f64,
        limit: f64,
    },
}

impl Segment {
    pub fn uniform(start: f64, step: f64, count: usize) -> Self {
        Segment::UniformGrid { start, step, count }
    }

    pub fn points(points: impl Into<Vec<f64>>) -> Self {
        Segment::ExplicitPoints(points.into())
    }

    pub fn interval(a: f64, b: f64) -> Self {
        Segment::ContinuousInterval { a, b }
    }

    /// `{1 - q^{-n}} ∪ {1}`, truncated at `n_max`.
    pub fn geometric(q: f64, n_max: usize) -> Self {
        Segment::GeometricCondensation {
            q,
            n_max,
            start: 0.0,
            limit: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidScale(m.to_string()));
        match self {
            Segment::UniformGrid { start, step, count } => {
                if !(step.is_finite() && *step > 0.0) {
                    return bad("uniform grid step must be positive");
                }
                if *count == 0 || !start.is_finite() {
                    return bad("uniform grid needs a finite start and at least one point");
                }
            }
            Segment::ExplicitPoints(pts) => {
                if pts.is_empty() {
                    return bad("explicit point set is empty");
                }
                if pts.iter().any(|p| !p.is_finite()) {
                    return bad("explicit points must be finite");
                }
                if pts.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("explicit points must be strictly increasing");
                }
            }
            Segment::ContinuousInterval { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return bad("continuous interval needs finite a < b");
                }
            }
            Segment::GeometricCondensation {
                q, start, limit, ..
            } => {
                if !(q.is_finite() && *q > 1.0) {
                    return bad("geometric condensation needs q > 1");
                }
                if !(start.is_finite() && limit.is_finite() && start < limit) {
                    return bad("geometric condensation needs start < limit");
                }
            }
        }
        Ok(())
    }

    fn first_value(&self) -> f64 {
        match self {
            Segment::UniformGrid { start, .. } => *start,
            Segment::ExplicitPoints(p) => p[0],
            Segment::ContinuousInterval { a, .. } => *a,
            Segment::GeometricCondensation { start, .. } => *start,
        }
    }

    fn last_value(&self) -> f64 {
        match self {
            Segment::UniformGrid { start, step, count } => start + (*count - 1) as f64 * step,
            Segment::ExplicitPoints(p) => p[p.len() - 1],
            Segment::ContinuousInterval { b, .. } => *b,
            Segment::GeometricCondensation { limit, .. } => *limit,
        }
    }

    fn indexed_value(&self, i: usize) -> f64 {
        match self {
            Segment::UniformGrid { start, step, .. } => start + i as f64 * step,
            Segment::ExplicitPoints(p) => p[i],
            _ => unreachable!("indexed access on a non-indexed segment"),
        }
    }

    fn indexed_len(&self) -> usize {
        match self {
            Segment::UniformGrid { count, .. } => *count,
            Segment::ExplicitPoints(p) => p.len(),
            _ => 0,
        }
    }
}

fn geometric_gap(q: f64, start: f64, limit: f64, n: u32) -> f64 {
    (limit - start) * q.powi(-(n as i32))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Site {
    Indexed { segment: usize, index: usize },
    Geometric { segment: usize, n: u32, gap: f64 },
    Limit { segment: usize },
    Dense { segment: usize },
}

/// A point of a specific [`TimeScale`].
#[derive(Clone, Copy, Debug)]
pub struct Point {
    t: f64,
    site: Site,
}

impl Point {
    /// The real value of the point.
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn segment(&self) -> usize {
        match self.site {
            Site::Indexed { segment, .. }
            | Site::Geometric { segment, .. }
            | Site::Limit { segment }
            | Site::Dense { segment } => segment,
        }
    }

    /// Position inside an isolated-point segment (grid index or condensation `n`).
    pub fn index(&self) -> Option<usize> {
        match self.site {
            Site::Indexed { index, .. } => Some(index),
            Site::Geometric { n, .. } => Some(n as usize),
            _ => None,
        }
    }

    /// Exact distance to the condensation limit, for points of a condensation segment.
    pub fn gap_to_limit(&self) -> Option<f64> {
        match self.site {
            Site::Geometric { gap, .. } => Some(gap),
            Site::Limit { .. } => Some(0.0),
            _ => None,
        }
    }

    pub fn is_condensation_limit(&self) -> bool {
        matches!(self.site, Site::Limit { .. })
    }

    pub(crate) fn dense(segment: usize, t: f64) -> Self {
        Point {
            t,
            site: Site::Dense { segment },
        }
    }

    fn position_cmp(&self, other: &Point) -> Ordering {
        let (s, o) = (self.segment(), other.segment());
        if s != o {
            return s.cmp(&o);
        }
        match (self.site, other.site) {
            (Site::Indexed { index: a, .. }, Site::Indexed { index: b, .. }) => a.cmp(&b),
            (Site::Geometric { n: a, .. }, Site::Geometric { n: b, .. }) => a.cmp(&b),
            (Site::Geometric { .. }, Site::Limit { .. }) => Ordering::Less,
            (Site::Limit { .. }, Site::Geometric { .. }) => Ordering::Greater,
            (Site::Limit { .. }, Site::Limit { .. }) => Ordering::Equal,
            _ => {
                if (self.t - other.t).abs() <= membership_tol(self.t) {
                    Ordering::Equal
                } else {
                    self.t.total_cmp(&other.t)
                }
            }
        }
    }
}

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        self.position_cmp(other) == Ordering::Equal
    }
}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.position_cmp(other))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Scattered,
    Dense,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PointClass {
    pub right: Side,
    pub left: Side,
}

impl PointClass {
    pub fn is_isolated(&self) -> bool {
        self.right == Side::Scattered && self.left == Side::Scattered
    }

    pub fn is_dense(&self) -> bool {
        self.right == Side::Dense && self.left == Side::Dense
    }

    pub fn is_right_scattered(&self) -> bool {
        self.right == Side::Scattered
    }
}

/// One step of an ordered walk over `[a, b]_T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Piece {
    Point(Point),
    /// A non-degenerate continuous run `[lo, hi]` inside one interval segment.
    Interval(Point, Point),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeScale {
    segments: Vec<Segment>,
}

impl TimeScale {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidScale("no segments".into()));
        }
        for s in &segments {
            s.validate()?;
        }
        for w in segments.windows(2) {
            if w[1].first_value() <= w[0].last_value() {
                return Err(Error::InvalidScale(format!(
                    "segments overlap or touch: {} >= {}",
                    w[0].last_value(),
                    w[1].first_value()
                )));
            }
        }
        Ok(TimeScale { segments })
    }

    pub fn single(segment: Segment) -> Result<Self> {
        Self::new(vec![segment])
    }

    /// `{1 - q^{-n} : n >= 0} ∪ {1}`, the condensation scale.
    pub fn geometric(q: f64, n_max: usize) -> Result<Self> {
        Self::single(Segment::geometric(q, n_max))
    }

    /// `h Z` restricted to `start, start + h, ..., start + (count - 1) h`.
    pub fn uniform(start: f64, step: f64, count: usize) -> Result<Self> {
        Self::single(Segment::uniform(start, step, count))
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::single(Segment::interval(a, b))
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Supremum of the scale.
    pub fn sup(&self) -> f64 {
        self.segments[self.segments.len() - 1].last_value()
    }

    pub fn inf(&self) -> f64 {
        self.segments[0].first_value()
    }

    pub fn first(&self) -> Point {
        self.segment_first(0)
    }

    pub fn last(&self) -> Point {
        self.segment_last(self.segments.len() - 1)
    }

    pub fn is_purely_isolated(&self) -> bool {
        !self
            .segments
            .iter()
            .any(|s| matches!(s, Segment::ContinuousInterval { .. }))
    }

    fn segment_first(&self, segment: usize) -> Point {
        match &self.segments[segment] {
            Segment::UniformGrid { .. } | Segment::ExplicitPoints(_) => Point {
                t: self.segments[segment].indexed_value(0),
                site: Site::Indexed { segment, index: 0 },
            },
            Segment::ContinuousInterval { a, .. } => Point::dense(segment, *a),
            Segment::GeometricCondensation { q, start, limit, .. } => {
                self.geometric_point(segment, *q, *start, *limit, 0)
            }
        }
    }

    fn segment_last(&self, segment: usize) -> Point {
        let seg = &self.segments[segment];
        match seg {
            Segment::UniformGrid { .. } | Segment::ExplicitPoints(_) => {
                let index = seg.indexed_len() - 1;
                Point {
                    t: seg.indexed_value(index),
                    site: Site::Indexed { segment, index },
                }
            }
            Segment::ContinuousInterval { b, .. } => Point::dense(segment, *b),
            Segment::GeometricCondensation { limit, .. } => Point {
                t: *limit,
                site: Site::Limit { segment },
            },
        }
    }

    fn geometric_point(&self, segment: usize, q: f64, start: f64, limit: f64, n: u32) -> Point {
        let gap = geometric_gap(q, start, limit, n);
        Point {
            t: limit - gap,
            site: Site::Geometric { segment, n, gap },
        }
    }

    /// Condensation point with index `n` on `segment`, regardless of `n_max`.
    pub(crate) fn condensation_point(&self, segment: usize, n: u32) -> Option<Point> {
        match self.segments.get(segment)? {
            Segment::GeometricCondensation { q, start, limit, .. } => {
                Some(self.geometric_point(segment, *q, *start, *limit, n))
            }
            _ => None,
        }
    }

    /// Resolve a real value to a scale point (within [`MEMBERSHIP_TOL`]).
    pub fn point(&self, t: f64) -> Result<Point> {
        if !t.is_finite() {
            return Err(Error::PointNotOnScale { t });
        }
        for (segment, seg) in self.segments.iter().enumerate() {
            let lo = seg.first_value();
            let hi = seg.last_value();
            if t < lo - membership_tol(lo) {
                break;
            }
            if t > hi + membership_tol(hi) {
                continue;
            }
            return self.locate_in(segment, t).ok_or(Error::PointNotOnScale { t });
        }
        Err(Error::PointNotOnScale { t })
    }

    fn locate_in(&self, segment: usize, t: f64) -> Option<Point> {
        let seg = &self.segments[segment];
        match seg {
            Segment::UniformGrid { start, step, count } => {
                let i = ((t - start) / step).round();
                if i < 0.0 || i >= *count as f64 {
                    return None;
                }
                let index = i as usize;
                let v = seg.indexed_value(index);
                ((t - v).abs() <= membership_tol(v)).then_some(Point {
                    t: v,
                    site: Site::Indexed { segment, index },
                })
            }
            Segment::ExplicitPoints(pts) => {
                let pos = pts.partition_point(|&p| p < t);
                [pos.checked_sub(1), Some(pos)]
                    .into_iter()
                    .flatten()
                    .filter(|&i| i < pts.len())
                    .find(|&i| (t - pts[i]).abs() <= membership_tol(pts[i]))
                    .map(|index| Point {
                        t: pts[index],
                        site: Site::Indexed { segment, index },
                    })
            }
            Segment::ContinuousInterval { a, b } => {
                let snapped = if (t - a).abs() <= membership_tol(*a) {
                    *a
                } else if (t - b).abs() <= membership_tol(*b) {
                    *b
                } else {
                    t
                };
                (snapped >= *a && snapped <= *b).then(|| Point::dense(segment, snapped))
            }
            Segment::GeometricCondensation { q, start, limit, .. } => {
                let gap = limit - t;
                let limit_dist = gap.abs();
                let limit_ok = limit_dist <= membership_tol(*limit);
                let candidate = (gap > 0.0)
                    .then(|| ((limit - start) / gap).ln() / q.ln())
                    .map(f64::round)
                    .filter(|n| *n >= 0.0 && *n <= u32::MAX as f64)
                    .map(|n| self.geometric_point(segment, *q, *start, *limit, n as u32))
                    .filter(|p| (p.t - t).abs() <= membership_tol(p.t));
                match candidate {
                    Some(p) if !limit_ok || (p.t - t).abs() < limit_dist => Some(p),
                    _ if limit_ok => Some(Point {
                        t: *limit,
                        site: Site::Limit { segment },
                    }),
                    other => other,
                }
            }
        }
    }

    /// Check that a handle belongs to this scale (segment exists and the value matches).
    pub fn contains(&self, p: &Point) -> bool {
        let Some(seg) = self.segments.get(p.segment()) else {
            return false;
        };
        match (seg, p.site) {
            (Segment::UniformGrid { .. } | Segment::ExplicitPoints(_), Site::Indexed { index, .. }) => {
                index < seg.indexed_len() && seg.indexed_value(index) == p.t
            }
            (Segment::ContinuousInterval { a, b }, Site::Dense { .. }) => p.t >= *a && p.t <= *b,
            (Segment::GeometricCondensation { .. }, Site::Geometric { .. } | Site::Limit { .. }) => true,
            _ => false,
        }
    }

    fn next_segment_first(&self, segment: usize) -> Option<Point> {
        (segment + 1 < self.segments.len()).then(|| self.segment_first(segment + 1))
    }

    fn prev_segment_last(&self, segment: usize) -> Option<Point> {
        segment.checked_sub(1).map(|s| self.segment_last(s))
    }

    /// Forward jump: `inf {s > t}`, or `t` itself at the maximum.
    pub fn sigma(&self, p: &Point) -> Point {
        match (p.site, &self.segments[p.segment()]) {
            (Site::Indexed { segment, index }, seg) => {
                if index + 1 < seg.indexed_len() {
                    Point {
                        t: seg.indexed_value(index + 1),
                        site: Site::Indexed {
                            segment,
                            index: index + 1,
                        },
                    }
                } else {
                    self.next_segment_first(segment).unwrap_or(*p)
                }
            }
            (
                Site::Geometric { segment, n, .. },
                Segment::GeometricCondensation { q, start, limit, .. },
            ) => self.geometric_point(segment, *q, *start, *limit, n + 1),
            (Site::Limit { segment }, _) => self.next_segment_first(segment).unwrap_or(*p),
            (Site::Dense { segment }, Segment::ContinuousInterval { b, .. }) => {
                if p.t < *b {
                    *p
                } else {
                    self.next_segment_first(segment).unwrap_or(*p)
                }
            }
            _ => unreachable!("point handle does not match its segment"),
        }
    }

    /// Backward jump: `sup {s < t}`, or `t` itself at the minimum.
    pub fn rho(&self, p: &Point) -> Point {
        match (p.site, &self.segments[p.segment()]) {
            (Site::Indexed { segment, index }, seg) => {
                if index > 0 {
                    Point {
                        t: seg.indexed_value(index - 1),
                        site: Site::Indexed {
                            segment,
                            index: index - 1,
                        },
                    }
                } else {
                    self.prev_segment_last(segment).unwrap_or(*p)
                }
            }
            (
                Site::Geometric { segment, n, .. },
                Segment::GeometricCondensation { q, start, limit, .. },
            ) => {
                if n > 0 {
                    self.geometric_point(segment, *q, *start, *limit, n - 1)
                } else {
                    self.prev_segment_last(segment).unwrap_or(*p)
                }
            }
            (Site::Limit { .. }, _) => *p,
            (Site::Dense { segment }, Segment::ContinuousInterval { a, .. }) => {
                if p.t > *a {
                    *p
                } else {
                    self.prev_segment_last(segment).unwrap_or(*p)
                }
            }
            _ => unreachable!("point handle does not match its segment"),
        }
    }

    /// Graininess `sigma(t) - t`.
    pub fn mu(&self, p: &Point) -> f64 {
        if let (Site::Geometric { gap, .. }, Segment::GeometricCondensation { q, .. }) =
            (p.site, &self.segments[p.segment()])
        {
            return gap * (q - 1.0) / q;
        }
        self.sigma(p).t - p.t
    }

    /// Signed length `b - a`, exact in the gaps on a condensation segment.
    pub fn span(&self, a: &Point, b: &Point) -> f64 {
        match (a.gap_to_limit(), b.gap_to_limit()) {
            (Some(ga), Some(gb)) if a.segment() == b.segment() => ga - gb,
            _ => b.t - a.t,
        }
    }

    pub fn classify(&self, p: &Point) -> PointClass {
        let side = |moved: Point| {
            if moved == *p {
                Side::Dense
            } else {
                Side::Scattered
            }
        };
        PointClass {
            right: side(self.sigma(p)),
            left: side(self.rho(p)),
        }
    }

    /// True when `p` is the maximum of the scale and left-scattered (not in T^κ).
    pub fn is_left_scattered_max(&self, p: &Point) -> bool {
        *p == self.last() && self.classify(p).left == Side::Scattered
    }

    /// Ordered walk over `[a, b]_T`: isolated points one by one and continuous
    /// runs as interval descriptors. Walks heading into a condensation limit
    /// stop after `n_max` and then emit the limit.
    pub fn points_between(&self, a: &Point, b: &Point) -> Result<Vec<Piece>> {
        if a > b {
            return Err(Error::EmptyInterval { a: a.t, b: b.t });
        }
        let mut out = Vec::new();
        for segment in a.segment()..=b.segment() {
            let lo = if segment == a.segment() {
                *a
            } else {
                self.segment_first(segment)
            };
            let hi = if segment == b.segment() {
                *b
            } else {
                self.segment_last(segment)
            };
            match &self.segments[segment] {
                seg @ (Segment::UniformGrid { .. } | Segment::ExplicitPoints(_)) => {
                    let (i0, i1) = (lo.index().unwrap(), hi.index().unwrap());
                    out.extend((i0..=i1).map(|index| {
                        Piece::Point(Point {
                            t: seg.indexed_value(index),
                            site: Site::Indexed { segment, index },
                        })
                    }));
                }
                Segment::ContinuousInterval { .. } => {
                    if lo == hi {
                        out.push(Piece::Point(lo));
                    } else {
                        out.push(Piece::Interval(lo, hi));
                    }
                }
                Segment::GeometricCondensation {
                    q,
                    n_max,
                    start,
                    limit,
                } => match (lo.site, hi.site) {
                    (Site::Limit { .. }, _) => out.push(Piece::Point(lo)),
                    (Site::Geometric { n: n0, .. }, Site::Geometric { n: n1, .. }) => {
                        out.extend((n0..=n1).map(|n| {
                            Piece::Point(self.geometric_point(segment, *q, *start, *limit, n))
                        }));
                    }
                    (Site::Geometric { n: n0, .. }, Site::Limit { .. }) => {
                        let n_max = *n_max as u32;
                        if n0 <= n_max {
                            out.extend((n0..=n_max).map(|n| {
                                Piece::Point(self.geometric_point(segment, *q, *start, *limit, n))
                            }));
                        }
                        out.push(Piece::Point(hi));
                    }
                    _ => unreachable!("point handle does not match its segment"),
                },
            }
        }
        Ok(out)
    }

    /// Largest materialized point `<= v` (condensation walks stop at `n_max`,
    /// the limit itself counts when `v` reaches it).
    pub fn floor_point(&self, v: f64) -> Option<Point> {
        let mut best = None;
        for (segment, seg) in self.segments.iter().enumerate() {
            let lo = seg.first_value();
            if v < lo - membership_tol(lo) {
                break;
            }
            let hi = seg.last_value();
            if v >= hi - membership_tol(hi) {
                best = Some(self.segment_last(segment));
                continue;
            }
            best = Some(match seg {
                Segment::UniformGrid { start, step, .. } => {
                    let index = (((v - start) / step) + MEMBERSHIP_TOL).floor().max(0.0) as usize;
                    Point {
                        t: seg.indexed_value(index),
                        site: Site::Indexed { segment, index },
                    }
                }
                Segment::ExplicitPoints(pts) => {
                    let index = pts
                        .partition_point(|&p| p <= v + membership_tol(p))
                        .saturating_sub(1);
                    Point {
                        t: pts[index],
                        site: Site::Indexed { segment, index },
                    }
                }
                Segment::ContinuousInterval { .. } => Point::dense(segment, v),
                Segment::GeometricCondensation {
                    q,
                    n_max,
                    start,
                    limit,
                } => {
                    let gap = limit - v;
                    let n = (((limit - start) / gap).ln() / q.ln() + 1e-9).floor().max(0.0);
                    let n = (n as usize).min(*n_max) as u32;
                    self.geometric_point(segment, *q, *start, *limit, n)
                }
            });
            break;
        }
        best
    }

    /// Last materialized point before a condensation limit, if `p` is one.
    pub(crate) fn last_materialized_before_limit(&self, p: &Point) -> Option<Point> {
        match (p.site, &self.segments[p.segment()]) {
            (
                Site::Limit { segment },
                Segment::GeometricCondensation {
                    q,
                    n_max,
                    start,
                    limit,
                },
            ) => Some(self.geometric_point(segment, *q, *start, *limit, *n_max as u32)),
            _ => None,
        }
    }

    /// `(q, start, limit)` of a condensation segment.
    pub(crate) fn condensation_params(&self, segment: usize) -> Option<(f64, f64, f64)> {
        match self.segments.get(segment)? {
            Segment::GeometricCondensation { q, start, limit, .. } => Some((*q, *start, *limit)),
            _ => None,
        }
    }

    /// Continuous interval bounds of the segment holding `p`, if it is dense-addressed.
    pub(crate) fn interval_bounds(&self, p: &Point) -> Option<(f64, f64)> {
        match (p.site, &self.segments[p.segment()]) {
            (Site::Dense { .. }, Segment::ContinuousInterval { a, b }) => Some((*a, *b)),
            _ => None,
        }
    }
}
