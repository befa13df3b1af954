//! Solutions of `x^Δ = ε X(t, x)`, `x(t0) = x0`.
//!
//! Right-scattered points advance with the exact step
//! `x(σ(t)) = x(t) + μ(t) ε X(t, x(t))`; continuous runs are integrated with
//! Dormand–Prince 5(4). A condensation limit is never stepped onto: the walk
//! stops at the last materialized point and the remaining tail is bounded by
//! `ε M (limit - t_{n_max})`.

pub mod rk;

use std::sync::Arc;

use nalgebra::DVector;

use crate::averaging::RightHandSide;
use crate::domain::DomainBox;
use crate::error::{Error, Result};
use crate::scale::{Piece, Point, TimeScale};

pub const DEFAULT_MARGIN: f64 = 0.1;

#[derive(Clone)]
pub struct DynamicSystem {
    pub rhs: Arc<dyn RightHandSide>,
    pub epsilon: f64,
    pub t0: Point,
    pub x0: DVector<f64>,
    pub domain: Option<DomainBox>,
    pub margin: f64,
}

impl std::fmt::Debug for DynamicSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DynamicSystem")
            .field("epsilon", &self.epsilon)
            .field("t0", &self.t0)
            .field("x0", &self.x0)
            .field("domain", &self.domain)
            .field("margin", &self.margin)
            .finish()
    }
}

impl DynamicSystem {
    pub fn new(rhs: Arc<dyn RightHandSide>, epsilon: f64, t0: Point, x0: DVector<f64>) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::NonPositiveParameter {
                name: "epsilon",
                value: epsilon,
            });
        }
        if x0.len() != rhs.dim() {
            return Err(Error::DimensionMismatch {
                expected: rhs.dim(),
                found: x0.len(),
            });
        }
        Ok(DynamicSystem {
            rhs,
            epsilon,
            t0,
            x0,
            domain: None,
            margin: DEFAULT_MARGIN,
        })
    }

    /// Restrict to `D`; `x0` must lie in `D` shrunk by `margin` of its extent.
    pub fn with_domain(mut self, domain: DomainBox, margin: f64) -> Result<Self> {
        if domain.dim() != self.x0.len() {
            return Err(Error::DimensionMismatch {
                expected: self.x0.len(),
                found: domain.dim(),
            });
        }
        if !(0.0..0.5).contains(&margin) {
            return Err(Error::NonPositiveParameter {
                name: "margin",
                value: margin,
            });
        }
        if !domain.shrink(margin).contains(&self.x0) {
            return Err(Error::InitialOutsideDomain);
        }
        self.domain = Some(domain);
        self.margin = margin;
        Ok(self)
    }

    fn field(&self, p: &Point, x: &DVector<f64>) -> Result<DVector<f64>> {
        let v = self.rhs.eval(p, x);
        if v.len() != x.len() || v.iter().any(|c| !c.is_finite()) {
            return Err(Error::FieldEvaluationFailure { t: p.t() });
        }
        Ok(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Interior output points per continuous run, evenly spaced.
    pub dense_samples: usize,
    pub max_steps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            rtol: 1e-10,
            atol: 1e-10,
            dense_samples: 0,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminalStatus {
    Completed,
    LeftDomain,
    HorizonReached,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Initial,
    /// Reached by the exact scattered step.
    Exact,
    /// Reached by integrating a continuous run.
    Integrated,
    /// A condensation limit passed through; the value is carried over from the
    /// last materialized point.
    Truncated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub point: Point,
    pub x: DVector<f64>,
    pub kind: StepKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub status: TerminalStatus,
    /// Bound on the part of the solution dropped at condensation limits, when
    /// a bound `M` on the field is known.
    pub tail_bound: Option<f64>,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has an initial sample")
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.point.t()).collect()
    }

    /// First component at every sample.
    pub fn first_component(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.x[0]).collect()
    }
}

struct Walker<'a> {
    sys: &'a DynamicSystem,
    ts: &'a TimeScale,
    opts: &'a SolveOptions,
    samples: Vec<Sample>,
    cur: Point,
    x: DVector<f64>,
    tail: f64,
    h: Option<f64>,
}

impl Walker<'_> {
    fn push(&mut self, kind: StepKind) -> bool {
        self.samples.push(Sample {
            point: self.cur,
            x: self.x.clone(),
            kind,
        });
        match &self.sys.domain {
            Some(d) => d.contains(&self.x),
            None => true,
        }
    }

    /// Move from the current point to `p`, which is either `σ(cur)` or a
    /// condensation limit following the last materialized point.
    fn advance_to(&mut self, p: Point) -> Result<bool> {
        if p == self.cur {
            return Ok(true);
        }
        if p.is_condensation_limit() && p.segment() == self.cur.segment() {
            let gap = self.cur.gap_to_limit().unwrap_or(0.0);
            self.tail += self.sys.epsilon * self.sys.rhs.bound().unwrap_or(f64::NAN) * gap;
            self.cur = p;
            return Ok(self.push(StepKind::Truncated));
        }
        let mu = self.ts.mu(&self.cur);
        debug_assert!(mu > 0.0, "advance from a right-dense point");
        let v = self.sys.field(&self.cur, &self.x)?;
        self.x.axpy(mu * self.sys.epsilon, &v, 1.0);
        if self.x.iter().any(|c| !c.is_finite()) {
            return Err(Error::FieldEvaluationFailure { t: self.cur.t() });
        }
        self.cur = p;
        Ok(self.push(StepKind::Exact))
    }

    fn integrate_run(&mut self, lo: Point, hi: Point) -> Result<bool> {
        let seg = lo.segment();
        let nodes = self.opts.dense_samples + 1;
        let (a, b) = (lo.t(), hi.t());
        let rk_opts = rk::RkOptions {
            rtol: self.opts.rtol,
            atol: self.opts.atol,
            max_steps: self.opts.max_steps,
        };
        let sys = self.sys;
        for j in 1..=nodes {
            let t_from = self.cur.t();
            let t_to = if j == nodes {
                b
            } else {
                a + (b - a) * j as f64 / nodes as f64
            };
            let eps = sys.epsilon;
            let out = rk::integrate(
                |t, x| Ok(sys.field(&Point::dense(seg, t), x)? * eps),
                t_from,
                t_to,
                &self.x,
                self.h,
                &rk_opts,
            )?;
            self.h = Some(out.h);
            self.x = out.x;
            self.cur = if j == nodes { hi } else { Point::dense(seg, t_to) };
            let inside = self.push(StepKind::Integrated);
            if !inside && j == nodes {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Solve on `[t0, end]_T`.
pub fn solve(sys: &DynamicSystem, ts: &TimeScale, end: &Point, opts: &SolveOptions) -> Result<Trajectory> {
    if !ts.contains(&sys.t0) {
        return Err(Error::PointNotOnScale { t: sys.t0.t() });
    }
    let pieces = ts.points_between(&sys.t0, end)?;
    let mut w = Walker {
        sys,
        ts,
        opts,
        samples: Vec::new(),
        cur: sys.t0,
        x: sys.x0.clone(),
        tail: 0.0,
        h: None,
    };
    w.push(StepKind::Initial);
    // a final condensation limit is not stepped onto
    let stop_before_limit = end.is_condensation_limit() && *end != sys.t0;
    let count = pieces.len();
    let mut status = TerminalStatus::Completed;
    for (i, piece) in pieces.into_iter().enumerate() {
        let inside = match piece {
            Piece::Point(p) => {
                if i + 1 == count && stop_before_limit {
                    let gap = w.cur.gap_to_limit().unwrap_or(0.0);
                    w.tail += sys.epsilon * sys.rhs.bound().unwrap_or(f64::NAN) * gap;
                    true
                } else {
                    w.advance_to(p)?
                }
            }
            Piece::Interval(lo, hi) => w.advance_to(lo)? && w.integrate_run(lo, hi)?,
        };
        if !inside {
            status = TerminalStatus::LeftDomain;
            break;
        }
    }
    let tail_bound = if w.tail.is_nan() {
        None
    } else {
        Some(w.tail)
    };
    Ok(Trajectory {
        samples: w.samples,
        status,
        tail_bound,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Horizon {
    pub point: Point,
    /// `t0 + L/ε` lies beyond the last materialized point.
    pub saturated: bool,
}

/// Largest materialized scale point `≤ t0 + L/ε`. A condensation limit maps to
/// the last materialized point before it.
pub fn horizon_for(epsilon: f64, l: f64, ts: &TimeScale, t0: &Point) -> Result<Horizon> {
    if !(l > 0.0) {
        return Err(Error::NonPositiveParameter { name: "L", value: l });
    }
    let target = if epsilon > 0.0 { t0.t() + l / epsilon } else { f64::INFINITY };
    let mut point = ts.floor_point(target).ok_or(Error::EmptyHorizon { t0: t0.t() })?;
    if point.is_condensation_limit() {
        point = ts.last_materialized_before_limit(&point).unwrap_or(point);
    }
    if point < *t0 {
        return Err(Error::EmptyHorizon { t0: t0.t() });
    }
    let last = {
        let l = ts.last();
        ts.last_materialized_before_limit(&l).unwrap_or(l)
    };
    let saturated = point == last && target > last.t();
    Ok(Horizon { point, saturated })
}

/// [`solve`] over `[t0, horizon_for(ε, L)]`; a saturated horizon ends with
/// [`TerminalStatus::HorizonReached`].
pub fn solve_over_horizon(sys: &DynamicSystem, ts: &TimeScale, l: f64, opts: &SolveOptions) -> Result<(Trajectory, Horizon)> {
    let horizon = horizon_for(sys.epsilon, l, ts, &sys.t0)?;
    let mut traj = solve(sys, ts, &horizon.point, opts)?;
    if horizon.saturated && traj.status == TerminalStatus::Completed {
        traj.status = TerminalStatus::HorizonReached;
    }
    Ok((traj, horizon))
}

/// `y(σ^k(t0)) = y0 ∏_{i<k} (1 + μ(σ^i(t0)) p_i)` on a purely isolated run.
pub fn product_solution_linear(
    ts: &TimeScale,
    t0: &Point,
    coeff: impl Fn(usize, &Point) -> f64,
    y0: f64,
    k: usize,
) -> Result<f64> {
    let mut y = y0;
    let mut p = *t0;
    for i in 0..k {
        let mu = ts.mu(&p);
        if !(mu > 0.0) {
            return Err(Error::NotIsolated { t: p.t() });
        }
        y *= mu.mul_add(coeff(i, &p), 1.0);
        p = ts.sigma(&p);
    }
    Ok(y)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProximityReport {
    pub max_diff: f64,
    pub argmax: Point,
    pub diffs: Vec<f64>,
}

/// Pointwise `‖a(t) - b(t)‖` over a shared grid.
pub fn compare_trajectories(a: &Trajectory, b: &Trajectory) -> Result<ProximityReport> {
    if a.samples.len() != b.samples.len() {
        return Err(Error::GridMismatch {
            index: a.samples.len().min(b.samples.len()),
        });
    }
    let mut diffs = Vec::with_capacity(a.samples.len());
    let mut max_diff = 0.0;
    let mut argmax = a.samples[0].point;
    for (i, (sa, sb)) in a.samples.iter().zip(&b.samples).enumerate() {
        if sa.point != sb.point || sa.x.len() != sb.x.len() {
            return Err(Error::GridMismatch { index: i });
        }
        let d = (&sa.x - &sb.x).norm();
        if d > max_diff {
            max_diff = d;
            argmax = sa.point;
        }
        diffs.push(d);
    }
    Ok(ProximityReport {
        max_diff,
        argmax,
        diffs,
    })
}
