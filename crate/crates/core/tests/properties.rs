use std::sync::Arc;

use nalgebra::DVector;
use proptest::prelude::*;
use tscale::averaging::{build_averaged_field_quasiperiodic, VectorField};
use tscale::scale::{delta_integral, exp_function, scalar_fn, Point, Segment, TimeScale};
use tscale::shift::{substitution_rule_check, verify_quasiperiodic, ShiftMap, ShiftOperator, VerifyOptions};
use tscale::solver::{product_solution_linear, solve, DynamicSystem, SolveOptions, StepKind};

fn walk(ts: &TimeScale, n: usize) -> Vec<Point> {
    let mut pts = vec![ts.first()];
    for _ in 0..n {
        let s = ts.sigma(pts.last().unwrap());
        if s == *pts.last().unwrap() {
            break;
        }
        pts.push(s);
    }
    pts
}

/// A mixed scale: grid, interval, isolated points.
fn mixed(step: f64, count: usize, len: f64, extra: Vec<f64>) -> TimeScale {
    let grid_end = step * (count - 1) as f64;
    let a = grid_end + 0.5;
    let b = a + len;
    let mut pts: Vec<f64> = extra.iter().map(|e| b + 0.1 + e).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() < 1e-3);
    TimeScale::new(vec![Segment::uniform(0.0, step, count), Segment::interval(a, b), Segment::points(pts)]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jump_operators_are_ordered(q in 1.1f64..5.0, n in 0usize..60) {
        let ts = TimeScale::geometric(q, 64).unwrap();
        let p = walk(&ts, n).pop().unwrap();
        let s = ts.sigma(&p);
        let r = ts.rho(&p);
        prop_assert!(s.t() >= p.t());
        prop_assert!(r.t() <= p.t());
        prop_assert!(ts.mu(&p) > 0.0);
        prop_assert!(ts.rho(&s) == p);
    }

    #[test]
    fn integral_is_additive(step in 0.05f64..1.0, count in 2usize..20, len in 0.1f64..3.0,
                            extra in proptest::collection::vec(0.0f64..5.0, 1..6), c in -2.0f64..2.0) {
        let ts = mixed(step, count, len, extra);
        let f = scalar_fn(move |p: &Point| c + p.t().cos());
        let pts = walk(&ts, 200);
        let a = ts.first();
        let b = pts[pts.len() / 2];
        let e = ts.last();
        let whole = delta_integral(&ts, &f, &a, &e).unwrap()[0];
        let split = delta_integral(&ts, &f, &a, &b).unwrap()[0] + delta_integral(&ts, &f, &b, &e).unwrap()[0];
        prop_assert!((whole - split).abs() <= 1e-10 * (1.0 + whole.abs()));
    }

    #[test]
    fn integral_derivative_at_scattered_points(q in 1.2f64..4.0, n in 1usize..40, c in -3.0f64..3.0) {
        let ts = TimeScale::geometric(q, 64).unwrap();
        let f = scalar_fn(move |p: &Point| c * p.t() + 1.0);
        let p = walk(&ts, n).pop().unwrap();
        let s = ts.sigma(&p);
        let lo = delta_integral(&ts, &f, &ts.first(), &p).unwrap()[0];
        let hi = delta_integral(&ts, &f, &ts.first(), &s).unwrap()[0];
        // compare increments; the quotient itself loses digits once μ is tiny
        let step = (c * p.t() + 1.0) * ts.mu(&p);
        prop_assert!(((hi - lo) - step).abs() <= 1e-14 * (1.0 + lo.abs()));
    }

    #[test]
    fn exp_step_identity(q in 1.2f64..4.0, n in 0usize..40, p in -0.4f64..3.0) {
        let ts = TimeScale::geometric(q, 64).unwrap();
        let pf = scalar_fn(move |_| p);
        let t = walk(&ts, n).pop().unwrap();
        let s = ts.sigma(&t);
        let e = exp_function(&ts, &pf, &t, &ts.first()).unwrap();
        let es = exp_function(&ts, &pf, &s, &ts.first()).unwrap();
        prop_assert_eq!(es, e * (1.0 + ts.mu(&t) * p));
    }

    #[test]
    fn shifts_invert(q in 1.2f64..4.0, n in 0usize..40, s in 1u32..5) {
        let ts = TimeScale::geometric(q, 64).unwrap();
        let op = ShiftOperator::geometric(q).unwrap();
        let t = walk(&ts, n).pop().unwrap();
        let f = op.forward(&ts, s as f64, &t).unwrap();
        prop_assert_eq!(f.index(), Some(n + s as usize));
        prop_assert!(op.backward(&ts, s as f64, &f).unwrap() == t);
    }

    #[test]
    fn alternating_gamma(q in 1.2f64..4.0, period in 1u32..6) {
        let ts = TimeScale::geometric(q, 64).unwrap();
        let op = ShiftOperator::geometric(q).unwrap();
        let f = scalar_fn(|p: &Point| if p.index().unwrap() % 2 == 0 { 1.0 } else { -1.0 });
        let c = verify_quasiperiodic(&ts, &op, &f, period as f64, &walk(&ts, 50), &VerifyOptions::default()).unwrap();
        let expected = if period % 2 == 0 { 1.0 } else { -1.0 } * q.powi(-(period as i32));
        prop_assert!((c.gamma - expected).abs() <= 1e-12);
    }

    #[test]
    fn substitution_with_additive_shift(h in 0.1f64..2.0, k in 1u32..4, n in 2usize..40, a in -1.0f64..1.0) {
        let ts = TimeScale::uniform(0.0, h, 60).unwrap();
        let op = ShiftOperator::additive(0.0, h).unwrap();
        let nu = ShiftMap { op: &op, shift: h * k as f64 };
        let g = scalar_fn(move |p: &Point| (a * p.t()).exp());
        let b = ts.point(h * n as f64).unwrap();
        let r = substitution_rule_check(&ts, &nu, &g, &ts.first(), &b).unwrap();
        let size = delta_integral(&ts, &g, &ts.first(), &b).unwrap()[0].abs();
        prop_assert!(r <= 1e-12 * (1.0 + size));
    }

    #[test]
    fn solver_matches_product_on_isolated_scales(q in 1.2f64..4.0, eps in 0.0f64..0.2, c in -2.0f64..2.0) {
        let ts = TimeScale::geometric(q, 64).unwrap();
        let rhs = VectorField::new(1, move |_: &Point, x: &DVector<f64>| x * c);
        let sys = DynamicSystem::new(Arc::new(rhs), eps, ts.first(), DVector::from_element(1, 1.0)).unwrap();
        let end = walk(&ts, 64).pop().unwrap();
        let traj = solve(&sys, &ts, &end, &SolveOptions::default()).unwrap();
        for (k, s) in traj.samples.iter().enumerate() {
            let y = product_solution_linear(&ts, &ts.first(), |_, _| eps * c, 1.0, k).unwrap();
            prop_assert!((s.x[0] - y).abs() <= 1e-14 * y.abs());
        }
    }

    #[test]
    fn trajectories_are_well_formed(step in 0.05f64..1.0, count in 2usize..20, len in 0.1f64..3.0,
                                    extra in proptest::collection::vec(0.0f64..5.0, 1..6),
                                    eps in 0.0f64..0.3, x0 in -1.5f64..1.5) {
        let ts = mixed(step, count, len, extra);
        let rhs = VectorField::new(1, |p: &Point, x: &DVector<f64>| x * p.t().sin());
        let sys = DynamicSystem::new(Arc::new(rhs), eps, ts.first(), DVector::from_element(1, x0)).unwrap();
        let opts = SolveOptions { dense_samples: 4, ..Default::default() };
        let traj = solve(&sys, &ts, &ts.last(), &opts).unwrap();
        prop_assert!(traj.samples[0].point == sys.t0);
        prop_assert_eq!(traj.samples[0].x[0], x0);
        prop_assert_eq!(traj.samples[0].kind, StepKind::Initial);
        for w in traj.samples.windows(2) {
            prop_assert!(w[0].point.t() < w[1].point.t());
        }
        for s in &traj.samples {
            prop_assert!(ts.contains(&s.point));
        }
    }

    #[test]
    fn averaged_intervals_have_mean_zero_residual(q in 1.2f64..4.0, x in -2.0f64..2.0, i in 0usize..30) {
        prop_assume!(x.abs() > 1e-3);
        let ts = TimeScale::geometric(q, 64).unwrap();
        let op = ShiftOperator::geometric(q).unwrap();
        let mut f = VectorField::new(1, |p: &Point, x: &DVector<f64>| {
            x * if p.index().unwrap_or(0) % 2 == 0 { 1.0 } else { -1.0 }
        });
        let cert = f.certify(&ts, &op, 2.0, &walk(&ts, 60), &[DVector::from_element(1, x)], &VerifyOptions::default()).unwrap();
        let avg = build_averaged_field_quasiperiodic(&f, &ts, &op, 2.0, &ts.first(), cert.gamma, 30).unwrap();
        let xv = DVector::from_element(1, x);
        prop_assert!(avg.mean_zero_residual(i, &xv).unwrap() <= 1e-10);
        let expected = x * (q - 1.0) / (q + 1.0);
        prop_assert!((avg.interval_value(i, &xv).unwrap()[0] - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
    }
}
