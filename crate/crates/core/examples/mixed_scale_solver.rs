//! Solving y^Δ = p(t) y on a scale mixing a grid, an interval, isolated points
//! and a condensation family, checked against the exponential e_p.

use std::sync::Arc;

use nalgebra::DVector;
use tscale::averaging::VectorField;
use tscale::scale::{exp_function, scalar_fn, Point, Segment, TimeScale};
use tscale::solver::{solve, DynamicSystem, SolveOptions, StepKind};

fn main() -> tscale::Result<()> {
    let ts = TimeScale::new(vec![
        Segment::uniform(0.0, 0.25, 4),
        Segment::interval(1.0, 2.0),
        Segment::points(vec![2.5, 3.0]),
        Segment::GeometricCondensation {
            q: 2.0,
            n_max: 20,
            start: 4.0,
            limit: 5.0,
        },
    ])?;
    let p = |t: f64| 0.4 + 0.1 * t.sin();
    let rhs = VectorField::new(1, move |pt: &Point, y: &DVector<f64>| y * p(pt.t()));
    let sys = DynamicSystem::new(Arc::new(rhs), 1.0, ts.first(), DVector::from_element(1, 1.0))?;
    let opts = SolveOptions {
        rtol: 1e-13,
        atol: 1e-14,
        dense_samples: 3,
        ..Default::default()
    };
    let traj = solve(&sys, &ts, &ts.last(), &opts)?;
    let pf = scalar_fn(move |pt: &Point| p(pt.t()));

    println!("{:>10} {:>11} {:>20} {:>10}", "t", "step", "y", "rel err");
    let mut worst: f64 = 0.0;
    for s in &traj.samples {
        let e = exp_function(&ts, &pf, &s.point, &ts.first())?;
        let rel = (s.x[0] - e).abs() / e;
        worst = worst.max(rel);
        let kind = match s.kind {
            StepKind::Initial => "initial",
            StepKind::Exact => "exact",
            StepKind::Integrated => "integrated",
            StepKind::Truncated => "truncated",
        };
        if s.point.t() < 4.5 || s.point.index().is_some_and(|n| n % 5 == 0) {
            println!("{:>10.6} {kind:>11} {:>20.15} {rel:>10.2e}", s.point.t(), s.x[0]);
        }
    }
    println!("samples {}, status {:?}, worst relative error {worst:.2e}", traj.samples.len(), traj.status);
    println!("tail bound beyond t_20: {:?}", traj.tail_bound);
    Ok(())
}
