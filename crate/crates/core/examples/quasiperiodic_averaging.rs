//! The alternating linear system on {1 - q^-n} ∪ {1}: certify the field,
//! build the averaged right-hand side and compare both solutions against the
//! proximity bound C·ε.

use std::sync::Arc;

use nalgebra::DVector;
use tscale::averaging::{build_averaged_field_quasiperiodic, error_bound_constant, VectorField};
use tscale::scale::{Point, TimeScale};
use tscale::shift::{sample_points, ShiftOperator, VerifyOptions};
use tscale::solver::{compare_trajectories, solve_over_horizon, DynamicSystem, SolveOptions};

fn main() -> tscale::Result<()> {
    let eps = 0.005;
    for q in [2.0, 1.8, 3.0] {
        let ts = TimeScale::geometric(q, 64)?;
        let op = ShiftOperator::geometric(q)?;
        let mut field = VectorField::new(1, |p: &Point, x: &DVector<f64>| {
            x * if p.index().unwrap_or(0) % 2 == 0 { 1.0 } else { -1.0 }
        })
        .with_constants(2.0, 1.0)?;
        let samples = sample_points(&ts, &ts.first(), &ts.point(1.0 - q.powi(-40))?)?;
        let states = [DVector::from_element(1, 1.0), DVector::from_element(1, -0.7)];
        let cert = field.certify(&ts, &op, 2.0, &samples, &states, &VerifyOptions::default())?;

        let avg = build_averaged_field_quasiperiodic(&field, &ts, &op, 2.0, &ts.first(), cert.gamma, 32)?;
        let x1 = DVector::from_element(1, 1.0);
        let k = avg.max_interval_length();
        let c = error_bound_constant(2.0, 1.0, 1.0, k)?;

        let x0 = DVector::from_element(1, 1.0);
        let orig = DynamicSystem::new(Arc::new(field), eps, ts.first(), x0.clone())?;
        let aver = DynamicSystem::new(Arc::new(avg), eps, ts.first(), x0)?;
        let opts = SolveOptions::default();
        let (x, horizon) = solve_over_horizon(&orig, &ts, 1.0, &opts)?;
        let (xi, _) = solve_over_horizon(&aver, &ts, 1.0, &opts)?;
        let report = compare_trajectories(&x, &xi)?;

        println!("q = {q}");
        println!("  certificate  {} gamma = {:.6}", cert.kind, cert.gamma);
        println!("  averaged     X̂_i(1) = {:.12}  ((q-1)/(q+1) = {:.12})", aver_value(&aver, &x1), (q - 1.0) / (q + 1.0));
        println!("  horizon      t_{} (saturated: {})", horizon.point.index().unwrap(), horizon.saturated);
        println!("  x(t_64)      {:.12}", x.last().x[0]);
        println!("  xi(t_64)     {:.12}", xi.last().x[0]);
        println!("  max |x - xi| {:.6e} at k = {}", report.max_diff, report.argmax.index().unwrap());
        println!("  C eps        {:.6e} (K = {k:.6})", c * eps);
    }
    Ok(())
}

fn aver_value(sys: &DynamicSystem, x: &DVector<f64>) -> f64 {
    sys.rhs.eval(&sys.t0, x)[0]
}
