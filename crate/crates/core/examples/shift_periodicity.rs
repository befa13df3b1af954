//! Periodicity in shifts: certificates for Δ-periodic and quasiperiodic
//! functions, the substitution rule and integral invariance.

use tscale::scale::{scalar_fn, Point, TimeScale};
use tscale::shift::{
    periodic_integral_invariance_check, sample_points, substitution_rule_check, verify_delta_periodic,
    verify_quasiperiodic, ShiftMap, ShiftOperator, VerifyOptions,
};

fn main() -> tscale::Result<()> {
    let opts = VerifyOptions::default();
    for q in [1.8, 2.0, 3.0] {
        let ts = TimeScale::geometric(q, 64)?;
        let op = ShiftOperator::geometric(q)?;
        let samples = sample_points(&ts, &ts.first(), &ts.point(1.0 - q.powi(-40))?)?;

        let inv = scalar_fn(|p: &Point| 1.0 / p.gap_to_limit().unwrap());
        let rel = VerifyOptions { relative: true, ..opts };
        let c = verify_delta_periodic(&ts, &op, &inv, 1.0, &samples, &rel)?;
        println!("q = {q}: 1/(1-t), T = 1   -> {} (residual {:e})", c.kind, c.max_residual);

        let sign = scalar_fn(|p: &Point| if p.index().unwrap() % 2 == 0 { 1.0 } else { -1.0 });
        let c = verify_quasiperiodic(&ts, &op, &sign, 2.0, &samples, &opts)?;
        println!("q = {q}: (-1)^k, T = 2    -> {} gamma = {:.12} (q^-2 = {:.12})", c.kind, c.gamma, q.powi(-2));

        let one = scalar_fn(|_| 1.0);
        let c = verify_delta_periodic(&ts, &op, &one, 2.0, &samples, &opts)?;
        println!("q = {q}: 1, T = 2         -> {} (residual {:.6})", c.kind, c.max_residual);

        let nu = ShiftMap { op: &op, shift: 2.0 };
        let g = scalar_fn(|p: &Point| p.t().sin());
        let r = substitution_rule_check(&ts, &nu, &g, &ts.first(), &ts.point(1.0 - q.powi(-12))?)?;
        println!("q = {q}: substitution rule residual {r:e}");

        let t = ts.point(1.0 - q.powi(-7))?;
        let r = periodic_integral_invariance_check(&ts, &op, &sign, 2.0, q.powi(-2), &ts.first(), &t)?;
        println!("q = {q}: quasiperiodic invariance residual {r:e}");
    }
    Ok(())
}
