//! Jump operators, Δ-integrals, Δ-derivatives and the exponential on the
//! condensation scale {1 - 2^-n} ∪ {1}.

use tscale::scale::{delta_derivative_numeric, delta_integral, exp_function, scalar_fn, Point, TimeScale};

fn main() -> tscale::Result<()> {
    let ts = TimeScale::geometric(2.0, 64)?;

    println!("{:>3} {:>22} {:>12} {:>10}", "n", "t", "mu", "class");
    let mut p = ts.first();
    for n in 0..6 {
        let class = ts.classify(&p);
        let kind = if class.is_isolated() {
            "isolated"
        } else if class.is_right_scattered() {
            "rs"
        } else {
            "rd"
        };
        println!("{n:>3} {:>22.17} {:>12.6e} {kind:>10}", p.t(), ts.mu(&p));
        p = ts.sigma(&p);
    }
    let limit = ts.last();
    println!("limit t = {}, right-dense: {}", limit.t(), !ts.classify(&limit).is_right_scattered());

    // deep points stay distinct even where 1 - 2^-n rounds to 1.0
    let deep = ts.point(1.0 - 2f64.powi(-40))?;
    println!("t_40 index {:?}, gap {:e}", deep.index(), deep.gap_to_limit().unwrap());

    let sign = scalar_fn(|p: &Point| if p.index().unwrap_or(0) % 2 == 0 { 1.0 } else { -1.0 });
    let v = delta_integral(&ts, &sign, &ts.first(), &ts.point(0.75)?)?;
    println!("∫_0^(3/4) (-1)^k Δt = {}", v[0]);

    let one = scalar_fn(|_| 1.0);
    let v = delta_integral(&ts, &one, &ts.first(), &limit)?;
    println!("∫_0^1 1 Δt = {}", v[0]);

    let sq = scalar_fn(|p: &Point| p.t() * p.t());
    let d = delta_derivative_numeric(&ts, &sq, &ts.first())?;
    println!("(t²)^Δ at 0 = {} (σ(0) + 0)", d.value[0]);

    let p = scalar_fn(|_| 0.7);
    let t5 = ts.point(1.0 - 2f64.powi(-5))?;
    let e = exp_function(&ts, &p, &t5, &ts.first())?;
    let product: f64 = (0..5).map(|i| 1.0 + 0.7 / 2f64.powi(i + 1)).product();
    println!("e_0.7(t_5, 0) = {e:.15} (product {product:.15})");
    Ok(())
}
