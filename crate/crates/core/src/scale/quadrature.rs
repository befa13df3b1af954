//! Adaptive Gauss–Kronrod 7/15 quadrature for vector-valued integrands.

use nalgebra::DVector;

use crate::error::{Error, Result};

pub const ABS_TOL: f64 = 1e-10;
pub const REL_TOL: f64 = 1e-10;
const MAX_SUBINTERVALS: usize = 2000;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

struct Panel {
    a: f64,
    b: f64,
    value: DVector<f64>,
    error: f64,
}

fn gk15<F: Fn(f64) -> DVector<f64>>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = &fc * WGK[7];
    let mut gauss = &fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        let s = &f1 + &f2;
        kronrod += &s * WGK[j];
        if j % 2 == 1 {
            gauss += &s * WG[j / 2];
        }
    }
    kronrod *= h;
    gauss *= h;
    let error = (&kronrod - &gauss).amax();
    Panel {
        a,
        b,
        value: kronrod,
        error,
    }
}

/// Integrate `f` over `[a, b]` to `max(abs_tol, rel_tol * |I|)` (max-norm).
pub fn integrate<F: Fn(f64) -> DVector<f64>>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<DVector<f64>> {
    let mut panels = vec![gk15(&f, a, b)];
    loop {
        let total: DVector<f64> = panels
            .iter()
            .fold(DVector::zeros(panels[0].value.len()), |acc, p| acc + &p.value);
        let err: f64 = panels.iter().map(|p| p.error).sum();
        if !err.is_finite() || total.iter().any(|v| !v.is_finite()) {
            return Err(Error::QuadratureFailure { a, b, error: err });
        }
        if err <= abs_tol.max(rel_tol * total.amax()) {
            return Ok(total);
        }
        if panels.len() >= MAX_SUBINTERVALS {
            return Err(Error::QuadratureFailure { a, b, error: err });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .unwrap();
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(Error::QuadratureFailure { a, b, error: err });
        }
        panels.push(gk15(&f, p.a, mid));
        panels.push(gk15(&f, mid, p.b));
    }
}
