//! Dormand–Prince 5(4) with adaptive steps for `x' = f(t, x)` on a single interval.

use nalgebra::DVector;

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights are the last row of A; E = b5 - b4
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RkOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

#[derive(Clone, Debug)]
pub struct RkOutcome {
    pub x: DVector<f64>,
    pub accepted: usize,
    pub rejected: usize,
    /// Suggested next step size.
    pub h: f64,
}

/// Integrate from `t0` to `t1 > t0`. `h0` of `None` picks a starting step from
/// the interval length.
pub fn integrate<F>(mut f: F, t0: f64, t1: f64, x0: &DVector<f64>, h0: Option<f64>, opts: &RkOptions) -> Result<RkOutcome>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let span = t1 - t0;
    if !(span > 0.0) {
        return Ok(RkOutcome {
            x: x0.clone(),
            accepted: 0,
            rejected: 0,
            h: h0.unwrap_or(0.0),
        });
    }
    let mut t = t0;
    let mut x = x0.clone();
    let mut h = h0.unwrap_or(span * 1e-3).min(span);
    let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
    let mut k0 = f(t, &x)?;
    let (mut accepted, mut rejected) = (0, 0);
    let h_min = 16.0 * f64::EPSILON * t0.abs().max(t1.abs()).max(1.0);

    while t < t1 {
        if accepted + rejected >= opts.max_steps {
            return Err(Error::IntegrationFailure {
                t,
                reason: format!("step limit {} reached", opts.max_steps),
            });
        }
        let last = t + h >= t1 - h_min;
        if last {
            h = t1 - t;
        }
        k.clear();
        k.push(k0.clone());
        for s in 1..7 {
            let mut xs = x.clone();
            for (j, kj) in k.iter().enumerate() {
                if A[s][j] != 0.0 {
                    xs.axpy(h * A[s][j], kj, 1.0);
                }
            }
            k.push(f(t + C[s] * h, &xs)?);
        }
        let mut x_new = x.clone();
        for (j, kj) in k.iter().take(6).enumerate() {
            if A[6][j] != 0.0 {
                x_new.axpy(h * A[6][j], kj, 1.0);
            }
        }
        let mut err = DVector::zeros(x.len());
        for (j, kj) in k.iter().enumerate() {
            if E[j] != 0.0 {
                err.axpy(h * E[j], kj, 1.0);
            }
        }
        let norm = (err
            .iter()
            .zip(x.iter().zip(x_new.iter()))
            .map(|(e, (a, b))| {
                let sc = opts.atol + opts.rtol * a.abs().max(b.abs());
                (e / sc).powi(2)
            })
            .sum::<f64>()
            / x.len().max(1) as f64)
            .sqrt();
        if !norm.is_finite() {
            return Err(Error::IntegrationFailure {
                t,
                reason: "non-finite error estimate".into(),
            });
        }
        let factor = if norm == 0.0 {
            5.0
        } else {
            (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        if norm <= 1.0 {
            t = if last { t1 } else { t + h };
            x = x_new;
            // first-same-as-last
            k0 = k.pop().unwrap();
            accepted += 1;
            h *= factor;
        } else {
            rejected += 1;
            h *= factor.min(1.0);
            if h < h_min {
                return Err(Error::IntegrationFailure {
                    t,
                    reason: "step size underflow".into(),
                });
            }
        }
    }
    Ok(RkOutcome {
        x,
        accepted,
        rejected,
        h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(tol: f64) -> RkOptions {
        RkOptions {
            rtol: tol,
            atol: tol,
            max_steps: 100_000,
        }
    }

    #[test]
    fn exponential_growth() {
        let x0 = DVector::from_element(1, 1.0);
        let out = integrate(|_, x| Ok(x * 0.7), 0.0, 2.0, &x0, None, &opts(1e-12)).unwrap();
        assert!((out.x[0] - 1.4f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn harmonic_oscillator() {
        let x0 = DVector::from_vec(vec![1.0, 0.0]);
        let out = integrate(
            |_, x| Ok(DVector::from_vec(vec![x[1], -x[0]])),
            0.0,
            std::f64::consts::PI,
            &x0,
            None,
            &opts(1e-11),
        )
        .unwrap();
        assert!((out.x[0] + 1.0).abs() < 1e-9);
        assert!(out.x[1].abs() < 1e-9);
    }

    #[test]
    fn time_dependent_polynomial_is_exact() {
        let x0 = DVector::from_element(1, 0.0);
        let out = integrate(|t, _| Ok(DVector::from_element(1, 3.0 * t * t)), 1.0, 2.0, &x0, None, &opts(1e-10)).unwrap();
        assert!((out.x[0] - 7.0).abs() < 1e-13);
    }

    #[test]
    fn step_limit() {
        let x0 = DVector::from_element(1, 1.0);
        let o = RkOptions {
            max_steps: 3,
            ..opts(1e-12)
        };
        assert!(matches!(
            integrate(|_, x| Ok(x.clone()), 0.0, 10.0, &x0, None, &o),
            Err(Error::IntegrationFailure { .. })
        ));
    }
}
