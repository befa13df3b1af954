//! Builtin right-hand sides selectable from a config.

use nalgebra::DVector;

use super::config::FieldSpec;
use super::ExperimentError;
use crate::averaging::VectorField;
use crate::scale::{Point, TimeScale};

pub const BUILTINS: &[&str] = &[
    "alternating-linear",
    "alternating-step",
    "inverse-gap",
    "linear",
    "constant",
];

pub fn check_name(name: &str) -> Result<(), ExperimentError> {
    if BUILTINS.contains(&name) {
        Ok(())
    } else {
        Err(ExperimentError::Config(format!(
            "unknown builtin field `{name}` (known: {})",
            BUILTINS.join(", ")
        )))
    }
}

/// Step count `k` of a point: its index within its segment when it carries
/// one, else `round(ln((L - start)/(L - t)) / ln q)`.
fn step_index(p: &Point, geo: Option<(f64, f64, f64)>) -> i64 {
    if let Some(i) = p.index() {
        return i as i64;
    }
    match geo {
        Some((q, start, limit)) => (((limit - start) / (limit - p.t())).ln() / q.ln()).round() as i64,
        None => 0,
    }
}

fn sign(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Build the field together with `(M, λ)` on `{‖x‖_∞ ≤ radius}` when known in
/// closed form.
pub fn build(spec: &FieldSpec, ts: &TimeScale, radius: f64) -> Result<(VectorField, Option<(f64, f64)>), ExperimentError> {
    check_name(&spec.builtin)?;
    let a = spec.a;
    let dim = spec.dim;
    let geo = ts.segments().iter().find_map(|s| match s {
        crate::scale::Segment::GeometricCondensation { q, start, limit, .. } => Some((*q, *start, *limit)),
        _ => None,
    });
    // sup of the Euclidean norm over the box
    let r = radius * (dim as f64).sqrt();
    let out = match spec.builtin.as_str() {
        "alternating-linear" => (
            VectorField::new(dim, move |p: &Point, x: &DVector<f64>| x * (a * sign(step_index(p, geo)))),
            Some((a.abs() * r, a.abs())),
        ),
        "alternating-step" => (
            VectorField::new(dim, move |p: &Point, _: &DVector<f64>| {
                DVector::from_element(dim, a * sign(step_index(p, geo)))
            }),
            Some((a.abs() * (dim as f64).sqrt(), 0.0)),
        ),
        "inverse-gap" => {
            let limit = geo.map(|g| g.2).unwrap_or(1.0);
            (
                VectorField::new(dim, move |p: &Point, _: &DVector<f64>| {
                    let gap = p.gap_to_limit().unwrap_or(limit - p.t());
                    DVector::from_element(dim, a / gap)
                }),
                None,
            )
        }
        "linear" => (
            VectorField::new(dim, move |_: &Point, x: &DVector<f64>| x * a),
            Some((a.abs() * r, a.abs())),
        ),
        "constant" => (
            VectorField::new(dim, move |_: &Point, _: &DVector<f64>| DVector::from_element(dim, a)),
            Some((a.abs() * (dim as f64).sqrt(), 0.0)),
        ),
        _ => unreachable!("name checked above"),
    };
    Ok(out)
}
