use nalgebra::DVector;

use super::Point;

/// A function on the points of a time scale with values in R^n.
pub trait GridFunction: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, p: &Point) -> DVector<f64>;
}

/// Closure-backed [`GridFunction`].
pub struct FnGrid<F> {
    dim: usize,
    f: F,
}

impl<F> GridFunction for FnGrid<F>
where
    F: Fn(&Point) -> DVector<f64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, p: &Point) -> DVector<f64> {
        (self.f)(p)
    }
}

pub fn vector_fn<F>(dim: usize, f: F) -> FnGrid<F>
where
    F: Fn(&Point) -> DVector<f64> + Send + Sync,
{
    FnGrid { dim, f }
}

pub fn scalar_fn<F>(f: F) -> FnGrid<impl Fn(&Point) -> DVector<f64> + Send + Sync>
where
    F: Fn(&Point) -> f64 + Send + Sync,
{
    FnGrid {
        dim: 1,
        f: move |p: &Point| DVector::from_element(1, f(p)),
    }
}

impl<G: GridFunction + ?Sized> GridFunction for &G {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, p: &Point) -> DVector<f64> {
        (**self).eval(p)
    }
}

impl<G: GridFunction + ?Sized> GridFunction for Box<G> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, p: &Point) -> DVector<f64> {
        (**self).eval(p)
    }
}
