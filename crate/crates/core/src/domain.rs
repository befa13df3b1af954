use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};

/// Axis-aligned box `D = [lower, upper]` in state space.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainBox {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl DomainBox {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l < u)) {
            return Err(Error::NonPositiveParameter {
                name: "domain extent",
                value: (&upper - &lower).min(),
            });
        }
        Ok(DomainBox { lower, upper })
    }

    /// `{‖x‖_∞ ≤ r}` in `dim` dimensions.
    pub fn ball(dim: usize, r: f64) -> Result<Self> {
        Self::new(DVector::from_element(dim, -r), DVector::from_element(dim, r))
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    /// The box shrunk by `fraction` of its extent on every side.
    pub fn shrink(&self, fraction: f64) -> DomainBox {
        let margin = (&self.upper - &self.lower) * fraction;
        DomainBox {
            lower: &self.lower + &margin,
            upper: &self.upper - &margin,
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.lower
                .iter()
                .zip(self.upper.iter())
                .map(|(l, u)| rng.gen_range(*l..=*u)),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shrink_and_contains() {
        let d = DomainBox::ball(2, 2.0).unwrap();
        let inner = d.shrink(0.1);
        assert!(inner.contains(&DVector::from_vec(vec![1.5, -1.5])));
        assert!(!inner.contains(&DVector::from_vec(vec![1.7, 0.0])));
        assert!(d.contains(&DVector::from_vec(vec![1.7, 0.0])));
        assert!(!d.contains(&DVector::from_vec(vec![1.0])));
        assert!(DomainBox::new(DVector::from_vec(vec![1.0]), DVector::from_vec(vec![0.0])).is_err());
    }
}
