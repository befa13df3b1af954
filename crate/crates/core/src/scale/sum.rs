use nalgebra::DVector;

/// Componentwise Neumaier summation.
#[derive(Clone, Debug)]
pub(crate) struct CompensatedSum {
    sum: DVector<f64>,
    carry: DVector<f64>,
}

impl CompensatedSum {
    pub fn new(dim: usize) -> Self {
        CompensatedSum {
            sum: DVector::zeros(dim),
            carry: DVector::zeros(dim),
        }
    }

    pub fn add(&mut self, v: &DVector<f64>) {
        for i in 0..self.sum.len() {
            let (s, x) = (self.sum[i], v[i]);
            let t = s + x;
            if s.abs() >= x.abs() {
                self.carry[i] += (s - t) + x;
            } else {
                self.carry[i] += (x - t) + s;
            }
            self.sum[i] = t;
        }
    }

    pub fn total(&self) -> DVector<f64> {
        &self.sum + &self.carry
    }
}
