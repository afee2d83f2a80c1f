use super::{Model, ModelError};
use crate::geometry::{Domain, Label};

/// `‖x‖² + 10` above the cubic surface `x_d = sum_{i<d} x_i³`, `‖x‖² − 10` elsewhere.
#[derive(Debug, Clone)]
pub struct Cubic {
    domain: Domain,
}

impl Cubic {
    pub fn new(d: usize) -> Self {
        assert!(d >= 2, "cubic model needs d >= 2");
        Cubic { domain: Domain::symmetric_unit(d) }
    }

    pub fn side(&self, x: &[f64]) -> Label {
        let d = x.len();
        let surface: f64 = x[..d - 1].iter().map(|v| v * v * v).sum();
        if x[d - 1] > surface {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

impl Model for Cubic {
    fn name(&self) -> String {
        format!("cubic:{}", self.domain.dim())
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64, ModelError> {
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        Ok(norm2 + 10.0 * self.side(x).sign())
    }
}
