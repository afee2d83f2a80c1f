use super::{Model, ModelError};
use crate::geometry::{Domain, Label};

/// ±1 across a 2-sphere of radius `r` in the first three coordinates,
/// extruded through the remaining ones.
#[derive(Debug, Clone)]
pub struct Sphere {
    domain: Domain,
    radius: f64,
}

impl Sphere {
    pub fn new(d: usize, radius: f64) -> Self {
        assert!(d >= 3 && radius > 0.0);
        Sphere { domain: Domain::symmetric_unit(d), radius }
    }

    /// 20-D domain, radius 0.125.
    pub fn paper() -> Self {
        Sphere::new(20, 0.125)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Distance from the axis-space origin in the first three coordinates.
    pub fn radial(x: &[f64]) -> f64 {
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
    }

    pub fn side(&self, x: &[f64]) -> Label {
        if x[0] * x[0] + x[1] * x[1] + x[2] * x[2] < self.radius * self.radius {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

impl Model for Sphere {
    fn name(&self) -> String {
        format!("sphere{}", self.domain.dim())
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64, ModelError> {
        Ok(self.side(x).sign())
    }
}
