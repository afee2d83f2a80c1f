use std::f64::consts::PI;

use super::{Model, ModelError};
use crate::geometry::{Domain, Label};

/// Flipped rectangle of surface 4: `[0.25, 0.75] x [-0.75, -0.25]`.
pub const SURF4_BOX: [[f64; 2]; 2] = [[0.25, 0.75], [-0.75, -0.25]];

/// Piecewise-constant ±1 models on `[-1,1]^2` separated by a curve `x2 = g(x1)`.
#[derive(Debug, Clone)]
pub struct Surface {
    index: u8,
    domain: Domain,
}

impl Surface {
    pub fn from_index(index: u8) -> Option<Self> {
        (1..=4).contains(&index).then(|| Surface { index, domain: Domain::symmetric_unit(2) })
    }

    /// Separating curve; surface 4 shares surface 2's curve.
    pub fn curve(&self, x1: f64) -> f64 {
        match self.index {
            1 => 0.3 + 0.4 * (PI * x1).sin(),
            2 | 4 => 0.3 + 0.4 * (PI * x1).sin() + x1,
            _ => 0.3 + 0.4 * (2.0 * PI * x1).sin() + x1,
        }
    }

    pub fn side(&self, x: &[f64]) -> Label {
        let above = x[1] > self.curve(x[0]);
        let in_box = self.index == 4
            && (SURF4_BOX[0][0]..=SURF4_BOX[0][1]).contains(&x[0])
            && (SURF4_BOX[1][0]..=SURF4_BOX[1][1]).contains(&x[1]);
        if above != in_box {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

impl Model for Surface {
    fn name(&self) -> String {
        format!("surf{}", self.index)
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64, ModelError> {
        Ok(self.side(x).sign())
    }
}
