//! Gaussian-kernel soft-margin support vector classifier.
//!
//! The dual problem
//!
//! ```text
//! max  Σ α_i − ½ Σ_ij α_i α_j y_i y_j K(x_i, x_j)
//! s.t. 0 ≤ α_i ≤ C,  Σ α_i y_i = 0
//! ```
//!
//! is solved by SMO ([`train`]). The box constraint `C` plays the role of the
//! inverse regularization weight: `λ = 1 / (2 n C)` for `n` training points.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{squared_distance, Label, LabeledPoint};
use crate::pa::COORD_EPS;

mod cv;
pub mod reference;
mod smo;

pub use cv::{cross_validate, CV_MAX_ITER, default_grid, median_pairwise_distance, stratified_folds, CvChoice};
pub use smo::{train, train_from, train_on_kernel, train_on_kernel_from, SmoParams, SmoSolution};

/// `exp(−‖x − y‖² / 2σ²)`.
pub fn kernel(x: &[f64], y: &[f64], sigma: f64) -> f64 {
    (-squared_distance(x, y) / (2.0 * sigma * sigma)).exp()
}

/// Dense Gram matrix, row-major.
pub fn kernel_matrix(points: &[Vec<f64>], sigma: f64) -> Vec<f64> {
    let n = points.len();
    let gamma = 1.0 / (2.0 * sigma * sigma);
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let v = (-squared_distance(&points[i], &points[j]) * gamma).exp();
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    points: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

impl TrainingSet {
    /// Rejects single-class input and duplicate points with different labels.
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        assert_eq!(points.len(), labels.len(), "points and labels differ in length");
        if !labels.contains(&Label::Positive) || !labels.contains(&Label::Negative) {
            return Err(Error::SingleClass);
        }
        let mut seen: std::collections::HashMap<Vec<i64>, Label> = std::collections::HashMap::new();
        for (p, l) in points.iter().zip(&labels) {
            let key: Vec<i64> = p.iter().map(|v| (v / COORD_EPS).round() as i64).collect();
            if let Some(prev) = seen.insert(key, *l) {
                if prev != *l {
                    return Err(Error::ConflictingDuplicate(p.clone()));
                }
            }
        }
        Ok(TrainingSet { points, labels })
    }

    pub fn from_labeled(samples: &[LabeledPoint]) -> Result<Self> {
        Self::new(samples.iter().map(|s| s.x.clone()).collect(), samples.iter().map(|s| s.label).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// Labels as `±1.0`.
    pub fn signs(&self) -> Vec<f64> {
        self.labels.iter().map(|l| l.sign()).collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|l| **l == label).count()
    }
}

/// Trained kernel expansion `decision(x) = Σ w_i K(x_i, x) + bias` with
/// `w_i = α_i y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub support: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub sigma: f64,
    pub c: f64,
    pub training_size: usize,
    /// False when the solver hit its iteration cap before meeting the tolerance.
    pub converged: bool,
}

impl Classifier {
    pub fn dim(&self) -> usize {
        self.support.first().map_or(0, |p| p.len())
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        let gamma = 1.0 / (2.0 * self.sigma * self.sigma);
        self.support
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w * (-squared_distance(s, x) * gamma).exp())
            .sum::<f64>()
            + self.bias
    }

    /// `∇ decision(x) = Σ w_i K(x_i, x) (x_i − x) / σ²`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (_, g) = self.decision_and_gradient(x);
        g
    }

    pub fn decision_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let s2 = self.sigma * self.sigma;
        let mut g = vec![0.0; x.len()];
        let mut dec = self.bias;
        for (s, w) in self.support.iter().zip(&self.weights) {
            let k = w * (-squared_distance(s, x) / (2.0 * s2)).exp();
            dec += k;
            for (gi, (si, xi)) in g.iter_mut().zip(s.iter().zip(x)) {
                *gi += k * (si - xi) / s2;
            }
        }
        (dec, g)
    }

    pub fn classify(&self, x: &[f64]) -> Label {
        Label::from_value(self.decision(x))
    }

    /// Dual objective `Σ α_i − ½ Σ_ij w_i w_j K_ij` at this solution.
    pub fn dual_objective(&self) -> f64 {
        let k = kernel_matrix(&self.support, self.sigma);
        let n = self.support.len();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += self.weights[i] * self.weights[j] * k[i * n + j];
            }
        }
        self.weights.iter().map(|w| w.abs()).sum::<f64>() - 0.5 * quad
    }

    /// Plain-text record: a header `d n_sv sigma C bias`, then one line per
    /// support vector with its coordinates followed by its signed weight.
    /// Reals carry 17 significant digits so the record round-trips exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} {} {:.16e} {:.16e} {:.16e}",
            self.dim(),
            self.support.len(),
            self.sigma,
            self.c,
            self.bias
        );
        for (s, w) in self.support.iter().zip(&self.weights) {
            let row: Vec<String> = s.iter().chain(std::iter::once(w)).map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines.next().ok_or_else(|| Error::Parse("empty record".into()))?.split_whitespace().collect();
        if header.len() != 5 {
            return Err(Error::Parse(format!("header has {} fields, expected 5", header.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("'{s}': {e}")));
        let real = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("'{s}': {e}")));
        let (d, n) = (int(header[0])?, int(header[1])?);
        let (sigma, c, bias) = (real(header[2])?, real(header[3])?, real(header[4])?);
        let mut support = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for (k, line) in lines.enumerate() {
            let vals = line.split_whitespace().map(real).collect::<Result<Vec<f64>>>()?;
            if vals.len() != d + 1 {
                return Err(Error::Parse(format!("support vector {k} has {} fields, expected {}", vals.len(), d + 1)));
            }
            weights.push(vals[d]);
            support.push(vals[..d].to_vec());
        }
        if support.len() != n {
            return Err(Error::Parse(format!("header announces {n} support vectors, found {}", support.len())));
        }
        Ok(Classifier { support, weights, bias, sigma, c, training_size: n, converged: true })
    }
}
