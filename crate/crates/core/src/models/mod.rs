//! Benchmark models and their ground-truth side oracles.
//!
//! | name        | d  | domain            | output                                   |
//! |-------------|----|-------------------|------------------------------------------|
//! | `surf1..3`  | 2  | `[-1,1]^2`        | ±1 across `x2 = g(x1)`                   |
//! | `surf4`     | 2  | `[-1,1]^2`        | `surf2` with a flipped rectangle         |
//! | `burgers`   | 2  | `[0,π]×[0,1]`     | steady viscous-free Burgers solution     |
//! | `cubic:<d>` | d  | `[-1,1]^d`        | `‖x‖² ± 10` across a cubic surface       |
//! | `toggle`    | 4  | `[-1,1]^4`        | steady `v` of the genetic toggle switch  |
//! | `sphere20`  | 20 | `[-1,1]^20`       | ±1 across an extruded 2-sphere           |

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::error::{Error, Result};
use crate::geometry::{Domain, Label};

pub mod burgers;
pub mod cubic;
pub mod sphere;
pub mod surfaces;
pub mod toggle;

pub use burgers::{Burgers, BurgersConfig};
pub use cubic::Cubic;
pub use sphere::Sphere;
pub use surfaces::Surface;
pub use toggle::{Toggle, ToggleConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("no steady state after {steps} steps")]
    NonSteady { steps: usize },
    #[error("point has dimension {got}, model expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite input coordinate")]
    NonFinite,
}

/// A deterministic black-box `f: domain -> R`.
pub trait Model: Send + Sync {
    fn name(&self) -> String;
    fn domain(&self) -> &Domain;
    fn evaluate(&self, x: &[f64]) -> std::result::Result<f64, ModelError>;

    fn dim(&self) -> usize {
        self.domain().dim()
    }
}

/// Ground-truth side of the separating surface (`Positive` is the
/// larger-value side).
pub trait Truth: Send + Sync {
    fn side(&self, x: &[f64]) -> Label;
}

impl<F: Fn(&[f64]) -> Label + Send + Sync> Truth for F {
    fn side(&self, x: &[f64]) -> Label {
        self(x)
    }
}

/// Wraps a model with an evaluation counter. Every call to
/// [`ModelAdapter::evaluate`] counts once.
pub struct ModelAdapter {
    model: Arc<dyn Model>,
    evals: AtomicUsize,
}

impl ModelAdapter {
    pub fn new(model: Arc<dyn Model>) -> Self {
        ModelAdapter { model, evals: AtomicUsize::new(0) }
    }

    pub fn name(&self) -> String {
        self.model.name()
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn domain(&self) -> &Domain {
        self.model.domain()
    }

    pub fn evals(&self) -> usize {
        self.evals.load(Ordering::SeqCst)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.evals.fetch_add(1, Ordering::SeqCst);
        self.evaluate_uncounted(x)
    }

    /// Evaluation for scoring only; does not touch the counter.
    pub fn evaluate_uncounted(&self, x: &[f64]) -> Result<f64> {
        let check = if x.len() != self.dim() {
            Err(ModelError::Dimension { expected: self.dim(), got: x.len() })
        } else if x.iter().any(|v| !v.is_finite()) {
            Err(ModelError::NonFinite)
        } else {
            self.model.evaluate(x)
        };
        check.map_err(|source| Error::ModelFailure { point: x.to_vec(), source })
    }

    pub fn model(&self) -> &Arc<dyn Model> {
        &self.model
    }
}

impl std::fmt::Debug for ModelAdapter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelAdapter").field("model", &self.name()).field("evals", &self.evals()).finish()
    }
}

/// A model together with its truth oracle.
pub struct Benchmark {
    pub adapter: ModelAdapter,
    pub truth: Arc<dyn Truth>,
}

impl Benchmark {
    fn new<M: Model + 'static>(model: M, truth: Arc<dyn Truth>) -> Self {
        Benchmark { adapter: ModelAdapter::new(Arc::new(model)), truth }
    }
}

/// Names accepted by [`by_name`], with dimensions (`cubic` shown at d = 2).
pub fn catalog() -> Vec<(String, usize, Domain)> {
    ["surf1", "surf2", "surf3", "surf4", "burgers", "cubic:2", "toggle", "sphere20"]
        .iter()
        .map(|n| {
            let b = by_name(n).expect("catalog names resolve");
            let name = if n.starts_with("cubic") { "cubic:<d>".to_string() } else { n.to_string() };
            (name, b.adapter.dim(), b.adapter.domain().clone())
        })
        .collect()
}

pub fn by_name(name: &str) -> Result<Benchmark> {
    let name = name.trim();
    let bench = match name {
        "surf1" | "surf2" | "surf3" | "surf4" => {
            let s = Surface::from_index(name[4..].parse().unwrap()).unwrap();
            let truth = s.clone();
            Benchmark::new(s, Arc::new(move |x: &[f64]| truth.side(x)))
        }
        "burgers" => {
            let b = Burgers::new(BurgersConfig::default());
            Benchmark::new(b, Arc::new(burgers::analytic_side))
        }
        "toggle" => {
            let t = Toggle::new(ToggleConfig::default());
            let truth = t.clone();
            Benchmark::new(t, Arc::new(move |x: &[f64]| truth.side(x)))
        }
        "sphere20" => {
            let s = Sphere::paper();
            let truth = s.clone();
            Benchmark::new(s, Arc::new(move |x: &[f64]| truth.side(x)))
        }
        _ => {
            let d = name
                .strip_prefix("cubic:")
                .and_then(|d| d.parse::<usize>().ok())
                .ok_or_else(|| Error::InvalidConfig(format!("unknown model '{name}'")))?;
            if d < 2 {
                return Err(Error::InvalidConfig(format!("cubic model needs d >= 2, got {d}")));
            }
            let c = Cubic::new(d);
            let truth = c.clone();
            Benchmark::new(c, Arc::new(move |x: &[f64]| truth.side(x)))
        }
    };
    Ok(bench)
}
