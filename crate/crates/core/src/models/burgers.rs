//! Steady state of `u_t + (u²/2)_x = (sin²x / 2)_x` on `[0, π]` with
//! `u(x, 0) = y sin x` and `u(0) = u(π) = 0`, as a function of `(x, y)`.
//!
//! The flux difference form is marched with a Godunov flux until the update
//! rate falls below a tolerance. Mass is conserved, which places the
//! stationary shock between `u = sin x` and `u = −sin x` at `x = arccos(−y)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use super::{Model, ModelError};
use crate::geometry::{Domain, Label};

#[derive(Debug, Clone, PartialEq)]
pub struct BurgersConfig {
    pub cells: usize,
    pub cfl: f64,
    /// Stop when `max |du/dt|` drops below this.
    pub steady_tol: f64,
    pub max_steps: usize,
}

impl Default for BurgersConfig {
    fn default() -> Self {
        BurgersConfig { cells: 512, cfl: 0.4, steady_tol: 1e-8, max_steps: 2_000_000 }
    }
}

/// Cell-centred steady profile for one value of `y`.
#[derive(Debug, Clone)]
pub struct SteadyProfile {
    pub dx: f64,
    pub u: Vec<f64>,
    pub steps: usize,
}

impl SteadyProfile {
    /// Linear interpolation between cell centres; the boundary values are 0.
    pub fn at(&self, x: f64) -> f64 {
        let n = self.u.len();
        let s = x / self.dx - 0.5;
        if s <= 0.0 {
            let t = (x / (0.5 * self.dx)).clamp(0.0, 1.0);
            return t * self.u[0];
        }
        if s >= (n - 1) as f64 {
            let t = ((PI - x) / (0.5 * self.dx)).clamp(0.0, 1.0);
            return t * self.u[n - 1];
        }
        let i = s.floor() as usize;
        let w = s - i as f64;
        (1.0 - w) * self.u[i] + w * self.u[i + 1]
    }
}

fn godunov(ul: f64, ur: f64) -> f64 {
    let f = |u: f64| 0.5 * u * u;
    if ul <= ur {
        if ul > 0.0 {
            f(ul)
        } else if ur < 0.0 {
            f(ur)
        } else {
            0.0
        }
    } else {
        f(ul).max(f(ur))
    }
}

/// March `y sin x` to steady state.
pub fn solve_steady(y: f64, cfg: &BurgersConfig) -> Result<SteadyProfile, ModelError> {
    let n = cfg.cells;
    let dx = PI / n as f64;
    let mut u: Vec<f64> = (0..n).map(|i| y * ((i as f64 + 0.5) * dx).sin()).collect();
    let source: Vec<f64> = (0..=n).map(|k| 0.5 * (k as f64 * dx).sin().powi(2)).collect();
    let mut net = vec![0.0; n + 1];
    for step in 1..=cfg.max_steps {
        let speed = u.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let dt = cfg.cfl * dx / speed;
        for k in 0..=n {
            let ul = if k == 0 { 0.0 } else { u[k - 1] };
            let ur = if k == n { 0.0 } else { u[k] };
            net[k] = godunov(ul, ur) - source[k];
        }
        let mut rate = 0.0f64;
        for i in 0..n {
            let du = -(net[i + 1] - net[i]) / dx;
            u[i] += dt * du;
            rate = rate.max(du.abs());
        }
        if rate < cfg.steady_tol {
            return Ok(SteadyProfile { dx, u, steps: step });
        }
    }
    Err(ModelError::NonSteady { steps: cfg.max_steps })
}

/// Analytic shock location `arccos(−y)`.
pub fn shock_location(y: f64) -> f64 {
    (-y).clamp(-1.0, 1.0).acos()
}

/// Truth oracle: `Positive` (the `u = sin x > 0` branch) left of the shock.
pub fn analytic_side(x: &[f64]) -> Label {
    if x[0] < shock_location(x[1]) {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// Burgers model on `(x, y) ∈ [0, π] × [0, 1]`. Steady profiles are memoized
/// per `y`; every query still counts as one evaluation at the adapter.
pub struct Burgers {
    cfg: BurgersConfig,
    domain: Domain,
    cache: Mutex<HashMap<u64, Arc<SteadyProfile>>>,
}

impl Burgers {
    pub fn new(cfg: BurgersConfig) -> Self {
        Burgers { cfg, domain: Domain::new(vec![0.0, 0.0], vec![PI, 1.0]), cache: Mutex::new(HashMap::new()) }
    }

    pub fn profile(&self, y: f64) -> Result<Arc<SteadyProfile>, ModelError> {
        let key = y.to_bits();
        if let Some(p) = self.cache.lock().unwrap().get(&key) {
            return Ok(Arc::clone(p));
        }
        let p = Arc::new(solve_steady(y, &self.cfg)?);
        self.cache.lock().unwrap().insert(key, Arc::clone(&p));
        Ok(p)
    }
}

impl Model for Burgers {
    fn name(&self) -> String {
        "burgers".into()
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64, ModelError> {
        Ok(self.profile(x[1])?.at(x[0]))
    }
}
