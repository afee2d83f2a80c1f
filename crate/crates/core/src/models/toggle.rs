//! Genetic toggle switch:
//!
//! ```text
//! du/dt = α1 / (1 + v^β) − u
//! dv/dt = α2 / (1 + w^γ) − v,     w = u / (1 + [IPTG]/K)^η
//! ```
//!
//! with `[IPTG] = 4e-5`, `γ = 1`, `β = 2.5`. The uncertain parameters
//! `(α1, α2, η, K)` vary ±10% around `Z0`; the unit cube `[-1,1]^4` maps onto
//! that box. The output is the steady `v`, reached from `(u, v) = (0, 0)`.

use super::{Model, ModelError};
use crate::geometry::{Domain, Label};

pub const Z0: [f64; 4] = [156.25, 15.6, 2.0015, 2.9618e-5];
pub const IPTG: f64 = 4.0e-5;
pub const GAMMA: f64 = 1.0;
pub const BETA: f64 = 2.5;
pub const RELATIVE_RANGE: f64 = 0.1;

/// Steady `v` above this is the high-`v` regime (`Positive`). The two regimes
/// over the parameter box are roughly `[0.37, 0.54]` and `[13.4, 16.9]`.
pub const REGIME_SPLIT: f64 = 7.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ToggleConfig {
    /// RK4 step.
    pub dt: f64,
    /// Stop when `‖(du/dt, dv/dt)‖` drops below this.
    pub steady_tol: f64,
    pub max_steps: usize,
    pub initial: [f64; 2],
}

impl Default for ToggleConfig {
    fn default() -> Self {
        ToggleConfig { dt: 0.01, steady_tol: 1e-10, max_steps: 5_000_000, initial: [0.0, 0.0] }
    }
}

/// Parameters `(α1, α2, η, K)` for a unit-cube point.
pub fn parameters(t: &[f64]) -> [f64; 4] {
    let mut z = Z0;
    for (zk, tk) in z.iter_mut().zip(t) {
        *zk *= 1.0 + RELATIVE_RANGE * tk;
    }
    z
}

pub fn rhs(state: [f64; 2], z: &[f64; 4]) -> [f64; 2] {
    let [u, v] = state;
    let [a1, a2, eta, k] = *z;
    let w = u / (1.0 + IPTG / k).powf(eta);
    [a1 / (1.0 + v.max(0.0).powf(BETA)) - u, a2 / (1.0 + w.max(0.0).powf(GAMMA)) - v]
}

pub fn steady_state(z: &[f64; 4], cfg: &ToggleConfig) -> Result<[f64; 2], ModelError> {
    let h = cfg.dt;
    let mut s = cfg.initial;
    let add = |s: [f64; 2], k: [f64; 2], c: f64| [s[0] + c * k[0], s[1] + c * k[1]];
    for _ in 0..cfg.max_steps {
        let k1 = rhs(s, z);
        if k1[0].hypot(k1[1]) < cfg.steady_tol {
            return Ok(s);
        }
        let k2 = rhs(add(s, k1, 0.5 * h), z);
        let k3 = rhs(add(s, k2, 0.5 * h), z);
        let k4 = rhs(add(s, k3, h), z);
        for i in 0..2 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Err(ModelError::NonSteady { steps: cfg.max_steps })
}

#[derive(Debug, Clone)]
pub struct Toggle {
    cfg: ToggleConfig,
    domain: Domain,
}

impl Toggle {
    pub fn new(cfg: ToggleConfig) -> Self {
        Toggle { cfg, domain: Domain::symmetric_unit(4) }
    }

    /// Truth oracle from an uncounted solve. A failed solve counts as the
    /// low-`v` side.
    pub fn side(&self, x: &[f64]) -> Label {
        match self.evaluate(x) {
            Ok(v) if v > REGIME_SPLIT => Label::Positive,
            _ => Label::Negative,
        }
    }
}

impl Model for Toggle {
    fn name(&self) -> String {
        "toggle".into()
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64, ModelError> {
        Ok(steady_state(&parameters(x), &self.cfg)?[1])
    }
}
