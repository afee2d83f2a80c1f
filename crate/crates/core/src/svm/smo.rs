//! Sequential minimal optimization with second-order working-set selection.
//!
//! Each step picks the maximal KKT violator `i` from the "up" set and the
//! partner `j` from the "low" set that maximizes the guaranteed objective
//! decrease, solves the two-variable subproblem in closed form and clips it to
//! the box. Iteration stops when the violating-pair gap drops below the
//! tolerance, which bounds every KKT residual `y_i·decision(x_i) − 1` by the
//! same tolerance. Selection is deterministic.

use super::{kernel_matrix, Classifier, TrainingSet};
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoParams {
    pub c: f64,
    pub sigma: f64,
    pub kkt_tol: f64,
    /// Iteration cap; `None` uses `max(100_000, 100 n)`.
    pub max_iter: Option<usize>,
}

impl SmoParams {
    pub fn new(sigma: f64, c: f64) -> Self {
        SmoParams { c, sigma, kkt_tol: 1e-3, max_iter: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// `decision = Σ α_i y_i K_i· + bias`.
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solve the dual over the rows `idx` of a full Gram matrix `k` (`n × n`).
/// `y` is indexed like `k`.
pub fn train_on_kernel(k: &[f64], n: usize, idx: &[usize], y: &[f64], c: f64, kkt_tol: f64, max_iter: usize) -> SmoSolution {
    train_on_kernel_from(k, n, idx, y, c, kkt_tol, max_iter, None)
}

/// [`train_on_kernel`] started from a feasible `alpha` (one entry per `idx`
/// row, `0 ≤ α ≤ c`, `Σ α y = 0`) instead of zero.
#[allow(clippy::too_many_arguments)]
pub fn train_on_kernel_from(
    k: &[f64],
    n: usize,
    idx: &[usize],
    y: &[f64],
    c: f64,
    kkt_tol: f64,
    max_iter: usize,
    start: Option<&[f64]>,
) -> SmoSolution {
    let m = idx.len();
    let ys: Vec<f64> = idx.iter().map(|i| y[*i]).collect();
    // contiguous Gram block for the selected rows
    let mut kb = vec![0.0; m * m];
    for (a, &ia) in idx.iter().enumerate() {
        let row = &k[ia * n..(ia + 1) * n];
        for (b, &ib) in idx.iter().enumerate() {
            kb[a * m + b] = row[ib];
        }
    }
    let kd: Vec<f64> = (0..m).map(|a| kb[a * m + a]).collect();
    let mut alpha = match start {
        Some(a) => {
            assert_eq!(a.len(), m, "warm start has the wrong length");
            a.iter().map(|v| v.clamp(0.0, c)).collect()
        }
        None => vec![0.0; m],
    };
    // yg_t = y_t · ∂/∂α_t of the dual objective
    let mut yg: Vec<f64> = ys.iter().map(|v| -v).collect();
    for s in (0..m).filter(|s| alpha[*s] > 0.0) {
        let w = ys[s] * alpha[s];
        for (g, kst) in yg.iter_mut().zip(&kb[s * m..(s + 1) * m]) {
            *g += kst * w;
        }
    }
    let is_up = |y: f64, a: f64| if y > 0.0 { a < c } else { a > 0.0 };
    let is_low = |y: f64, a: f64| if y > 0.0 { a > 0.0 } else { a < c };
    let mut up: Vec<bool> = (0..m).map(|t| is_up(ys[t], alpha[t])).collect();
    let mut low: Vec<bool> = (0..m).map(|t| is_low(ys[t], alpha[t])).collect();

    let max_up = |yg: &[f64], up: &[bool]| {
        let (mut gmax, mut i) = (f64::MIN, usize::MAX);
        for t in 0..m {
            if up[t] && -yg[t] >= gmax {
                gmax = -yg[t];
                i = t;
            }
        }
        (gmax, i)
    };
    let (mut gmax, mut i) = max_up(&yg, &up);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // i is the maximal violator in the up set; j the second-order choice
        // in the low set
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        if i != usize::MAX {
            let ki = &kb[i * m..(i + 1) * m];
            // maximize diff²/quad as a cross-multiplied comparison so the
            // loop has no divisions and only the rare improvement branches
            let (mut best_num, mut best_den) = (0.0, 1.0);
            for t in 0..m {
                let g = yg[t];
                gmax2 = gmax2.max(if low[t] { g } else { f64::NEG_INFINITY });
                let diff = gmax + g;
                let quad = kd[i] + kd[t] - 2.0 * ki[t];
                let quad = if quad > 0.0 { quad } else { TAU };
                let num = diff * diff;
                if (low[t] & (diff > 0.0)) & (num * best_den >= best_num * quad) {
                    best_num = num;
                    best_den = quad;
                    j = t;
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax + gmax2 < kkt_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (ai, aj) = (alpha[i], alpha[j]);
        let (gi, gj) = (ys[i] * yg[i], ys[j] * yg[j]);
        let quad = {
            let q = kd[i] + kd[j] - 2.0 * kb[i * m + j];
            if q > 0.0 { q } else { TAU }
        };
        if ys[i] != ys[j] {
            let delta = (-gi - gj) / quad;
            let diff = ai - aj;
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (gi - gj) / quad;
            let sum = ai + aj;
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        for t in [i, j] {
            up[t] = is_up(ys[t], alpha[t]);
            low[t] = is_low(ys[t], alpha[t]);
        }
        let (wi, wj) = (ys[i] * (alpha[i] - ai), ys[j] * (alpha[j] - aj));
        let (ki, kj) = (&kb[i * m..(i + 1) * m], &kb[j * m..(j + 1) * m]);
        // fused gradient update and next up-set maximum
        gmax = f64::MIN;
        i = usize::MAX;
        for t in 0..m {
            let v = yg[t] + ki[t] * wi + kj[t] * wj;
            yg[t] = v;
            let cand = if up[t] { -v } else { f64::NEG_INFINITY };
            if cand >= gmax {
                gmax = cand;
                i = t;
            }
        }
    }

    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;
    let grad: Vec<f64> = ys.iter().zip(&yg).map(|(a, b)| a * b).collect();
    // ρ from free vectors, else the middle of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..m {
        let yg = ys[t] * grad[t];
        if upper(alpha[t]) {
            if ys[t] < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else if lower(alpha[t]) {
            if ys[t] > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 { sum_free / free as f64 } else { 0.5 * (ub + lb) };
    SmoSolution { alpha, bias: -rho, iterations, converged }
}

/// Train a classifier on `set`. Support vectors are the points with `α > 0`.
pub fn train(set: &TrainingSet, params: &SmoParams) -> Result<Classifier> {
    train_from(set, params, None).map(|(clf, _)| clf)
}

/// [`train`] from a feasible starting `alpha` (see [`train_on_kernel_from`]);
/// also returns the final `alpha` for the next warm start.
pub fn train_from(set: &TrainingSet, params: &SmoParams, start: Option<&[f64]>) -> Result<(Classifier, Vec<f64>)> {
    if !(params.c > 0.0) || !(params.sigma > 0.0) {
        return Err(Error::InvalidConfig(format!("SVM needs C > 0 and sigma > 0 (got {}, {})", params.c, params.sigma)));
    }
    let n = set.len();
    let k = kernel_matrix(set.points(), params.sigma);
    let y = set.signs();
    let idx: Vec<usize> = (0..n).collect();
    let max_iter = params.max_iter.unwrap_or((100 * n).max(100_000));
    let sol = train_on_kernel_from(&k, n, &idx, &y, params.c, params.kkt_tol, max_iter, start);
    let clf = classifier_from(set.points(), &idx, &y, &sol, params, n);
    Ok((clf, sol.alpha))
}

pub(crate) fn classifier_from(
    points: &[Vec<f64>],
    idx: &[usize],
    y: &[f64],
    sol: &SmoSolution,
    params: &SmoParams,
    training_size: usize,
) -> Classifier {
    let mut support = Vec::new();
    let mut weights = Vec::new();
    for (a, i) in sol.alpha.iter().zip(idx) {
        if *a > 0.0 {
            support.push(points[*i].clone());
            weights.push(a * y[*i]);
        }
    }
    Classifier { support, weights, bias: sol.bias, sigma: params.sigma, c: params.c, training_size, converged: sol.converged }
}
