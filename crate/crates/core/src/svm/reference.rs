//! Slow reference solver for the SVM dual, used to check [`super::train`].
//!
//! Accelerated projected gradient (FISTA with restarts) on
//! `min ½ αᵀQα − 1ᵀα` over the feasible set `{0 ≤ α ≤ C, yᵀα = 0}`. The
//! Euclidean projection onto that set is `clip(v − μy, 0, C)` with the scalar
//! `μ` found by bisection. Only meant for a few dozen points.

use super::kernel_matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// Dual objective `Σ α − ½ αᵀQα`.
    pub objective: f64,
}

/// Projection of `v` onto `{0 ≤ α ≤ c, yᵀα = 0}`.
pub fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |mu: f64| -> Vec<f64> { v.iter().zip(y).map(|(vi, yi)| (vi - mu * yi).clamp(0.0, c)).collect() };
    let residual = |a: &[f64]| a.iter().zip(y).map(|(ai, yi)| ai * yi).sum::<f64>();
    // residual is nonincreasing in μ
    let span = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

fn objective(q: &[f64], alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * q[i * n + j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

pub fn solve(points: &[Vec<f64>], y: &[f64], sigma: f64, c: f64, iterations: usize) -> ReferenceSolution {
    let n = points.len();
    let k = kernel_matrix(points, sigma);
    let q: Vec<f64> = (0..n * n).map(|ij| y[ij / n] * y[ij % n] * k[ij]).collect();
    let lipschitz = (0..n).map(|i| (0..n).map(|j| q[i * n + j].abs()).sum::<f64>()).fold(0.0, f64::max);
    let step = 1.0 / lipschitz;
    let grad = |a: &[f64]| -> Vec<f64> { (0..n).map(|i| (0..n).map(|j| q[i * n + j] * a[j]).sum::<f64>() - 1.0).collect() };

    let mut alpha = vec![0.0; n];
    let mut z = alpha.clone();
    let mut t = 1.0f64;
    let mut best = objective(&q, &alpha);
    for _ in 0..iterations {
        let g = grad(&z);
        let v: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - step * gi).collect();
        let next = project(&v, y, c);
        let obj = objective(&q, &next);
        if obj < best {
            // lost monotonicity: restart the momentum
            t = 1.0;
            z = alpha.clone();
            continue;
        }
        best = obj;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = next.iter().zip(&alpha).map(|(a1, a0)| a1 + (t - 1.0) / t_next * (a1 - a0)).collect();
        alpha = next;
        t = t_next;
    }

    // bias from margin support vectors, else the middle of the feasible range
    let weights: Vec<f64> = alpha.iter().zip(y).map(|(a, yi)| a * yi).collect();
    let f = |i: usize| (0..n).map(|j| weights[j] * k[i * n + j]).sum::<f64>();
    let eps = 1e-6 * c.max(1.0);
    let free: Vec<f64> = (0..n).filter(|i| alpha[*i] > eps && alpha[*i] < c - eps).map(|i| y[i] - f(i)).collect();
    let bias = if free.is_empty() {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            let b = y[i] - f(i);
            let at_upper = alpha[i] >= c - eps;
            // y_i (f_i + b) ≥ 1 at α = 0, ≤ 1 at α = C
            if (y[i] > 0.0) != at_upper {
                lo = lo.max(b);
            } else {
                hi = hi.min(b);
            }
        }
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            _ => 0.0,
        }
    } else {
        free.iter().sum::<f64>() / free.len() as f64
    };
    ReferenceSolution { objective: objective(&q, &alpha), alpha, bias }
}
