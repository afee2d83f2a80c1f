//! Stratified k-fold grid search over `(sigma, C)`.

use rand::seq::SliceRandom;
use rand::Rng;

use super::smo::train_on_kernel_from;
use super::{kernel_matrix, TrainingSet};
use crate::error::{Error, Result};
use crate::geometry::{distance, Label};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvChoice {
    pub sigma: f64,
    pub c: f64,
    /// Mean held-out accuracy of the chosen pair.
    pub accuracy: f64,
}

/// Median over all pairs of distinct training points (1 if undefined).
pub fn median_pairwise_distance(points: &[Vec<f64>]) -> f64 {
    let mut d = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for i in 0..points.len() {
        for j in 0..i {
            d.push(distance(&points[i], &points[j]));
        }
    }
    d.retain(|v| *v > 0.0);
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    if m % 2 == 1 {
        d[m / 2]
    } else {
        0.5 * (d[m / 2 - 1] + d[m / 2])
    }
}

/// `sigma = 2^k · median distance` for `k = −3..=3` and `C = 10^k` for
/// `k = −1..=4`.
pub fn default_grid(points: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let med = median_pairwise_distance(points);
    let sigmas = (-3..=3).map(|k| med * 2f64.powi(k)).collect();
    let cs = (-1..=4).map(|k| 10f64.powi(k)).collect();
    (sigmas, cs)
}

/// Fold index per sample: each class is shuffled and dealt round-robin.
pub fn stratified_folds<R: Rng + ?Sized>(labels: &[Label], folds: usize, rng: &mut R) -> Vec<usize> {
    let mut assign = vec![0; labels.len()];
    let mut next = 0;
    for class in [Label::Positive, Label::Negative] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|i| labels[*i] == class).collect();
        idx.shuffle(rng);
        for i in idx {
            assign[i] = next % folds;
            next += 1;
        }
    }
    assign
}

/// Default SMO iteration cap for each fold fit. Far below the cap of a final
/// training: a fold fit only needs to rank grid pairs.
pub const CV_MAX_ITER: usize = 20_000;

/// Pick the pair with the best mean held-out accuracy. Ties go to the larger
/// `sigma`, then the smaller `C`.
pub fn cross_validate<R: Rng + ?Sized>(
    set: &TrainingSet,
    sigmas: &[f64],
    cs: &[f64],
    folds: usize,
    kkt_tol: f64,
    max_iter: usize,
    rng: &mut R,
) -> Result<CvChoice> {
    if sigmas.is_empty() || cs.is_empty() {
        return Err(Error::InvalidConfig("empty SVM grid".into()));
    }
    if folds < 2 || set.len() < folds {
        return Err(Error::InvalidConfig(format!("{folds} folds for {} samples", set.len())));
    }
    if set.count(Label::Positive) == 0 || set.count(Label::Negative) == 0 {
        return Err(Error::SingleClass);
    }
    let n = set.len();
    let y = set.signs();
    let assign = stratified_folds(set.labels(), folds, rng);
    let parts: Vec<(Vec<usize>, Vec<usize>)> = (0..folds)
        .map(|f| ((0..n).filter(|i| assign[*i] != f).collect(), (0..n).filter(|i| assign[*i] == f).collect()))
        .collect();

    // each fold walks C upward, warm-starting from the previous solution
    // (still feasible because the box only grows)
    let mut by_c: Vec<usize> = (0..cs.len()).collect();
    by_c.sort_by(|a, b| cs[*a].total_cmp(&cs[*b]));

    let mut best: Option<CvChoice> = None;
    for &sigma in sigmas {
        let k = kernel_matrix(set.points(), sigma);
        let mut totals = vec![0.0; cs.len()];
        for (train, test) in &parts {
            let first = y[train[0]];
            if train.iter().all(|i| y[*i] == first) {
                // one class left in training: it predicts that class
                let acc = test.iter().filter(|t| y[**t] == first).count() as f64 / test.len() as f64;
                totals.iter_mut().for_each(|t| *t += acc);
                continue;
            }
            let mut warm: Option<Vec<f64>> = None;
            for &ci in &by_c {
                let sol = train_on_kernel_from(&k, n, train, &y, cs[ci], kkt_tol, max_iter, warm.as_deref());
                let correct = test
                    .iter()
                    .filter(|&&t| {
                        let dec: f64 = train
                            .iter()
                            .zip(&sol.alpha)
                            .filter(|(_, a)| **a > 0.0)
                            .map(|(i, a)| a * y[*i] * k[t * n + i])
                            .sum::<f64>()
                            + sol.bias;
                        Label::from_value(dec).sign() == y[t]
                    })
                    .count();
                totals[ci] += correct as f64 / test.len() as f64;
                warm = Some(sol.alpha);
            }
        }
        for (ci, &c) in cs.iter().enumerate() {
            let accuracy = totals[ci] / folds as f64;
            let better = match best {
                None => true,
                Some(b) => {
                    const SAME: f64 = 1e-12;
                    accuracy > b.accuracy + SAME
                        || ((accuracy - b.accuracy).abs() <= SAME
                            && (sigma > b.sigma || (sigma == b.sigma && c < b.c)))
                }
            };
            if better {
                best = Some(CvChoice { sigma, c, accuracy });
            }
        }
    }
    Ok(best.expect("grid is nonempty"))
}
