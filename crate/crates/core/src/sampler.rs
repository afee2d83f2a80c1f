//! Uncertainty sampling on the classifier boundary.
//!
//! Random starts are pushed onto the zero level set of the decision function
//! by projected gradient descent on `decision(x)²`. A candidate is kept only
//! if it is farther than `ε` from every labeled point (and from the points
//! already kept in this batch) and has labeled points of both classes within
//! `δ_t`. Kept points are then labeled by comparing their model value with the
//! nearest labeled neighbour of each class.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{distance, squared_distance, Domain, Label, LabeledPoint};
use crate::svm::Classifier;

#[derive(Debug, Clone, PartialEq)]
pub struct DescentSettings {
    pub max_steps: usize,
    /// Stop once an accepted step moves less than this.
    pub step_tol: f64,
    /// Stop once `|decision|` drops below this.
    pub value_tol: f64,
    /// Sufficient-decrease constant of the backtracking line search.
    pub armijo: f64,
    pub max_halvings: usize,
}

impl Default for DescentSettings {
    fn default() -> Self {
        DescentSettings { max_steps: 200, step_tol: 1e-10, value_tol: 1e-8, armijo: 1e-4, max_halvings: 60 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub n_add: usize,
    pub delta_t: f64,
    pub epsilon: f64,
    /// Candidate attempts per call.
    pub itermax: usize,
    pub descent: DescentSettings,
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_add == 0 || self.itermax == 0 {
            return Err(Error::InvalidConfig("n_add and itermax must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) || !(self.epsilon < self.delta_t) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < epsilon < delta_t (got {}, {})",
                self.epsilon, self.delta_t
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub start: Vec<f64>,
    pub point: Vec<f64>,
    pub start_decision: f64,
    pub decision: f64,
}

/// Projected gradient descent on `decision²` from `start`, staying in `domain`.
///
/// The first trial step of every iteration is the Gauss-Newton step that
/// zeroes the linearized decision, capped at the domain diameter; it is
/// halved until the projected Armijo condition holds.
pub fn descend(clf: &Classifier, domain: &Domain, start: &[f64], opt: &DescentSettings) -> (Vec<f64>, f64) {
    let mut x = start.to_vec();
    domain.project(&mut x);
    let (mut dec, mut g) = clf.decision_and_gradient(&x);
    let diameter = domain.diameter();
    for _ in 0..opt.max_steps {
        if dec.abs() < opt.value_tol {
            break;
        }
        let gnorm2: f64 = g.iter().map(|v| v * v).sum();
        if gnorm2 == 0.0 || !gnorm2.is_finite() {
            break;
        }
        // gradient of dec² is 2·dec·g
        let grad: Vec<f64> = g.iter().map(|v| 2.0 * dec * v).collect();
        let grad_norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut t = (1.0 / (2.0 * gnorm2)).min(diameter / grad_norm);
        let obj = dec * dec;
        let mut accepted = None;
        for _ in 0..opt.max_halvings {
            let mut trial: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - t * gi).collect();
            domain.project(&mut trial);
            let decrease: f64 = grad.iter().zip(x.iter().zip(&trial)).map(|(gi, (a, b))| gi * (a - b)).sum();
            let (d_trial, g_trial) = clf.decision_and_gradient(&trial);
            if d_trial * d_trial <= obj - opt.armijo * decrease && d_trial * d_trial < obj {
                accepted = Some((trial, d_trial, g_trial));
                break;
            }
            t *= 0.5;
        }
        let Some((next, d_next, g_next)) = accepted else { break };
        let moved = squared_distance(&next, &x).sqrt();
        x = next;
        dec = d_next;
        g = g_next;
        if moved < opt.step_tol {
            break;
        }
    }
    (x, dec)
}

/// Draw a uniform start in `domain` and descend to the classifier boundary.
pub fn boundary_candidate<R: Rng + ?Sized>(clf: &Classifier, domain: &Domain, rng: &mut R, opt: &DescentSettings) -> Candidate {
    let start = domain.sample_uniform(rng);
    let start_decision = clf.decision(&start);
    let (point, decision) = descend(clf, domain, &start, opt);
    Candidate { start, point, start_decision, decision }
}

/// Spacing and two-class proximity test for a candidate.
pub fn acceptable(x: &[f64], labeled: &[LabeledPoint], batch: &[Vec<f64>], cfg: &SamplerConfig) -> bool {
    let eps2 = cfg.epsilon * cfg.epsilon;
    if labeled.iter().any(|p| squared_distance(&p.x, x) <= eps2) || batch.iter().any(|p| squared_distance(p, x) <= eps2) {
        return false;
    }
    let near = |class: Label| labeled.iter().any(|p| p.label == class && distance(&p.x, x) < cfg.delta_t);
    near(Label::Positive) && near(Label::Negative)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryBatch {
    pub points: Vec<Vec<f64>>,
    pub attempts: usize,
}

/// Generate candidates until `n_add` are accepted or `itermax` attempts are
/// used. An empty batch means the boundary is resolved to `ε`.
pub fn find_points_on_boundary<R: Rng + ?Sized>(
    clf: &Classifier,
    labeled: &[LabeledPoint],
    domain: &Domain,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> BoundaryBatch {
    let mut points = Vec::new();
    let mut attempts = 0;
    while points.len() < cfg.n_add && attempts < cfg.itermax {
        attempts += 1;
        let c = boundary_candidate(clf, domain, rng, &cfg.descent);
        if acceptable(&c.point, labeled, &points, cfg) {
            points.push(c.point);
        }
    }
    BoundaryBatch { points, attempts }
}

/// Label of a new point with value `fx`: the class whose nearest labeled
/// neighbour (within `δ_t`) has the closer value. The second field is true
/// on an exact tie, which goes to `Positive`.
pub fn label_us_point(labeled: &[LabeledPoint], x: &[f64], fx: f64, delta_t: f64) -> Result<(Label, bool)> {
    let nearest = |class: Label| {
        labeled
            .iter()
            .filter(|p| p.label == class)
            .map(|p| (distance(&p.x, x), p.value))
            .filter(|(r, _)| *r < delta_t)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, v)| v)
            .ok_or(Error::MissingNeighbor(class.as_i8()))
    };
    let f1 = nearest(Label::Positive)?;
    let f2 = nearest(Label::Negative)?;
    let (d1, d2) = ((fx - f1).abs(), (fx - f2).abs());
    Ok(if d1 < d2 {
        (Label::Positive, false)
    } else if d1 == d2 {
        (Label::Positive, true)
    } else {
        (Label::Negative, false)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use crate::svm::{train, SmoParams, TrainingSet};
    use proptest::prelude::*;

    fn lp(x: Vec<f64>, value: f64, label: Label) -> LabeledPoint {
        LabeledPoint { x, value, label }
    }

    fn one_d(pos: f64) -> Classifier {
        let set = TrainingSet::new(vec![vec![-1.0], vec![pos]], vec![Label::Negative, Label::Positive]).unwrap();
        train(&set, &SmoParams { kkt_tol: 1e-10, ..SmoParams::new(1.0, 10.0) }).unwrap()
    }

    fn cfg() -> SamplerConfig {
        SamplerConfig { n_add: 5, delta_t: 1.0, epsilon: 0.1, itermax: 50, descent: DescentSettings::default() }
    }

    #[test]
    fn start_on_boundary_is_kept() {
        let clf = one_d(1.0);
        assert!(clf.decision(&[0.0]).abs() < 1e-12);
        let (x, _) = descend(&clf, &Domain::symmetric_unit(1), &[0.0], &DescentSettings::default());
        assert_eq!(x, vec![0.0]);
    }

    // Bisection on the decision function is the oracle for its root.
    #[test]
    fn descent_reaches_bisection_root() {
        let clf = one_d(0.6);
        let (mut lo, mut hi) = (-1.0, 0.6);
        assert!(clf.decision(&[lo]) < 0.0 && clf.decision(&[hi]) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if clf.decision(&[mid]) < 0.0 { lo = mid } else { hi = mid }
        }
        let root = 0.5 * (lo + hi);
        let domain = Domain::symmetric_unit(1);
        for s in [-0.95, -0.5, -0.1, 0.3, 0.55] {
            let (x, dec) = descend(&clf, &domain, &[s], &DescentSettings::default());
            assert!(dec.abs() < 1e-8, "start {s}: decision {dec}");
            assert!((x[0] - root).abs() < 1e-6, "start {s}: {} vs {root}", x[0]);
        }
    }

    #[test]
    fn spacing_rule_rejects_close_candidates() {
        let c = cfg();
        let labeled = vec![lp(vec![0.0, 0.0], 1.0, Label::Positive), lp(vec![0.5, 0.0], -1.0, Label::Negative)];
        assert!(!acceptable(&[0.05, 0.0], &labeled, &[], &c));
        assert!(!acceptable(&[0.25, 0.0], &labeled, &[vec![0.25, 0.05]], &c));
        assert!(acceptable(&[0.25, 0.0], &labeled, &[], &c));
    }

    #[test]
    fn neighbours_of_both_classes_required() {
        let c = cfg();
        let labeled = vec![lp(vec![-0.9, 0.0], 1.0, Label::Positive), lp(vec![0.9, 0.0], -1.0, Label::Negative)];
        assert!(acceptable(&[0.0, 0.0], &labeled, &[], &c));
        assert!(!acceptable(&[0.5, 0.0], &labeled, &[], &c));
        let only_pos = vec![lp(vec![-0.2, 0.0], 1.0, Label::Positive)];
        assert!(!acceptable(&[0.0, 0.0], &only_pos, &[], &c));
    }

    #[test]
    fn single_failed_attempt_gives_empty_batch() {
        let clf = one_d(1.0);
        // every labeled point sits on top of the whole (tiny) domain
        let domain = Domain::new(vec![-0.01], vec![0.01]);
        let labeled = vec![lp(vec![0.0], 1.0, Label::Positive), lp(vec![0.001], -1.0, Label::Negative)];
        let c = SamplerConfig { itermax: 1, ..cfg() };
        let b = find_points_on_boundary(&clf, &labeled, &domain, &c, &mut seeded_rng(1));
        assert!(b.points.is_empty());
        assert_eq!(b.attempts, 1);
    }

    #[test]
    fn batch_points_are_spaced_and_near_boundary() {
        let domain = Domain::new(vec![-1.0, -1.0], vec![1.0, 1.0]);
        let set = TrainingSet::new(
            vec![vec![-0.5, -0.5], vec![-0.5, 0.5], vec![0.5, -0.5], vec![0.5, 0.5]],
            vec![Label::Negative, Label::Negative, Label::Positive, Label::Positive],
        )
        .unwrap();
        let clf2 = train(&set, &SmoParams::new(0.7, 10.0)).unwrap();
        let labeled: Vec<LabeledPoint> =
            set.points().iter().zip(set.labels()).map(|(p, l)| lp(p.clone(), l.sign(), *l)).collect();
        let c = SamplerConfig { delta_t: 3.0, ..cfg() };
        let b = find_points_on_boundary(&clf2, &labeled, &domain, &c, &mut seeded_rng(3));
        assert_eq!(b.points.len(), 5);
        for (i, p) in b.points.iter().enumerate() {
            assert!(clf2.decision(p).abs() < 1e-6);
            for q in &b.points[..i] {
                assert!(distance(p, q) > c.epsilon);
            }
        }
    }

    #[test]
    fn us_labels_follow_closest_value() {
        let labeled = vec![lp(vec![0.0], 10.2, Label::Positive), lp(vec![0.3], -9.8, Label::Negative)];
        assert_eq!(label_us_point(&labeled, &[0.1], 9.9, 1.0).unwrap(), (Label::Positive, false));
        assert_eq!(label_us_point(&labeled, &[0.1], 0.2, 1.0).unwrap(), (Label::Positive, true));
        assert_eq!(label_us_point(&labeled, &[0.1], -3.0, 1.0).unwrap(), (Label::Negative, false));
        assert!(matches!(label_us_point(&labeled, &[5.0], 0.0, 1.0), Err(Error::MissingNeighbor(1))));
    }

    #[test]
    fn corner_values_label_correctly_with_half_jump_margin() {
        // Burgers near (1, 1): the nearest labeled pair sits where the jump is
        // 1.4, while the new point sees ±0.25. In-class variation 0.45 stays
        // below the half jump 0.7.
        let labeled = vec![lp(vec![2.2, 0.6], 0.7, Label::Positive), lp(vec![2.4, 0.6], -0.7, Label::Negative)];
        assert_eq!(label_us_point(&labeled, &[2.8, 0.95], 0.25, 0.5 + 0.3).unwrap().0, Label::Positive);
        assert_eq!(label_us_point(&labeled, &[2.8, 0.95], -0.25, 0.5 + 0.3).unwrap().0, Label::Negative);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn descent_never_increases_decision_magnitude(seed in 0u64..1000) {
            let mut rng = seeded_rng(seed);
            let pts: Vec<Vec<f64>> = (0..8).map(|_| domain2().sample_uniform(&mut rng)).collect();
            let labels: Vec<Label> = (0..8).map(|i| if i % 2 == 0 { Label::Positive } else { Label::Negative }).collect();
            let clf = train(&TrainingSet::new(pts, labels).unwrap(), &SmoParams::new(0.5, 10.0)).unwrap();
            let c = boundary_candidate(&clf, &domain2(), &mut rng, &DescentSettings::default());
            prop_assert!(c.decision.abs() <= c.start_decision.abs());
            prop_assert!(domain2().contains(&c.point));
        }
    }

    fn domain2() -> Domain {
        Domain::symmetric_unit(2)
    }
}
