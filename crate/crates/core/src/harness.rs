//! Scoring against ground truth and repeated-seed convergence studies.

use std::fmt::Write as _;

use rand::Rng;

use crate::detector::{detect, DetectorConfig, Monitor, StopReason};
use crate::error::{Error, Result};
use crate::geometry::{Domain, Label};
use crate::models::{by_name, ModelAdapter, Sphere, Truth};
use crate::rng::{derive_seed, seeded_rng};
use crate::svm::Classifier;

const STREAM_TEST: u64 = 0x7e57;
const STREAM_RUN: u64 = 0x1000;

/// Fraction of `points` where the classifier disagrees with `truth`. A zero
/// decision value counts as `+1`.
pub fn misclassification(clf: &Classifier, truth: &dyn Truth, points: &[Vec<f64>]) -> f64 {
    error_rate(clf, points, &truth_labels(truth, points))
}

/// Truth oracle labels of `points`; compute once per test set when the
/// oracle is expensive.
pub fn truth_labels(truth: &dyn Truth, points: &[Vec<f64>]) -> Vec<Label> {
    points.iter().map(|x| truth.side(x)).collect()
}

/// Fraction of `points` where the classifier disagrees with `labels`.
pub fn error_rate(clf: &Classifier, points: &[Vec<f64>], labels: &[Label]) -> f64 {
    assert_eq!(points.len(), labels.len(), "one label per point");
    if points.is_empty() {
        return 0.0;
    }
    let wrong = points.iter().zip(labels).filter(|(x, l)| clf.classify(x) != **l).count();
    wrong as f64 / points.len() as f64
}

/// Monte-Carlo standard error of a misclassification estimate.
pub fn binomial_stderr(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

pub fn uniform_sample<R: Rng + ?Sized>(domain: &Domain, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n).map(|_| domain.sample_uniform(rng)).collect()
}

/// Uniform points in the sphere's box whose radial distance lies within
/// `band` of the radius (rejection sampling).
pub fn near_surface_sample<R: Rng + ?Sized>(sphere: &Sphere, n: usize, band: f64, rng: &mut R) -> Vec<Vec<f64>> {
    assert!(band > 0.0, "band must be positive");
    let domain = crate::models::Model::domain(sphere);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = domain.sample_uniform(rng);
        if (Sphere::radial(&x) - sphere.radius()).abs() < band {
            out.push(x);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestRegion {
    /// Uniform over the model domain.
    Box,
    /// Within this distance of the sphere surface (sphere models only).
    NearSurface(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub model: String,
    pub detector: DetectorConfig,
    pub n_test: usize,
    pub region: TestRegion,
    pub n_runs: usize,
    /// Error levels for which evals-to-target are reported. The smallest one
    /// also stops each run early.
    pub targets: Vec<f64>,
    /// Worker threads for independent runs.
    pub threads: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            model: "surf1".into(),
            detector: DetectorConfig::default(),
            n_test: 10_000,
            region: TestRegion::Box,
            n_runs: 10,
            targets: Vec::new(),
            threads: 1,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        if self.n_test == 0 || self.n_runs == 0 || self.threads == 0 {
            return Err(Error::InvalidConfig("n_test, n_runs and threads must all be >= 1".into()));
        }
        if self.targets.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::InvalidConfig("targets must lie in [0, 1]".into()));
        }
        if let TestRegion::NearSurface(b) = self.region {
            if !(b > 0.0) {
                return Err(Error::InvalidConfig(format!("near-surface band must be > 0, got {b}")));
            }
        }
        Ok(())
    }

    /// The shared test set, drawn once from the spec seed.
    pub fn test_points(&self) -> Result<Vec<Vec<f64>>> {
        let mut rng = seeded_rng(derive_seed(self.detector.seed, STREAM_TEST));
        match self.region {
            TestRegion::Box => {
                let b = by_name(&self.model)?;
                Ok(uniform_sample(b.adapter.domain(), self.n_test, &mut rng))
            }
            TestRegion::NearSurface(band) => {
                let sphere = match self.model.as_str() {
                    "sphere20" => Sphere::paper(),
                    other => {
                        return Err(Error::InvalidConfig(format!("near-surface test sets need a sphere model, not '{other}'")))
                    }
                };
                Ok(near_surface_sample(&sphere, self.n_test, band, &mut rng))
            }
        }
    }

    pub fn run_seed(&self, run: usize) -> u64 {
        derive_seed(self.detector.seed, STREAM_RUN + run as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub run: usize,
    pub iter: usize,
    pub evals: usize,
    pub labeled: usize,
    pub misclass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub run: usize,
    pub seed: u64,
    pub init_evals: usize,
    pub stop: StopReason,
    pub rows: Vec<StudyRow>,
    /// First cumulative eval count at or below each target, in target order.
    pub evals_to_target: Vec<Option<usize>>,
}

impl RunOutcome {
    pub fn final_row(&self) -> &StudyRow {
        self.rows.last().expect("a run has at least one row")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (0 for a single value).
    pub std: f64,
    pub stderr: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        let std = var.sqrt();
        Some(Stat { n, mean, std, stderr: std / (n as f64).sqrt() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub spec: ExperimentSpec,
    pub runs: Vec<RunOutcome>,
    /// `(run, message)` for runs that errored.
    pub failures: Vec<(usize, String)>,
}

impl StudyReport {
    pub fn final_misclass(&self) -> Option<Stat> {
        Stat::of(&self.runs.iter().map(|r| r.final_row().misclass).collect::<Vec<_>>())
    }

    pub fn final_evals(&self) -> Option<Stat> {
        Stat::of(&self.runs.iter().map(|r| r.final_row().evals as f64).collect::<Vec<_>>())
    }

    pub fn init_evals(&self) -> Option<Stat> {
        Stat::of(&self.runs.iter().map(|r| r.init_evals as f64).collect::<Vec<_>>())
    }

    /// Evals-to-target over the runs that reached target `k`, and how many did.
    pub fn evals_to_target(&self, k: usize) -> (Option<Stat>, usize) {
        let hits: Vec<f64> = self.runs.iter().filter_map(|r| r.evals_to_target[k]).map(|e| e as f64).collect();
        (Stat::of(&hits), hits.len())
    }

    /// Misclassification after `iter` retrainings, with each run's last value
    /// carried forward once it stops.
    pub fn misclass_at_iter(&self, iter: usize) -> Option<Stat> {
        let v: Vec<f64> = self
            .runs
            .iter()
            .map(|r| r.rows.iter().take_while(|row| row.iter <= iter).last().unwrap_or(&r.rows[0]).misclass)
            .collect();
        Stat::of(&v)
    }

    /// Misclassification once `evals` model evaluations are spent: each
    /// run's latest row within that budget, carried forward after it stops.
    /// `None` until every run has trained at least once.
    pub fn misclass_at_evals(&self, evals: usize) -> Option<Stat> {
        let v: Option<Vec<f64>> =
            self.runs.iter().map(|r| r.rows.iter().take_while(|row| row.evals <= evals).last().map(|row| row.misclass)).collect();
        Stat::of(&v?)
    }

    /// Smallest eval count at which the mean misclassification over runs is
    /// at or below `level`.
    pub fn evals_for_mean(&self, level: f64) -> Option<usize> {
        let mut marks: Vec<usize> = self.runs.iter().flat_map(|r| r.rows.iter().map(|row| row.evals)).collect();
        marks.sort_unstable();
        marks.dedup();
        marks.into_iter().find(|e| self.misclass_at_evals(*e).is_some_and(|s| s.mean <= level))
    }

    /// `run,seed,iter,evals,labeled,misclass`, one row per retraining.
    pub fn study_csv(&self) -> String {
        let mut out = String::from("run,seed,iter,evals,labeled,misclass\n");
        for r in &self.runs {
            for row in &r.rows {
                let _ = writeln!(out, "{},{},{},{},{},{}", row.run, r.seed, row.iter, row.evals, row.labeled, row.misclass);
            }
        }
        out
    }

    /// `metric,n,mean,std,stderr` rows: final error and evals, init evals,
    /// evals-to-target per target, failed runs, and the mean error per
    /// iteration.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("metric,n,mean,std,stderr\n");
        let mut row = |name: &str, s: Option<Stat>| {
            match s {
                Some(s) => writeln!(out, "{name},{},{},{},{}", s.n, s.mean, s.std, s.stderr),
                None => writeln!(out, "{name},0,,,"),
            }
            .expect("writing to a String");
        };
        let fm = self.final_misclass();
        row("final_misclass", fm);
        if let Some(s) = fm {
            // Monte-Carlo error of the test set itself
            let mc = binomial_stderr(s.mean, self.spec.n_test);
            row("final_misclass_mc", Some(Stat { n: self.spec.n_test, mean: s.mean, std: 0.0, stderr: mc }));
        }
        row("final_evals", self.final_evals());
        row("init_evals", self.init_evals());
        for (k, t) in self.spec.targets.iter().enumerate() {
            row(&format!("evals_to_{t}"), self.evals_to_target(k).0);
        }
        row("failed_runs", Some(Stat { n: self.failures.len(), mean: self.failures.len() as f64, std: 0.0, stderr: 0.0 }));
        let last = self.runs.iter().map(|r| r.final_row().iter).max().unwrap_or(0);
        for i in 0..=last {
            if self.runs.is_empty() {
                break;
            }
            row(&format!("misclass_iter_{i}"), self.misclass_at_iter(i));
        }
        out
    }
}

fn run_once(
    spec: &ExperimentSpec,
    model: &ModelAdapter,
    test: &[Vec<f64>],
    labels: &[Label],
    run: usize,
) -> Result<RunOutcome> {
    let seed = spec.run_seed(run);
    let cfg = DetectorConfig { seed, ..spec.detector.clone() };
    let score = |clf: &Classifier| error_rate(clf, test, labels);
    let stop_at = spec.targets.iter().copied().reduce(f64::min);
    let monitor = Monitor { score: &score, target: stop_at };
    let det = detect(model, &cfg, Some(&monitor))?;
    let rows: Vec<StudyRow> = det
        .trace
        .records
        .iter()
        .map(|r| StudyRow { run, iter: r.iter, evals: r.evals, labeled: r.labeled, misclass: r.misclass.unwrap_or(f64::NAN) })
        .collect();
    let evals_to_target =
        spec.targets.iter().map(|t| rows.iter().find(|r| r.misclass <= *t).map(|r| r.evals)).collect();
    Ok(RunOutcome { run, seed, init_evals: det.trace.init_evals, stop: det.trace.stop, rows, evals_to_target })
}

/// Run `spec.n_runs` detections with derived seeds, scoring every retraining
/// on one shared test set. Failed runs are recorded and skipped.
pub fn convergence_study(spec: &ExperimentSpec) -> Result<StudyReport> {
    spec.validate()?;
    let bench = by_name(&spec.model)?;
    let test = spec.test_points()?;
    let labels = truth_labels(bench.truth.as_ref(), &test);
    // each run gets its own counter; the model (and any solve cache) is shared
    let one = |run: usize| {
        let adapter = ModelAdapter::new(bench.adapter.model().clone());
        run_once(spec, &adapter, &test, &labels, run)
    };

    let mut results: Vec<Option<Result<RunOutcome>>> = (0..spec.n_runs).map(|_| None).collect();
    if spec.threads <= 1 {
        for (run, slot) in results.iter_mut().enumerate() {
            *slot = Some(one(run));
        }
    } else {
        let workers = spec.threads.min(spec.n_runs);
        let chunks: Vec<Vec<(usize, Result<RunOutcome>)>> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let one = &one;
                    s.spawn(move || (w..spec.n_runs).step_by(workers).map(|run| (run, one(run))).collect::<Vec<_>>())
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("study worker panicked")).collect()
        });
        for (run, r) in chunks.into_iter().flatten() {
            results[run] = Some(r);
        }
    }

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (run, r) in results.into_iter().enumerate() {
        match r.expect("every run slot is filled") {
            Ok(o) => runs.push(o),
            Err(e) => failures.push((run, e.to_string())),
        }
    }
    Ok(StudyReport { spec: spec.clone(), runs, failures })
}

/// Accuracy is reported as `1 - misclassification`.
pub fn accuracy(clf: &Classifier, truth: &dyn Truth, points: &[Vec<f64>]) -> f64 {
    1.0 - misclassification(clf, truth, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LabeledPoint;
    use crate::svm::{train, SmoParams, TrainingSet};

    /// A classifier whose decision is positive everywhere.
    fn constant_positive() -> Classifier {
        Classifier { support: vec![], weights: vec![], bias: 0.0, sigma: 1.0, c: 1.0, training_size: 0, converged: true }
    }

    #[test]
    fn constant_classifier_on_surface_one() {
        let b = by_name("surf1").unwrap();
        let pts = uniform_sample(b.adapter.domain(), 10_000, &mut seeded_rng(1));
        let clf = constant_positive();
        assert!(pts.iter().all(|x| clf.classify(x) == Label::Positive));
        let e = misclassification(&clf, b.truth.as_ref(), &pts);
        assert!((e - 0.65).abs() < 0.02, "{e}");
    }

    #[test]
    fn truth_aligned_and_flipped_labels() {
        let b = by_name("surf2").unwrap();
        let pts = uniform_sample(b.adapter.domain(), 400, &mut seeded_rng(2));
        let labeled: Vec<LabeledPoint> =
            pts.iter().map(|x| LabeledPoint { x: x.clone(), value: 0.0, label: b.truth.side(x) }).collect();
        let set = TrainingSet::from_labeled(&labeled).unwrap();
        let clf = train(&set, &SmoParams::new(0.01, 1e6)).unwrap();
        // tiny bandwidth memorizes the training points
        assert_eq!(misclassification(&clf, b.truth.as_ref(), &pts), 0.0);
        let flipped = |x: &[f64]| b.truth.side(x).flipped();
        assert_eq!(misclassification(&clf, &flipped, &pts), 1.0);
    }

    #[test]
    fn near_surface_points_respect_band() {
        let s = Sphere::paper();
        let pts = near_surface_sample(&s, 500, 0.125, &mut seeded_rng(3));
        assert_eq!(pts.len(), 500);
        for x in &pts {
            assert!((Sphere::radial(x) - 0.125).abs() < 0.125);
            assert!(Sphere::radial(x) < 0.25 + 0.125);
        }
        let again = near_surface_sample(&s, 500, 0.125, &mut seeded_rng(3));
        let pos = |p: &[Vec<f64>]| p.iter().filter(|x| s.side(x) == Label::Positive).count();
        assert_eq!(pos(&pts), pos(&again));
        assert!(pos(&pts) > 0 && pos(&pts) < 500);
    }

    #[test]
    fn zero_time_study_has_single_row() {
        let spec = ExperimentSpec {
            detector: DetectorConfig { time_budget: Some(0.0), ..Default::default() },
            n_test: 1000,
            n_runs: 1,
            ..Default::default()
        };
        let rep = convergence_study(&spec).unwrap();
        assert_eq!(rep.runs.len(), 1);
        assert_eq!(rep.runs[0].rows.len(), 1);
        assert!(rep.runs[0].rows[0].misclass.is_finite());
    }

    #[test]
    fn studies_are_reproducible_and_thread_independent() {
        let spec = ExperimentSpec {
            model: "surf3".into(),
            detector: DetectorConfig { seed: 4, max_evals: Some(80), ..Default::default() },
            n_test: 500,
            n_runs: 3,
            targets: vec![0.05, 0.2],
            ..Default::default()
        };
        let a = convergence_study(&spec).unwrap();
        let b = convergence_study(&ExperimentSpec { threads: 2, ..spec.clone() }).unwrap();
        assert_eq!(a.study_csv(), b.study_csv());
        assert_eq!(a.summary_csv(), b.summary_csv());
        assert_eq!(a.runs.len(), 3);
        assert_ne!(a.runs[0].seed, a.runs[1].seed);
        for r in &a.runs {
            assert!(r.final_row().evals <= 80);
            if let (Some(fine), Some(coarse)) = (r.evals_to_target[0], r.evals_to_target[1]) {
                assert!(coarse <= fine);
            }
        }
    }

    #[test]
    fn stats_match_hand_computation() {
        let s = Stat::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((s.stderr - s.std / 2.0).abs() < 1e-15);
        assert!(Stat::of(&[]).is_none());
        assert_eq!(binomial_stderr(0.5, 100), 0.05);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(ExperimentSpec { n_runs: 0, ..Default::default() }.validate().is_err());
        assert!(ExperimentSpec { targets: vec![1.5], ..Default::default() }.validate().is_err());
        let bad_region = ExperimentSpec { region: TestRegion::NearSurface(0.1), ..Default::default() };
        assert!(bad_region.test_points().is_err());
    }
}
