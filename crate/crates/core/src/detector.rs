//! Top-level driver: PA initialization and labeling, SVM training, then
//! rounds of uncertainty sampling and retraining until no new point can be
//! placed or a budget runs out.

use std::fmt::Write as _;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::geometry::{Label, LabeledPoint};
use crate::models::ModelAdapter;
use crate::pa::DEFAULT_ORDERS;
use crate::refine::{label_initial, refinement_initialization, EdgePoint, RefineConfig};
use crate::rng::{derive_seed, seeded_rng};
use crate::sampler::{find_points_on_boundary, label_us_point, DescentSettings, SamplerConfig};
use crate::store::PointStore;
use crate::svm::{
    cross_validate, default_grid, median_pairwise_distance, train, train_from, CV_MAX_ITER, Classifier, SmoParams, TrainingSet,
};

const STREAM_INIT: u64 = 1;
const STREAM_CV: u64 = 2;
const STREAM_SAMPLER: u64 = 3;
const STREAM_REFINE: u64 = 4;


#[derive(Debug, Clone, PartialEq)]
pub enum InitialPoints {
    /// Centre of the domain box.
    Center,
    /// The coordinate origin (must lie in the domain).
    Origin,
    /// `n` uniform draws from the domain.
    Uniform(usize),
    Points(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmSettings {
    /// Bandwidth grid; `None` scales powers of two by the median distance.
    pub sigmas: Option<Vec<f64>>,
    /// Box-constraint grid; `None` uses `10^-1 .. 10^4`.
    pub cs: Option<Vec<f64>>,
    pub folds: usize,
    /// Cross-validate on the first training and then every this many rounds.
    pub cv_every: usize,
    pub kkt_tol: f64,
    /// SMO iteration cap for cross-validation fits.
    pub cv_max_iter: usize,
}

impl Default for SvmSettings {
    fn default() -> Self {
        SvmSettings { sigmas: None, cs: None, folds: 5, cv_every: 5, kkt_tol: 1e-3, cv_max_iter: CV_MAX_ITER }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub initial: InitialPoints,
    /// `N_E`; `None` runs the initialization to completion.
    pub max_edges: Option<usize>,
    pub delta: f64,
    pub tol: f64,
    pub delta_t: f64,
    pub epsilon: f64,
    pub n_add: usize,
    pub itermax: usize,
    /// Wall-clock budget `T` in seconds; `None` is unlimited.
    pub time_budget: Option<f64>,
    /// Stop before a round would exceed this many model evaluations.
    pub max_evals: Option<usize>,
    pub seed: u64,
    pub svm: SvmSettings,
    pub jump_threshold: Option<f64>,
    pub orders: Vec<usize>,
    pub descent: DescentSettings,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            initial: InitialPoints::Center,
            max_edges: None,
            delta: 0.5,
            tol: 0.5,
            delta_t: 2.0,
            epsilon: 0.01,
            n_add: 10,
            itermax: 1000,
            time_budget: None,
            max_evals: None,
            seed: 0,
            svm: SvmSettings::default(),
            jump_threshold: None,
            orders: DEFAULT_ORDERS.to_vec(),
            descent: DescentSettings::default(),
        }
    }
}

impl DetectorConfig {
    pub fn refine_config(&self) -> RefineConfig {
        RefineConfig {
            max_edges: self.max_edges,
            delta: self.delta,
            tol: self.tol,
            orders: self.orders.clone(),
            jump_threshold: self.jump_threshold,
        }
    }

    pub fn sampler_config(&self) -> SamplerConfig {
        SamplerConfig {
            n_add: self.n_add,
            delta_t: self.delta_t,
            epsilon: self.epsilon,
            itermax: self.itermax,
            descent: self.descent.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.refine_config().validate()?;
        self.sampler_config().validate()?;
        if self.svm.folds < 2 || self.svm.cv_every == 0 || self.svm.cv_max_iter == 0 || !(self.svm.kkt_tol > 0.0) {
            return Err(Error::InvalidConfig("svm folds must be >= 2, cv_every >= 1, kkt_tol > 0".into()));
        }
        for grid in [&self.svm.sigmas, &self.svm.cs].into_iter().flatten() {
            if grid.is_empty() || grid.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::InvalidConfig("SVM grids must be nonempty lists of positive numbers".into()));
            }
        }
        if let Some(t) = self.time_budget {
            if !(t >= 0.0) {
                return Err(Error::InvalidConfig(format!("time budget must be >= 0, got {t}")));
            }
        }
        if matches!(self.initial, InitialPoints::Uniform(0)) {
            return Err(Error::InvalidConfig("uniform initial set needs at least one point".into()));
        }
        Ok(())
    }
}

/// Optional scoring against ground truth, called after every training.
pub struct Monitor<'a> {
    pub score: &'a dyn Fn(&Classifier) -> f64,
    /// Stop once the score is at or below this.
    pub target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub iter: usize,
    /// Cumulative model evaluations.
    pub evals: usize,
    pub labeled: usize,
    pub misclass: Option<f64>,
    pub sigma: f64,
    pub c: f64,
    /// Whether this training ran cross-validation.
    pub cross_validated: bool,
    pub ties: usize,
    pub conflicts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// No candidate passed the spacing and proximity tests.
    Exhausted,
    TimeBudget,
    EvalBudget,
    Target,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<RunRecord>,
    pub init_evals: usize,
    pub edges: Vec<EdgePoint>,
    pub stop: StopReason,
}

impl RunTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,evals,labeled,misclass,sigma,C\n");
        for r in &self.records {
            let m = r.misclass.map(|v| format!("{v}")).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{},{}", r.iter, r.evals, r.labeled, m, r.sigma, r.c);
        }
        out
    }

    pub fn last(&self) -> &RunRecord {
        self.records.last().expect("a trace holds at least the initial record")
    }
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub classifier: Classifier,
    pub trace: RunTrace,
    pub labeled: Vec<LabeledPoint>,
}

impl Detection {
    /// One row `x1,...,xd,f,label` per labeled point.
    pub fn points_csv(&self) -> String {
        let d = self.labeled.first().map_or(0, |p| p.x.len());
        let mut out = (1..=d).map(|i| format!("x{i}")).chain(["f".into(), "label".into()]).collect::<Vec<_>>().join(",");
        out.push('\n');
        for p in &self.labeled {
            let row: Vec<String> = p.x.iter().chain(std::iter::once(&p.value)).map(|v| format!("{v}")).collect();
            let _ = writeln!(out, "{},{}", row.join(","), p.label.as_i8());
        }
        out
    }
}

fn initial_points(model: &ModelAdapter, spec: &InitialPoints, seed: u64) -> Result<Vec<Vec<f64>>> {
    let domain = model.domain();
    Ok(match spec {
        InitialPoints::Center => vec![domain.center()],
        InitialPoints::Origin => {
            let o = vec![0.0; domain.dim()];
            if !domain.contains(&o) {
                return Err(Error::InvalidConfig("the origin lies outside the model domain".into()));
            }
            vec![o]
        }
        InitialPoints::Uniform(n) => {
            let mut rng = seeded_rng(derive_seed(seed, STREAM_INIT));
            (0..*n).map(|_| domain.sample_uniform(&mut rng)).collect()
        }
        InitialPoints::Points(p) => p.clone(),
    })
}

struct Trainer<'a> {
    cfg: &'a SvmSettings,
    rng: crate::rng::RunRng,
    sigma: f64,
    c: f64,
    prev: Option<(f64, f64)>,
    alpha: Option<Vec<f64>>,
}

impl Trainer<'_> {
    /// Retrain on `labeled`; cross-validate first when `cv` is set and both
    /// classes have at least two members.
    fn fit(&mut self, labeled: &[LabeledPoint], cv: bool) -> Result<(Classifier, bool)> {
        let set = TrainingSet::from_labeled(labeled)?;
        let smallest = set.count(Label::Positive).min(set.count(Label::Negative));
        let mut ran_cv = false;
        if cv || self.sigma == 0.0 {
            if smallest >= 2 {
                let (ds, dc) = default_grid(set.points());
                let sigmas = self.cfg.sigmas.clone().unwrap_or(ds);
                let cs = self.cfg.cs.clone().unwrap_or(dc);
                let folds = self.cfg.folds.min(set.len());
                let choice = cross_validate(&set, &sigmas, &cs, folds, self.cfg.kkt_tol, self.cfg.cv_max_iter, &mut self.rng)?;
                self.sigma = choice.sigma;
                self.c = choice.c;
                ran_cv = true;
            } else if self.sigma == 0.0 {
                self.sigma = median_pairwise_distance(set.points());
                let cs = self.cfg.cs.clone().unwrap_or_else(|| default_grid(set.points()).1);
                self.c = separating_c(&set, self.sigma, &cs, self.cfg.kkt_tol)?;
            }
        }
        let params = SmoParams { kkt_tol: self.cfg.kkt_tol, ..SmoParams::new(self.sigma, self.c) };
        // the labeled set only grows, so the previous solution padded with
        // zeros stays feasible while sigma and C are unchanged
        let warm = self.alpha.take().filter(|_| self.prev == Some((self.sigma, self.c))).map(|mut a| {
            a.resize(set.len(), 0.0);
            a
        });
        let (clf, alpha) = train_from(&set, &params, warm.as_deref())?;
        self.alpha = Some(alpha);
        self.prev = Some((self.sigma, self.c));
        Ok((clf, ran_cv))
    }
}

/// Smallest `C` in `cs` whose fit reproduces every training label, else the
/// largest. Stands in for cross-validation while a class has one member.
fn separating_c(set: &TrainingSet, sigma: f64, cs: &[f64], kkt_tol: f64) -> Result<f64> {
    let mut sorted = cs.to_vec();
    sorted.sort_by(f64::total_cmp);
    for c in &sorted {
        let clf = train(set, &SmoParams { kkt_tol, ..SmoParams::new(sigma, *c) })?;
        if set.points().iter().zip(set.labels()).all(|(x, l)| clf.classify(x) == *l) {
            return Ok(*c);
        }
    }
    Ok(*sorted.last().expect("validated grids are nonempty"))
}

/// Run the full detection loop on `model`.
pub fn detect(model: &ModelAdapter, cfg: &DetectorConfig, monitor: Option<&Monitor<'_>>) -> Result<Detection> {
    cfg.validate()?;
    let started = Instant::now();
    let base_evals = model.evals();
    let evals = || model.evals() - base_evals;

    let m0 = initial_points(model, &cfg.initial, cfg.seed)?;
    let mut init_rng = seeded_rng(derive_seed(cfg.seed, STREAM_REFINE));
    let state = refinement_initialization(model, &m0, &cfg.refine_config(), &mut init_rng)?;
    if state.edges.is_empty() {
        return Err(Error::InitFailure(format!(
            "no edge points found after {} evaluations; try more initial points or a smaller delta",
            state.evaluations()
        )));
    }
    let init = label_initial(&state, cfg.delta)?;
    let mut labeled = init.points;
    let positives = labeled.iter().filter(|p| p.label == Label::Positive).count();
    if positives == 0 || positives == labeled.len() {
        return Err(Error::InitFailure(format!(
            "initial labeling produced a single class ({} points near {} edge points); try a larger N_E",
            labeled.len(),
            state.edges.len()
        )));
    }
    let mut store: PointStore = state.store.clone();
    let init_evals = evals();

    let mut trainer = Trainer { cfg: &cfg.svm, rng: seeded_rng(derive_seed(cfg.seed, STREAM_CV)), sigma: 0.0, c: 0.0, prev: None, alpha: None };
    let mut sampler_rng = seeded_rng(derive_seed(cfg.seed, STREAM_SAMPLER));
    let sampler = cfg.sampler_config();
    let mut ties = 0;

    let (mut clf, mut ran_cv) = trainer.fit(&labeled, true)?;
    let mut records = Vec::new();
    let mut iter = 0;
    let stop = loop {
        let misclass = monitor.map(|m| (m.score)(&clf));
        records.push(RunRecord {
            iter,
            evals: evals(),
            labeled: labeled.len(),
            misclass,
            sigma: clf.sigma,
            c: clf.c,
            cross_validated: ran_cv,
            ties,
            conflicts: init.conflicts,
        });
        if let (Some(m), Some(target)) = (misclass, monitor.and_then(|m| m.target)) {
            if m <= target {
                break StopReason::Target;
            }
        }
        if cfg.time_budget.is_some_and(|t| started.elapsed().as_secs_f64() >= t) {
            break StopReason::TimeBudget;
        }
        let room = cfg.max_evals.map(|m| m.saturating_sub(evals()));
        if room == Some(0) {
            break StopReason::EvalBudget;
        }
        let mut batch = find_points_on_boundary(&clf, &labeled, model.domain(), &sampler, &mut sampler_rng).points;
        if batch.is_empty() {
            break StopReason::Exhausted;
        }
        if let Some(r) = room {
            batch.truncate(r);
        }
        let mut added = Vec::with_capacity(batch.len());
        for x in batch {
            let fx = match store.find(&x) {
                Some(i) => store.value(i),
                None => {
                    let v = model.evaluate(&x)?;
                    store.insert(x.clone(), v);
                    v
                }
            };
            // labels use the set as it stood before this batch
            let (label, tie) = label_us_point(&labeled, &x, fx, cfg.delta_t)?;
            ties += tie as usize;
            added.push(LabeledPoint { x, value: fx, label });
        }
        labeled.extend(added);
        iter += 1;
        (clf, ran_cv) = trainer.fit(&labeled, iter % cfg.svm.cv_every == 0)?;
    };

    Ok(Detection {
        classifier: clf,
        trace: RunTrace { records, init_evals, edges: state.edges, stop },
        labeled,
    })
}
