//! Divide-and-conquer initialization: midpoint refinement along coordinate
//! directions driven by PA jump estimates, boundary-parent insertion, edge
//! point collection, and value-based labeling near the edge points.
//!
//! The recursion of the textbook formulation is run on an explicit stack so
//! deep refinements in high dimension cannot overflow; the visiting order is
//! the same depth-first order.

use rand::Rng;

use crate::error::{Error, Result, Side};
use crate::geometry::{distance, midpoint, Domain, Label, LabeledPoint};
use crate::models::ModelAdapter;
use crate::pa::{jump_exists, JumpEstimate, SemiAxialSet, COORD_EPS, DEFAULT_ORDERS};
use crate::store::PointStore;

/// Neighbours closer than this along the refinement direction are not split.
pub const MIN_SPLIT_GAP: f64 = 1e-9;

/// Relative floor of the automatic jump threshold.
pub const JUMP_FRACTION: f64 = 0.1;
pub const JUMP_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct RefineConfig {
    /// Maximum number of edge points; `None` refines to completion.
    pub max_edges: Option<usize>,
    /// Edge tolerance δ.
    pub delta: f64,
    /// Off-axis tolerance.
    pub tol: f64,
    pub orders: Vec<usize>,
    /// Absolute jump threshold. `None` uses `0.1 ×` the value range seen so far.
    pub jump_threshold: Option<f64>,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig { max_edges: None, delta: 0.5, tol: 0.5, orders: DEFAULT_ORDERS.to_vec(), jump_threshold: None }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("delta and tol must be positive (got {}, {})", self.delta, self.tol)));
        }
        if self.max_edges == Some(0) {
            return Err(Error::InvalidConfig("max_edges must be at least 1".into()));
        }
        if self.orders.is_empty() || self.orders.contains(&0) {
            return Err(Error::InvalidConfig("PA orders must be a nonempty list of positive integers".into()));
        }
        if let Some(t) = self.jump_threshold {
            if !(t > 0.0) {
                return Err(Error::InvalidConfig(format!("jump threshold must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgePoint {
    pub location: Vec<f64>,
    /// Signed minmod jump estimate.
    pub jump: f64,
    pub direction: usize,
}

/// Evaluated points `M` with values, and edge points `E`.
#[derive(Debug, Clone)]
pub struct RefineState {
    pub domain: Domain,
    pub store: PointStore,
    pub edges: Vec<EdgePoint>,
    /// Store indices of the initial points, in input order.
    pub initial: Vec<usize>,
}

enum Frame {
    Refine { x: Vec<f64>, j: usize },
    Mid { x: Vec<f64>, y: Vec<f64>, estimate: Option<JumpEstimate> },
    Expand { y: Vec<f64>, l: usize },
}

impl RefineState {
    pub fn new(domain: Domain, tol: f64) -> Self {
        let d = domain.dim();
        RefineState { domain, store: PointStore::new(d, tol), edges: Vec::new(), initial: Vec::new() }
    }

    pub fn evaluations(&self) -> usize {
        self.store.len()
    }

    /// Evaluate `x` unless an identical point is already stored.
    pub fn ensure(&mut self, model: &ModelAdapter, x: Vec<f64>) -> Result<usize> {
        if let Some(i) = self.store.find(&x) {
            return Ok(i);
        }
        let v = model.evaluate(&x)?;
        Ok(self.store.insert(x, v))
    }

    fn threshold(&self, cfg: &RefineConfig) -> f64 {
        cfg.jump_threshold.unwrap_or_else(|| (JUMP_FRACTION * self.store.value_range()).max(JUMP_FLOOR))
    }

    fn neighbours<R: Rng + ?Sized>(&self, poi: &[f64], j: usize, tol: f64, rng: &mut R) -> SemiAxialSet {
        let idx = self.store.semi_axial(poi, j, tol);
        SemiAxialSet::collect(idx.iter().map(|i| (self.store.point(*i), self.store.value(*i))), poi, j, tol, rng)
    }

    fn edge_full(&self, cfg: &RefineConfig) -> bool {
        cfg.max_edges.is_some_and(|n| self.edges.len() >= n)
    }
}

/// Evaluate the two points equal to `x` with coordinate `k` moved to the
/// lower and upper domain faces, when not already present.
pub fn boundary_parents(state: &mut RefineState, model: &ModelAdapter, x: &[f64], k: usize) -> Result<()> {
    for bound in [state.domain.lower()[k], state.domain.upper()[k]] {
        let mut p = x.to_vec();
        p[k] = bound;
        state.ensure(model, p)?;
    }
    Ok(())
}

/// Refine around `x` along `j`. Returns `true` once the edge budget is hit.
pub fn refine_1d<R: Rng + ?Sized>(
    state: &mut RefineState,
    model: &ModelAdapter,
    x: &[f64],
    j: usize,
    cfg: &RefineConfig,
    rng: &mut R,
) -> Result<bool> {
    let d = state.domain.dim();
    let mut stack = vec![Frame::Refine { x: x.to_vec(), j }];
    while let Some(frame) = stack.pop() {
        match frame {
            Frame::Refine { x, j } => {
                let set = state.neighbours(&x, j, cfg.tol, rng);
                let mut mids = Vec::with_capacity(2);
                for side in [Side::Above, Side::Below] {
                    let Some((nn, _)) = set.nearest(side) else { continue };
                    if (nn[j] - x[j]).abs() < MIN_SPLIT_GAP {
                        continue;
                    }
                    let y = midpoint(&x, nn);
                    // both estimates are taken before either midpoint is acted on
                    let estimate = state.neighbours(&y, j, cfg.tol, rng).jump_estimate(&cfg.orders).ok();
                    mids.push(Frame::Mid { x: x.clone(), y, estimate });
                }
                stack.extend(mids.into_iter().rev());
            }
            Frame::Mid { x, y, estimate } => {
                let Some(est) = estimate else { continue };
                if !jump_exists(&est, state.threshold(cfg)) || state.store.contains(&y) {
                    continue;
                }
                if distance(&y, &x) <= cfg.delta + COORD_EPS {
                    let seen = state
                        .edges
                        .iter()
                        .any(|e| e.location.iter().zip(&y).all(|(a, b)| (a - b).abs() <= COORD_EPS));
                    if !seen {
                        state.edges.push(EdgePoint { location: y, jump: est.magnitude, direction: est.direction });
                        if state.edge_full(cfg) {
                            return Ok(true);
                        }
                    }
                } else {
                    state.ensure(model, y.clone())?;
                    stack.extend((0..d).rev().map(|l| Frame::Expand { y: y.clone(), l }));
                }
            }
            Frame::Expand { y, l } => {
                boundary_parents(state, model, &y, l)?;
                stack.push(Frame::Refine { x: y, j: l });
            }
        }
    }
    Ok(false)
}

/// Evaluate the initial points, then refine around each of them along every
/// coordinate until the edge budget is reached or nothing is left to split.
pub fn refinement_initialization<R: Rng + ?Sized>(
    model: &ModelAdapter,
    initial: &[Vec<f64>],
    cfg: &RefineConfig,
    rng: &mut R,
) -> Result<RefineState> {
    cfg.validate()?;
    if initial.is_empty() {
        return Err(Error::InvalidConfig("initial point set is empty".into()));
    }
    let mut state = RefineState::new(model.domain().clone(), cfg.tol);
    for x in initial {
        if !state.domain.contains(x) {
            return Err(Error::InvalidConfig(format!("initial point {x:?} lies outside the domain")));
        }
        let i = state.ensure(model, x.clone())?;
        if !state.initial.contains(&i) {
            state.initial.push(i);
        }
    }
    let roots: Vec<Vec<f64>> = state.initial.iter().map(|i| state.store.point(*i).to_vec()).collect();
    for x in &roots {
        for j in 0..state.domain.dim() {
            boundary_parents(&mut state, model, x, j)?;
            if refine_1d(&mut state, model, x, j, cfg, rng)? {
                return Ok(state);
            }
        }
    }
    Ok(state)
}

/// Outcome of value-based labeling near edge points.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialLabels {
    pub points: Vec<LabeledPoint>,
    /// Points inside several edge neighbourhoods that disagreed on the label.
    pub conflicts: usize,
    /// Edges skipped because their whole neighbourhood fell on one side.
    pub one_sided: usize,
}

/// Label evaluated points within `delta` of an edge point by comparing each
/// value with the neighbourhood maximum using the edge's jump size. A point
/// near several edge points takes the label of the nearest.
///
/// A neighbourhood whose labels would all come out class 1 does not straddle
/// the jump (the edge was flagged through off-axis stencil members) and is
/// skipped; labeling it would put both sides of the surface in one class.
pub fn label_initial(state: &RefineState, delta: f64) -> Result<InitialLabels> {
    let reach = delta + COORD_EPS;
    let n = state.store.len();
    // per point: (distance to nearest edge, its label, any disagreement)
    let mut best: Vec<Option<(f64, Label, bool)>> = vec![None; n];
    let mut one_sided = 0;
    for (e_idx, edge) in state.edges.iter().enumerate() {
        let members: Vec<(usize, f64)> = (0..n)
            .map(|i| (i, distance(state.store.point(i), &edge.location)))
            .filter(|(_, r)| *r <= reach)
            .collect();
        if members.len() < 2 {
            return Err(Error::EmptyNeighborhood { index: e_idx, count: members.len() });
        }
        let top = members.iter().map(|(i, _)| state.store.value(*i)).fold(f64::NEG_INFINITY, f64::max);
        let labeled: Vec<(usize, f64, Label)> = members
            .into_iter()
            .map(|(i, r)| {
                let label = if top - state.store.value(i) < edge.jump.abs() { Label::Positive } else { Label::Negative };
                (i, r, label)
            })
            .collect();
        if labeled.iter().all(|(.., l)| *l == Label::Positive) {
            one_sided += 1;
            continue;
        }
        for (i, r, label) in labeled {
            best[i] = Some(match best[i] {
                None => (r, label, false),
                Some((r0, l0, c0)) => {
                    let conflict = c0 || l0 != label;
                    if r < r0 {
                        (r, label, conflict)
                    } else {
                        (r0, l0, conflict)
                    }
                }
            });
        }
    }
    let mut points = Vec::new();
    let mut conflicts = 0;
    for (i, b) in best.into_iter().enumerate() {
        if let Some((_, label, conflict)) = b {
            conflicts += conflict as usize;
            points.push(LabeledPoint { x: state.store.point(i).to_vec(), value: state.store.value(i), label });
        }
    }
    Ok(InitialLabels { points, conflicts, one_sided })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{by_name, Model, ModelError};
    use crate::rng::seeded_rng;
    use std::sync::Arc;

    struct Poly;

    impl Model for Poly {
        fn name(&self) -> String {
            "poly".into()
        }
        fn domain(&self) -> &Domain {
            static D: std::sync::OnceLock<Domain> = std::sync::OnceLock::new();
            D.get_or_init(|| Domain::symmetric_unit(2))
        }
        fn evaluate(&self, x: &[f64]) -> std::result::Result<f64, ModelError> {
            Ok(0.5 * x[0] - 0.25 * x[1] + 1.0)
        }
    }

    fn cfg(delta: f64, max_edges: Option<usize>) -> RefineConfig {
        RefineConfig { max_edges, delta, tol: delta, ..Default::default() }
    }

    #[test]
    fn smooth_model_yields_no_edges() {
        let model = ModelAdapter::new(Arc::new(Poly));
        let s = refinement_initialization(&model, &[vec![0.0, 0.0]], &cfg(0.125, None), &mut seeded_rng(1)).unwrap();
        assert!(s.edges.is_empty());
        // origin plus its four boundary parents
        assert_eq!(s.evaluations(), 5);
        assert_eq!(model.evals(), 5);
    }

    #[test]
    fn boundary_parents_project_to_faces() {
        let b = by_name("surf1").unwrap();
        let mut s = RefineState::new(b.adapter.domain().clone(), 0.5);
        boundary_parents(&mut s, &b.adapter, &[0.2, 0.3], 0).unwrap();
        assert!(s.store.contains(&[-1.0, 0.3]) && s.store.contains(&[1.0, 0.3]));
        assert_eq!(b.adapter.evals(), 2);
        boundary_parents(&mut s, &b.adapter, &[0.2, 0.3], 0).unwrap();
        assert_eq!(b.adapter.evals(), 2);
        boundary_parents(&mut s, &b.adapter, &[1.0, 0.3], 0).unwrap();
        assert_eq!(b.adapter.evals(), 2);
        boundary_parents(&mut s, &b.adapter, &[1.0, 0.5], 1).unwrap();
        assert_eq!(b.adapter.evals(), 4);
    }

    #[test]
    fn single_edge_budget_stops_immediately() {
        let b = by_name("surf1").unwrap();
        let s = refinement_initialization(&b.adapter, &[vec![0.0, 0.0]], &cfg(0.125, Some(1)), &mut seeded_rng(3)).unwrap();
        assert_eq!(s.edges.len(), 1);
    }

    #[test]
    fn surface_one_edges_lie_near_curve() {
        let b = by_name("surf1").unwrap();
        let s = refinement_initialization(&b.adapter, &[vec![0.0, 0.0]], &cfg(0.125, None), &mut seeded_rng(5)).unwrap();
        assert!(!s.edges.is_empty());
        for e in &s.edges {
            let gap = (0..=2000)
                .map(|k| {
                    let t = -1.0 + k as f64 / 1000.0;
                    distance(&e.location, &[t, 0.3 + 0.4 * (std::f64::consts::PI * t).sin()])
                })
                .fold(f64::INFINITY, f64::min);
            // the straddling stencil spans at most 2δ along the direction, plus tol off-axis
            assert!(gap <= 3.0 * 0.125, "{e:?} is {gap} from the curve");
            assert!(e.jump.abs() > 0.0 && e.jump.abs() <= 2.0 + 1e-9, "{e:?}");
        }
        assert_eq!(b.adapter.evals(), s.evaluations());
    }

    #[test]
    fn every_edge_has_two_nearby_evaluations() {
        for name in ["surf1", "surf2", "surf3", "surf4", "cubic:3"] {
            let b = by_name(name).unwrap();
            let c = cfg(0.25, None);
            let s = refinement_initialization(&b.adapter, &[b.adapter.domain().center()], &c, &mut seeded_rng(9)).unwrap();
            for e in &s.edges {
                let near = s.store.iter().filter(|(p, _)| distance(p, &e.location) <= c.delta + 1e-12).count();
                assert!(near >= 2, "{name}: {e:?}");
            }
        }
    }

    #[test]
    fn never_evaluates_the_same_point_twice() {
        let b = by_name("surf3").unwrap();
        let s = refinement_initialization(&b.adapter, &[vec![0.0, 0.0], vec![0.0, 0.0], vec![0.5, -0.5]], &cfg(0.0625, None), &mut seeded_rng(2))
            .unwrap();
        assert_eq!(b.adapter.evals(), s.store.len());
        assert_eq!(s.initial.len(), 2);
    }

    #[test]
    fn labels_follow_jump_rule() {
        let domain = Domain::symmetric_unit(1);
        let mut s = RefineState::new(domain, 0.5);
        for (x, v) in [(-0.1, 10.1), (0.0, 9.9), (0.1, -10.0), (0.9, 50.0)] {
            s.store.insert(vec![x], v);
        }
        s.edges.push(EdgePoint { location: vec![0.05], jump: -20.0, direction: 0 });
        let out = label_initial(&s, 0.2).unwrap();
        let labels: Vec<i8> = out.points.iter().map(|p| p.label.as_i8()).collect();
        assert_eq!(labels, vec![1, 1, -1]);
        assert_eq!(out.conflicts, 0);
    }

    #[test]
    fn nearest_edge_wins_and_conflict_is_counted() {
        let mut s = RefineState::new(Domain::symmetric_unit(1), 0.5);
        for (x, v) in [(-0.3, 5.0), (0.0, 1.0), (0.3, 0.0)] {
            s.store.insert(vec![x], v);
        }
        // edge A sees {5, 1}: jump 3 → 1 is class 2; edge B sees {1, 0}: 1 is class 1
        s.edges.push(EdgePoint { location: vec![-0.2], jump: 3.0, direction: 0 });
        s.edges.push(EdgePoint { location: vec![0.1], jump: 1.0, direction: 0 });
        let out = label_initial(&s, 0.25).unwrap();
        let mid = out.points.iter().find(|p| p.x == vec![0.0]).unwrap();
        assert_eq!(mid.label, Label::Positive);
        assert_eq!(out.conflicts, 1);
    }

    #[test]
    fn one_sided_neighbourhood_is_skipped() {
        let mut s = RefineState::new(Domain::symmetric_unit(1), 0.5);
        for (x, v) in [(-0.7, 1.0), (-0.4, -1.0), (0.0, -1.0), (0.1, -1.0), (0.2, -1.0)] {
            s.store.insert(vec![x], v);
        }
        s.edges.push(EdgePoint { location: vec![-0.55], jump: 2.0, direction: 0 });
        // all -1 around 0.1: the max is -1 and every member would be class 1
        s.edges.push(EdgePoint { location: vec![0.1], jump: 2.0, direction: 0 });
        let out = label_initial(&s, 0.2).unwrap();
        assert_eq!(out.one_sided, 1);
        let labels: Vec<(f64, i8)> = out.points.iter().map(|p| (p.x[0], p.label.as_i8())).collect();
        assert_eq!(labels, vec![(-0.7, 1), (-0.4, -1)]);
    }

    #[test]
    fn lonely_edge_is_an_error() {
        let mut s = RefineState::new(Domain::symmetric_unit(1), 0.5);
        s.store.insert(vec![0.0], 1.0);
        s.edges.push(EdgePoint { location: vec![0.1], jump: 1.0, direction: 0 });
        assert!(matches!(label_initial(&s, 0.2), Err(Error::EmptyNeighborhood { index: 0, count: 1 })));
    }

    #[test]
    fn initial_labels_match_truth_on_surfaces() {
        for name in ["surf1", "surf2", "surf3", "surf4"] {
            for (delta, seed) in [(0.5, 1), (0.25, 2), (0.125, 3)] {
                let b = by_name(name).unwrap();
                let mut rng = seeded_rng(seed);
                let m0: Vec<Vec<f64>> = std::iter::once(vec![0.0, 0.0])
                    .chain((0..3).map(|_| b.adapter.domain().sample_uniform(&mut rng)))
                    .collect();
                let s = refinement_initialization(&b.adapter, &m0, &cfg(delta, None), &mut rng).unwrap();
                let out = label_initial(&s, delta).unwrap();
                assert!(!out.points.is_empty());
                for p in &out.points {
                    assert_eq!(p.label, b.truth.side(&p.x), "{name} δ={delta} at {:?}", p.x);
                }
            }
        }
    }

    #[test]
    fn uniform_starts_label_surface_four_correctly() {
        let b = by_name("surf4").unwrap();
        for seed in 0..300 {
            let mut rng = seeded_rng(seed);
            let m0: Vec<Vec<f64>> = (0..10).map(|_| b.adapter.domain().sample_uniform(&mut rng)).collect();
            let s = refinement_initialization(&b.adapter, &m0, &cfg(0.5, None), &mut rng).unwrap();
            for p in label_initial(&s, 0.5).unwrap().points {
                assert_eq!(p.label, b.truth.side(&p.x), "seed {seed} at {:?}", p.x);
            }
        }
    }
}
