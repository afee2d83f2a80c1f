//! One-dimensional polynomial annihilation along a coordinate direction.
//!
//! For a point of interest (POI) and a direction `j`, the jump of `f` across
//! the POI is approximated by
//!
//! ```text
//! L_m f = (1 / q_m) * sum_l c_l f(x^l),   c_l = m! / prod_{i != l} (x^l_j - x^i_j)
//! ```
//!
//! over a stencil of `m + 1` evaluated points whose other coordinates lie
//! within an off-axis tolerance of the POI. `q_m` sums the coefficients of the
//! members above the POI. Several orders are combined with minmod.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result, Side};
use crate::geometry::squared_distance;

/// Coordinates closer than this along the PA direction are treated as equal.
pub const COORD_EPS: f64 = 1e-12;

/// Orders combined by minmod unless configured otherwise.
pub const DEFAULT_ORDERS: [usize; 5] = [1, 2, 3, 4, 5];

#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub poi: Vec<f64>,
    pub direction: usize,
    /// `(point, value)` sorted by the `direction` coordinate.
    pub members: Vec<(Vec<f64>, f64)>,
    pub order: usize,
}

impl Stencil {
    pub fn coords(&self) -> Vec<f64> {
        self.members.iter().map(|(p, _)| p[self.direction]).collect()
    }

    /// Largest gap between neighbouring stencil coordinates.
    pub fn h(&self) -> f64 {
        self.coords().windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Single-order jump approximation `L_m`.
    pub fn apply(&self) -> Result<f64> {
        let coords = self.coords();
        let (c, q) = pa_coefficients(&coords, self.poi[self.direction], self.order)?;
        let sum: f64 = c.iter().zip(&self.members).map(|(cl, (_, v))| cl * v).sum();
        Ok(sum / q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpEstimate {
    pub location: Vec<f64>,
    pub direction: usize,
    /// Minmod combination of `per_order`.
    pub magnitude: f64,
    pub per_order: BTreeMap<usize, f64>,
    /// Largest neighbour gap of the widest stencil used.
    pub h: f64,
}

/// PA coefficients `c_l` and normalization `q_m` for stencil coordinates
/// `coords` (any order) around `poi`.
pub fn pa_coefficients(coords: &[f64], poi: f64, order: usize) -> Result<(Vec<f64>, f64)> {
    if order == 0 || coords.len() != order + 1 {
        return Err(Error::DegenerateStencil(format!(
            "order {order} needs {} nodes, got {}",
            order + 1,
            coords.len()
        )));
    }
    let lo = coords.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = coords.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(poi > lo && poi < hi) {
        return Err(Error::DegenerateStencil(format!(
            "poi {poi} not strictly inside [{lo}, {hi}]"
        )));
    }
    let factorial: f64 = (1..=order).map(|k| k as f64).product();
    let mut c = Vec::with_capacity(coords.len());
    for (l, xl) in coords.iter().enumerate() {
        let mut denom = 1.0;
        for (i, xi) in coords.iter().enumerate() {
            if i != l {
                let diff = xl - xi;
                if diff.abs() <= COORD_EPS {
                    return Err(Error::DegenerateStencil(format!("repeated node {xl}")));
                }
                denom *= diff;
            }
        }
        c.push(factorial / denom);
    }
    let q: f64 = coords.iter().zip(&c).filter(|(x, _)| **x > poi).map(|(_, cl)| cl).sum();
    if q == 0.0 || !q.is_finite() {
        return Err(Error::DegenerateStencil(format!("normalization q = {q}")));
    }
    Ok((c, q))
}

/// Zero if the values disagree in sign (or any is zero), otherwise the value
/// of smallest magnitude.
pub fn minmod(values: &[f64]) -> f64 {
    let Some(&first) = values.first() else {
        return 0.0;
    };
    if values.iter().all(|v| *v > 0.0) || values.iter().all(|v| *v < 0.0) {
        values.iter().skip(1).fold(first, |acc, v| if v.abs() < acc.abs() { *v } else { acc })
    } else {
        0.0
    }
}

/// Combine single-order stencils into a minmod jump estimate.
pub fn jump_estimate(stencils: &[Stencil]) -> Result<JumpEstimate> {
    let first = stencils
        .first()
        .ok_or_else(|| Error::DegenerateStencil("no orders available".into()))?;
    let mut per_order = BTreeMap::new();
    let mut h = 0.0;
    let mut widest = 0;
    for s in stencils {
        per_order.insert(s.order, s.apply()?);
        if s.members.len() > widest {
            widest = s.members.len();
            h = s.h();
        }
    }
    let values: Vec<f64> = per_order.values().cloned().collect();
    Ok(JumpEstimate {
        location: first.poi.clone(),
        direction: first.direction,
        magnitude: minmod(&values),
        per_order,
        h,
    })
}

pub fn jump_exists(estimate: &JumpEstimate, threshold: f64) -> bool {
    estimate.magnitude.abs() > threshold
}

#[derive(Debug, Clone)]
struct Member {
    point: Vec<f64>,
    value: f64,
    gap: f64,
    dist2: f64,
    key: u64,
}

impl Member {
    fn rank(&self, other: &Member) -> Ordering {
        self.gap
            .total_cmp(&other.gap)
            .then(self.dist2.total_cmp(&other.dist2))
            .then(self.key.cmp(&other.key))
    }
}

/// Semi-axial neighbours of a POI along one direction, ranked nearest-first
/// on each side with duplicates in the direction coordinate removed.
///
/// Ranking is by distance along the direction, then full Euclidean distance,
/// then a random key drawn from the caller's generator.
#[derive(Debug, Clone)]
pub struct SemiAxialSet {
    poi: Vec<f64>,
    direction: usize,
    below: Vec<Member>,
    above: Vec<Member>,
}

/// True if `p` is within `tol` of `poi` in every coordinate except `direction`.
pub fn is_semi_axial(p: &[f64], poi: &[f64], direction: usize, tol: f64) -> bool {
    p.iter()
        .zip(poi)
        .enumerate()
        .all(|(i, (a, b))| i == direction || (a - b).abs() <= tol + COORD_EPS)
}

impl SemiAxialSet {
    /// Collect semi-axial points from `candidates`. Points at the POI's own
    /// coordinate along `direction` are skipped.
    pub fn collect<'a, I, R>(candidates: I, poi: &[f64], direction: usize, tol: f64, rng: &mut R) -> Self
    where
        I: IntoIterator<Item = (&'a [f64], f64)>,
        R: Rng + ?Sized,
    {
        let center = poi[direction];
        let mut below = Vec::new();
        let mut above = Vec::new();
        for (p, value) in candidates {
            if !is_semi_axial(p, poi, direction, tol) {
                continue;
            }
            let delta = p[direction] - center;
            if delta.abs() <= COORD_EPS {
                continue;
            }
            let m = Member {
                point: p.to_vec(),
                value,
                gap: delta.abs(),
                dist2: squared_distance(p, poi),
                key: rng.gen(),
            };
            if delta < 0.0 {
                below.push(m);
            } else {
                above.push(m);
            }
        }
        for side in [&mut below, &mut above] {
            side.sort_by(Member::rank);
            // Equal direction coordinates are adjacent after sorting; keep the best-ranked.
            side.dedup_by(|later, kept| (later.point[direction] - kept.point[direction]).abs() <= COORD_EPS);
        }
        SemiAxialSet { poi: poi.to_vec(), direction, below, above }
    }

    pub fn poi(&self) -> &[f64] {
        &self.poi
    }

    pub fn direction(&self) -> usize {
        self.direction
    }

    /// Distinct direction coordinates available.
    pub fn len(&self) -> usize {
        self.below.len() + self.above.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nearest(&self, side: Side) -> Option<(&[f64], f64)> {
        let list = match side {
            Side::Below => &self.below,
            Side::Above => &self.above,
        };
        list.first().map(|m| (m.point.as_slice(), m.value))
    }

    /// Highest order for which a two-sided stencil exists.
    pub fn max_order(&self) -> usize {
        if self.below.is_empty() || self.above.is_empty() {
            0
        } else {
            self.len() - 1
        }
    }

    /// The `order + 1` nearest members, at least one per side.
    pub fn stencil(&self, order: usize) -> Result<Stencil> {
        if self.below.is_empty() {
            return Err(Error::InsufficientStencil { direction: self.direction, side: Side::Below });
        }
        if self.above.is_empty() {
            return Err(Error::InsufficientStencil { direction: self.direction, side: Side::Above });
        }
        if order == 0 || order > self.max_order() {
            return Err(Error::DegenerateStencil(format!(
                "order {order} needs {} distinct nodes, {} available",
                order + 1,
                self.len()
            )));
        }
        let (mut nb, mut na) = (1, 1);
        while nb + na < order + 1 {
            let take_below = match (self.below.get(nb), self.above.get(na)) {
                (Some(b), Some(a)) => b.rank(a) != Ordering::Greater,
                (Some(_), None) => true,
                _ => false,
            };
            if take_below {
                nb += 1;
            } else {
                na += 1;
            }
        }
        let mut members: Vec<(Vec<f64>, f64)> = self.below[..nb]
            .iter()
            .chain(&self.above[..na])
            .map(|m| (m.point.clone(), m.value))
            .collect();
        let j = self.direction;
        members.sort_by(|a, b| a.0[j].total_cmp(&b.0[j]));
        Ok(Stencil { poi: self.poi.clone(), direction: j, members, order })
    }

    /// Minmod jump estimate over `orders`, dropping orders without a stencil.
    pub fn jump_estimate(&self, orders: &[usize]) -> Result<JumpEstimate> {
        if self.below.is_empty() || self.above.is_empty() {
            // Reports the missing side.
            self.stencil(1)?;
        }
        let max = self.max_order();
        let stencils = orders
            .iter()
            .filter(|m| **m >= 1 && **m <= max)
            .map(|m| self.stencil(*m))
            .collect::<Result<Vec<_>>>()?;
        jump_estimate(&stencils)
    }
}

/// Select the order-`m` stencil around `poi` along `direction` from
/// `evaluated` points.
pub fn select_stencil<R: Rng + ?Sized>(
    evaluated: &[(Vec<f64>, f64)],
    poi: &[f64],
    direction: usize,
    tol: f64,
    order: usize,
    rng: &mut R,
) -> Result<Stencil> {
    SemiAxialSet::collect(evaluated.iter().map(|(p, v)| (p.as_slice(), *v)), poi, direction, tol, rng)
        .stencil(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn coefficients_first_order() {
        let (c, q) = pa_coefficients(&[0.0, 1.0], 0.5, 1).unwrap();
        assert_eq!(c, vec![-1.0, 1.0]);
        assert_eq!(q, 1.0);
    }

    #[test]
    fn coefficients_second_order_symmetric() {
        let (c, q) = pa_coefficients(&[-1.0, 0.0, 1.0], 0.5, 2).unwrap();
        assert_eq!(c, vec![1.0, -2.0, 1.0]);
        assert_eq!(q, 1.0);
        // p(x) = x is annihilated.
        let s: f64 = c.iter().zip([-1.0, 0.0, 1.0]).map(|(cl, x)| cl * x).sum();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn degenerate_stencils_rejected() {
        assert!(matches!(pa_coefficients(&[0.0, 0.0, 1.0], 0.5, 2), Err(Error::DegenerateStencil(_))));
        assert!(matches!(pa_coefficients(&[0.0, 1.0], 1.5, 1), Err(Error::DegenerateStencil(_))));
        assert!(matches!(pa_coefficients(&[0.0, 1.0], 0.0, 1), Err(Error::DegenerateStencil(_))));
        assert!(matches!(pa_coefficients(&[0.0, 1.0, 2.0], 0.5, 1), Err(Error::DegenerateStencil(_))));
    }

    #[test]
    fn step_recovered_exactly_on_three_nodes() {
        let s = Stencil {
            poi: vec![0.3],
            direction: 0,
            members: vec![(vec![-1.0], 0.0), (vec![0.0], 0.0), (vec![1.0], 1.0)],
            order: 2,
        };
        assert_eq!(s.apply().unwrap(), 1.0);
    }

    #[test]
    fn constants_annihilated() {
        let s = Stencil {
            poi: vec![0.3],
            direction: 0,
            members: vec![(vec![-1.0], 4.2), (vec![0.0], 4.2), (vec![1.0], 4.2)],
            order: 2,
        };
        assert_eq!(s.apply().unwrap(), 0.0);
    }

    #[test]
    fn minmod_rules() {
        assert_eq!(minmod(&[0.9, -0.1]), 0.0);
        assert_eq!(minmod(&[0.9, 0.3, 0.5]), 0.3);
        assert_eq!(minmod(&[-0.9, -0.3]), -0.3);
        assert_eq!(minmod(&[0.9, 0.0]), 0.0);
        assert_eq!(minmod(&[]), 0.0);
    }

    #[test]
    fn jump_exists_is_strict() {
        let mk = |m: f64| JumpEstimate {
            location: vec![0.0],
            direction: 0,
            magnitude: m,
            per_order: BTreeMap::new(),
            h: 1.0,
        };
        assert!(jump_exists(&mk(1.0), 0.2));
        assert!(!jump_exists(&mk(0.0), 1e-12));
        assert!(!jump_exists(&mk(0.19), 0.2));
        assert!(jump_exists(&mk(-0.5), 0.2));
    }

    #[test]
    fn equidistant_candidates_prefer_smaller_euclidean_distance() {
        let pts = vec![
            (vec![-1.0, 0.0], 0.0),
            (vec![1.5, 0.3], 1.0),
            (vec![1.5, 0.1], 2.0),
        ];
        let mut rng = seeded_rng(0);
        let s = select_stencil(&pts, &[0.0, 0.0], 0, 0.5, 1, &mut rng).unwrap();
        assert_eq!(s.members, vec![(vec![-1.0, 0.0], 0.0), (vec![1.5, 0.1], 2.0)]);
    }

    #[test]
    fn one_dimensional_has_no_off_axis_filter() {
        let pts = vec![(vec![-1.0], 0.0), (vec![0.5], 1.0)];
        let s = select_stencil(&pts, &[0.0], 0, 1e-6, 1, &mut seeded_rng(1)).unwrap();
        assert_eq!(s.members.len(), 2);
    }

    #[test]
    fn exact_ties_broken_reproducibly() {
        let pts = vec![
            (vec![-1.0, 0.0], 0.0),
            (vec![1.0, 0.2], 1.0),
            (vec![1.0, -0.2], 2.0),
        ];
        let pick = |seed| select_stencil(&pts, &[0.0, 0.0], 0, 0.5, 1, &mut seeded_rng(seed)).unwrap().members[1].1;
        let mut seen = std::collections::HashSet::new();
        for seed in 0..64 {
            let v = pick(seed);
            assert_eq!(v, pick(seed));
            seen.insert(v as i64);
        }
        assert_eq!(seen.len(), 2, "both tied candidates should be reachable");
    }

    #[test]
    fn off_axis_points_outside_tolerance_ignored() {
        let pts = vec![(vec![-1.0, 0.0], 0.0), (vec![1.0, 0.6], 1.0)];
        let err = select_stencil(&pts, &[0.0, 0.0], 0, 0.5, 1, &mut seeded_rng(0)).unwrap_err();
        assert!(matches!(err, Error::InsufficientStencil { side: Side::Above, .. }));
    }

    #[test]
    fn higher_orders_truncated_to_available_nodes() {
        let pts: Vec<(Vec<f64>, f64)> = vec![(vec![-1.0], 0.0), (vec![0.0], 0.0), (vec![1.0], 1.0)];
        let set = SemiAxialSet::collect(pts.iter().map(|(p, v)| (p.as_slice(), *v)), &[0.5], 0, 0.1, &mut seeded_rng(0));
        let est = set.jump_estimate(&DEFAULT_ORDERS).unwrap();
        assert_eq!(est.per_order.keys().cloned().collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(est.h, 1.0);
        assert!(close(est.magnitude, 1.0, 1e-15));
    }

    fn stencil_nodes() -> impl Strategy<Value = (Vec<f64>, f64)> {
        // m + 1 distinct sorted nodes with a poi strictly inside.
        (2usize..=6)
            .prop_flat_map(|n| (prop::collection::vec(0.05f64..1.0, n), -3.0f64..3.0, 0.01f64..0.99))
            .prop_map(|(gaps, start, frac)| {
                let mut x = start;
                let mut nodes = vec![x];
                for g in &gaps[1..] {
                    x += g;
                    nodes.push(x);
                }
                let poi = nodes[0] + frac * (nodes[nodes.len() - 1] - nodes[0]);
                (nodes, poi)
            })
    }

    proptest! {
        #[test]
        fn annihilates_low_degree_polynomials((nodes, poi) in stencil_nodes(), coeffs in prop::collection::vec(-5.0f64..5.0, 6)) {
            let m = nodes.len() - 1;
            let (c, _q) = pa_coefficients(&nodes, poi, m).unwrap();
            let scale: f64 = c.iter().map(|v| v.abs()).sum::<f64>();
            for degree in 0..m {
                let p = |x: f64| (0..=degree).map(|k| coeffs[k] * x.powi(k as i32)).sum::<f64>();
                let s: f64 = c.iter().zip(&nodes).map(|(cl, x)| cl * p(*x)).sum();
                let pmax = nodes.iter().map(|x| p(*x).abs()).fold(1.0, f64::max);
                prop_assert!(s.abs() <= 1e-10 * scale * pmax, "degree {} sum {}", degree, s);
            }
        }

        #[test]
        fn recovers_mth_derivative_of_monomial((nodes, poi) in stencil_nodes()) {
            let m = nodes.len() - 1;
            let (c, _q) = pa_coefficients(&nodes, poi, m).unwrap();
            let factorial: f64 = (1..=m).map(|k| k as f64).product();
            let s: f64 = c.iter().zip(&nodes).map(|(cl, x)| cl * x.powi(m as i32)).sum();
            let scale: f64 = c.iter().zip(&nodes).map(|(cl, x)| (cl * x.powi(m as i32)).abs()).sum();
            prop_assert!((s - factorial).abs() <= 1e-9 * scale.max(1.0));
        }

        #[test]
        fn coefficients_scale_as_inverse_power((nodes, poi) in stencil_nodes(), factor in 0.1f64..4.0) {
            let m = nodes.len() - 1;
            let (c1, q1) = pa_coefficients(&nodes, poi, m).unwrap();
            let scaled: Vec<f64> = nodes.iter().map(|x| x * factor).collect();
            let (c2, q2) = pa_coefficients(&scaled, poi * factor, m).unwrap();
            let s = factor.powi(-(m as i32));
            for (a, b) in c1.iter().zip(&c2) {
                prop_assert!((b - a * s).abs() <= 1e-9 * (a * s).abs());
            }
            prop_assert!((q2 - q1 * s).abs() <= 1e-9 * (q1 * s).abs());
        }

        #[test]
        fn off_axis_error_bounded_for_linear_functions(
            (nodes, poi_j) in stencil_nodes(),
            d in 2usize..6,
            tol in 0.01f64..0.5,
            slopes in prop::collection::vec(-3.0f64..3.0, 6),
            offsets in prop::collection::vec(-1.0f64..1.0, 36),
            base in prop::collection::vec(-1.0f64..1.0, 6),
        ) {
            let j = 0;
            let m = nodes.len() - 1;
            let f = |x: &[f64]| x.iter().zip(&slopes).map(|(xi, a)| xi * a).sum::<f64>();
            let mut poi = base[..d].to_vec();
            poi[j] = poi_j;
            let mut on_axis = Vec::new();
            let mut off_axis = Vec::new();
            for (l, xl) in nodes.iter().enumerate() {
                let mut p = poi.clone();
                p[j] = *xl;
                on_axis.push((p.clone(), f(&p)));
                for i in 1..d {
                    p[i] += tol * offsets[l * 6 + i];
                }
                off_axis.push((p.clone(), f(&p)));
            }
            let exact = Stencil { poi: poi.clone(), direction: j, members: on_axis, order: m }.apply().unwrap();
            let approx = Stencil { poi: poi.clone(), direction: j, members: off_axis, order: m }.apply().unwrap();
            let (c, q) = pa_coefficients(&nodes, poi_j, m).unwrap();
            let g = slopes[..d].iter().map(|a| a.abs()).fold(0.0, f64::max);
            let bound = g * (d as f64 - 1.0) * tol * c.iter().map(|v| v.abs()).sum::<f64>() / q.abs();
            prop_assert!((approx - exact).abs() <= bound * (1.0 + 1e-9) + 1e-12);
        }
    }

    /// Piecewise-constant jump: error vs the true jump decays at least linearly in h.
    #[test]
    fn jump_error_decays_with_h() {
        let jump = 1.5;
        let f = |x: f64| if x > 0.1 { jump + 0.4 * x } else { 0.4 * x };
        let err = |h: f64| {
            // nodes straddle the jump at 0.1 non-symmetrically
            let nodes = [0.1 - 0.3 * h, 0.1 + 0.7 * h];
            let members = nodes.iter().map(|x| (vec![*x], f(*x))).collect();
            let s = Stencil { poi: vec![0.1 - 0.1 * h], direction: 0, members, order: 1 };
            (s.apply().unwrap() - jump).abs()
        };
        let (e1, e2, e3) = (err(0.2), err(0.1), err(0.05));
        assert!(e1 > 0.0);
        assert!(e2 <= 0.5 * e1 * 1.05, "{e1} {e2}");
        assert!(e3 <= 0.5 * e2 * 1.05, "{e2} {e3}");
    }
}
