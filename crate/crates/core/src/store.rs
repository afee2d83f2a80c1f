//! Evaluated-point storage with coordinate-exact deduplication and a
//! per-direction cell index for semi-axial neighbour queries.

use std::collections::HashMap;

use crate::pa::{is_semi_axial, COORD_EPS};

/// Index queries enumerate up to `3^(d-1)` cells; above this many a linear
/// scan is cheaper.
const MAX_CELLS_PER_QUERY: usize = 729;

fn exact_key(x: &[f64]) -> Vec<i64> {
    x.iter().map(|v| (v / COORD_EPS).round() as i64).collect()
}

#[derive(Debug, Clone)]
pub struct PointStore {
    dim: usize,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    exact: HashMap<Vec<i64>, usize>,
    cell: f64,
    /// `axial[j]` buckets points by the cells of every coordinate except `j`.
    axial: Vec<HashMap<Vec<i64>, Vec<usize>>>,
    min_value: f64,
    max_value: f64,
}

impl PointStore {
    /// `cell` should match the off-axis tolerance used for queries.
    pub fn new(dim: usize, cell: f64) -> Self {
        let cells_per_query = 3usize.checked_pow(dim.saturating_sub(1) as u32).unwrap_or(usize::MAX);
        let indexed = cell > 0.0 && cell.is_finite() && cells_per_query <= MAX_CELLS_PER_QUERY;
        PointStore {
            dim,
            points: Vec::new(),
            values: Vec::new(),
            exact: HashMap::new(),
            cell,
            axial: if indexed { vec![HashMap::new(); dim] } else { Vec::new() },
            min_value: f64::INFINITY,
            max_value: f64::NEG_INFINITY,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points.iter().map(|p| p.as_slice()).zip(self.values.iter().cloned())
    }

    /// Index of a point matching `x` in every coordinate (to `COORD_EPS`).
    pub fn find(&self, x: &[f64]) -> Option<usize> {
        self.exact.get(&exact_key(x)).copied()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.find(x).is_some()
    }

    /// Spread of all stored values (zero when fewer than two points).
    pub fn value_range(&self) -> f64 {
        if self.points.len() < 2 {
            0.0
        } else {
            self.max_value - self.min_value
        }
    }

    /// Insert a new point; returns the existing index if it is already present.
    pub fn insert(&mut self, x: Vec<f64>, value: f64) -> usize {
        assert_eq!(x.len(), self.dim, "point dimension mismatch");
        let key = exact_key(&x);
        if let Some(&i) = self.exact.get(&key) {
            return i;
        }
        let idx = self.points.len();
        for j in 0..self.axial.len() {
            let k = self.cell_key(&x, j);
            self.axial[j].entry(k).or_default().push(idx);
        }
        self.exact.insert(key, idx);
        self.min_value = self.min_value.min(value);
        self.max_value = self.max_value.max(value);
        self.points.push(x);
        self.values.push(value);
        idx
    }

    fn cell_key(&self, x: &[f64], skip: usize) -> Vec<i64> {
        x.iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, v)| (v / self.cell).floor() as i64)
            .collect()
    }

    /// Indices (ascending) of points within `tol` of `poi` in every coordinate
    /// except `direction`.
    pub fn semi_axial(&self, poi: &[f64], direction: usize, tol: f64) -> Vec<usize> {
        if self.axial.is_empty() || tol > self.cell {
            return (0..self.points.len())
                .filter(|i| is_semi_axial(&self.points[*i], poi, direction, tol))
                .collect();
        }
        let ranges: Vec<(i64, i64)> = poi
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != direction)
            .map(|(_, v)| {
                let lo = ((v - tol - COORD_EPS) / self.cell).floor() as i64;
                let hi = ((v + tol + COORD_EPS) / self.cell).floor() as i64;
                (lo, hi)
            })
            .collect();
        let mut out = Vec::new();
        let mut key: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        loop {
            if let Some(bucket) = self.axial[direction].get(&key) {
                out.extend(bucket.iter().copied().filter(|i| is_semi_axial(&self.points[*i], poi, direction, tol)));
            }
            // odometer increment over the cell ranges
            let mut pos = 0;
            loop {
                if pos == key.len() {
                    out.sort_unstable();
                    return out;
                }
                if key[pos] < ranges[pos].1 {
                    key[pos] += 1;
                    break;
                }
                key[pos] = ranges[pos].0;
                pos += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use rand::Rng;

    #[test]
    fn duplicates_are_not_inserted_twice() {
        let mut s = PointStore::new(2, 0.25);
        let a = s.insert(vec![0.5, 0.25], 1.0);
        let b = s.insert(vec![0.5, 0.25 + 1e-14], 2.0);
        assert_eq!(a, b);
        assert_eq!(s.len(), 1);
        assert_eq!(s.value(a), 1.0);
    }

    #[test]
    fn value_range_tracks_extremes() {
        let mut s = PointStore::new(1, 0.1);
        assert_eq!(s.value_range(), 0.0);
        s.insert(vec![0.0], -1.0);
        s.insert(vec![1.0], 3.0);
        s.insert(vec![0.5], 0.0);
        assert_eq!(s.value_range(), 4.0);
    }

    #[test]
    fn indexed_query_matches_linear_scan() {
        let mut rng = seeded_rng(11);
        for d in 1..=4 {
            let tol = 0.2;
            let mut s = PointStore::new(d, tol);
            for _ in 0..400 {
                // coarse lattice so many points share off-axis coordinates
                let p: Vec<f64> = (0..d).map(|_| (rng.gen_range(-8..=8) as f64) * 0.125).collect();
                s.insert(p, 0.0);
            }
            for _ in 0..50 {
                let poi: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                for j in 0..d {
                    let expect: Vec<usize> =
                        (0..s.len()).filter(|i| is_semi_axial(s.point(*i), &poi, j, tol)).collect();
                    assert_eq!(s.semi_axial(&poi, j, tol), expect);
                }
            }
        }
    }
}
