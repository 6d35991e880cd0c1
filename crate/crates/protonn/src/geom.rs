//! Points, labels, datasets and deterministic Euclidean nearest-neighbor
//! queries.
//!
//! All queries break exact-distance ties towards the smaller index, and all
//! comparisons happen on squared distances; a single square root is taken when
//! a distance is reported. Ties are detected by exact floating-point equality
//! of squared distances: ties only matter for determinism, and an epsilon rule
//! would silently change results between runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in `R^d`. Coordinates are finite by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoordinate);
        }
        Ok(Point(coords))
    }

    /// Bypasses the finiteness check; callers must guarantee it.
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Point(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// A class label in `[0, M)`, zero-based.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Label(pub u32);

impl Label {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An ordered labeled sample. Order is significant: index `i` identifies
/// sample `i` and tie-breaking depends on it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    points: Vec<Point>,
    labels: Vec<Label>,
    d: usize,
    n_classes: usize,
}

impl LabeledDataset {
    pub fn new(
        points: Vec<Point>,
        labels: Vec<Label>,
        d: usize,
        n_classes: usize,
    ) -> Result<Self> {
        if n_classes == 0 {
            return Err(Error::NoClasses);
        }
        if points.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        for p in &points {
            if p.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.dim(),
                });
            }
        }
        for &l in &labels {
            if l.index() >= n_classes {
                return Err(Error::LabelOutOfRange {
                    label: l.0,
                    n_classes,
                });
            }
        }
        Ok(LabeledDataset {
            points,
            labels,
            d,
            n_classes,
        })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    /// New dataset from a subset of sample indices, preserving the given order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            points: indices.iter().map(|&i| self.points[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            d: self.d,
            n_classes: self.n_classes,
        }
    }
}

/// Squared Euclidean distance on raw coordinate slices. Callers guarantee
/// equal dimensions.
#[inline]
pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let diff = x - y;
        acc += diff * diff;
    }
    acc
}

/// Euclidean distance `||a - b||_2`.
pub fn distance(a: &Point, b: &Point) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(dist_sq(a.coords(), b.coords()).sqrt())
}

fn check_query(query: &Point, points: &[Point]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    for p in points {
        if p.dim() != query.dim() {
            return Err(Error::DimensionMismatch {
                expected: query.dim(),
                got: p.dim(),
            });
        }
    }
    Ok(())
}

/// Index of the nearest point and its distance; exact-distance ties go to the
/// smaller index.
pub fn nearest(query: &Point, points: &[Point]) -> Result<(usize, f64)> {
    check_query(query, points)?;
    let (idx, dsq) = nearest_sq(query.coords(), points);
    Ok((idx, dsq.sqrt()))
}

/// Unchecked scan kernel returning `(index, squared distance)`.
#[inline]
pub(crate) fn nearest_sq(query: &[f64], points: &[Point]) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_sq = dist_sq(query, points[0].coords());
    for (i, p) in points.iter().enumerate().skip(1) {
        let dsq = dist_sq(query, p.coords());
        if dsq < best_sq {
            best = i;
            best_sq = dsq;
        }
    }
    (best, best_sq)
}

/// First and second nearest as `((i1, d1_sq), (i2, d2_sq))` under the
/// `(distance, index)` order. Requires at least two points.
pub(crate) fn two_nearest_sq(query: &[f64], points: &[Point]) -> ((usize, f64), (usize, f64)) {
    debug_assert!(points.len() >= 2);
    let d0 = dist_sq(query, points[0].coords());
    let d1 = dist_sq(query, points[1].coords());
    let (mut first, mut second) = if d1 < d0 {
        ((1usize, d1), (0usize, d0))
    } else {
        ((0usize, d0), (1usize, d1))
    };
    for (i, p) in points.iter().enumerate().skip(2) {
        let dsq = dist_sq(query, p.coords());
        if dsq < first.1 {
            second = first;
            first = (i, dsq);
        } else if dsq < second.1 {
            second = (i, dsq);
        }
    }
    (first, second)
}

/// Indices of the `k` nearest points, sorted by `(distance, index)` ascending.
pub fn k_nearest(query: &Point, points: &[Point], k: usize) -> Result<Vec<usize>> {
    check_query(query, points)?;
    if k == 0 || k > points.len() {
        return Err(Error::KOutOfRange {
            k,
            n: points.len(),
        });
    }
    let mut order: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (dist_sq(query.coords(), p.coords()), i))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < order.len() {
        order.select_nth_unstable_by(k, cmp);
        order.truncate(k);
    }
    order.sort_unstable_by(cmp);
    order.truncate(k);
    Ok(order.into_iter().map(|(_, i)| i).collect())
}

/// Index of the second nearest point under the `(distance, index)` order.
pub fn second_nearest(query: &Point, prototypes: &[Point]) -> Result<usize> {
    if prototypes.len() < 2 {
        return Err(Error::KOutOfRange {
            k: 2,
            n: prototypes.len(),
        });
    }
    check_query(query, prototypes)?;
    let (_, (i2, _)) = two_nearest_sq(query.coords(), prototypes);
    Ok(i2)
}
