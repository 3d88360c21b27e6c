//! Silhouette ingestion and outline geometry.
//!
//! A raster is thresholded into a [`BinaryMask`], its outer pixel boundary is
//! traced into a counter-clockwise [`Polygon`], and that polygon is resampled
//! at uniform arc-length spacing. Convex hulls live here too since the sparse
//! landmarks are taken from them.

mod mask;
mod trace;

pub use mask::{load_mask, BinaryMask, FOREGROUND_THRESHOLD, MIN_COMPONENT_AREA};
pub use trace::trace_boundary;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, orient, Point};

/// A closed polygon with counter-clockwise vertex order and positive area.
///
/// The closing edge from the last vertex back to the first is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    /// Builds a polygon, reversing clockwise input.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::TooFewPoints {
                required: 3,
                got: vertices.len(),
            });
        }
        let area = geometry::signed_area(&vertices);
        if !area.is_finite() || area == 0.0 {
            return Err(Error::DegeneratePolygon);
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        geometry::signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        geometry::perimeter(&self.vertices)
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        geometry::contains_closed(&self.vertices, p, tol)
    }

    /// Index of the vertex with the lexicographically smallest `(y, x)`.
    pub fn anchor_index(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.vertices.iter().enumerate() {
            if v.yx_less(self.vertices[best]) {
                best = i;
            }
        }
        best
    }

    /// Applies `f` to every vertex; the result is re-oriented if needed.
    pub fn map(&self, f: impl Fn(Point) -> Point) -> Result<Polygon> {
        Polygon::new(self.vertices.iter().map(|&p| f(p)).collect())
    }

    /// True when no two non-adjacent edges touch and no adjacent edges overlap.
    pub fn is_simple(&self) -> bool {
        first_self_intersection(&self.vertices).is_none()
    }
}

/// Returns the first pair of offending edges if the closed polyline is not simple.
pub(crate) fn first_self_intersection(v: &[Point]) -> Option<(usize, usize)> {
    let n = v.len();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        for j in (i + 1)..n {
            let (c, d) = (v[j], v[(j + 1) % n]);
            let adjacent_after = j == i + 1;
            let adjacent_before = i == 0 && j == n - 1;
            if adjacent_after {
                // shared vertex b == c; overlap if d folds back onto ab
                if orient(a, b, d) == 0.0 && (d - b).dot(a - b) > 0.0 {
                    return Some((i, j));
                }
            } else if adjacent_before {
                // shared vertex a == d; overlap if c folds back onto ab
                if orient(a, b, c) == 0.0 && (c - a).dot(b - a) > 0.0 {
                    return Some((i, j));
                }
            } else if geometry::segments_intersect(a, b, c, d) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Points at uniform arc-length spacing along a polygon outline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySamples {
    pub points: Vec<Point>,
    /// Arc length from the anchor vertex to each point.
    pub arc_positions: Vec<f64>,
    pub perimeter: f64,
}

impl BoundarySamples {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The polygon through the samples, in sample order.
    pub fn polygon(&self) -> Result<Polygon> {
        Polygon::new(self.points.clone())
    }
}

/// Places `n` points at arc spacing `perimeter / n`, starting at the vertex
/// with lexicographically smallest `(y, x)` and walking counter-clockwise.
pub fn resample_uniform(polygon: &Polygon, n: usize) -> Result<BoundarySamples> {
    if n < 3 {
        return Err(Error::TooFewPoints { required: 3, got: n });
    }
    let verts = polygon.vertices();
    let m = verts.len();
    let start = polygon.anchor_index();
    let ordered: Vec<Point> = (0..m).map(|k| verts[(start + k) % m]).collect();
    let lengths: Vec<f64> = (0..m)
        .map(|k| ordered[k].distance(ordered[(k + 1) % m]))
        .collect();
    let perimeter: f64 = lengths.iter().sum();
    if !(perimeter > 0.0) {
        return Err(Error::DegeneratePolygon);
    }
    let step = perimeter / n as f64;

    let mut points = Vec::with_capacity(n);
    let mut arc_positions = Vec::with_capacity(n);
    let mut edge = 0;
    let mut edge_start = 0.0;
    for k in 0..n {
        let s = k as f64 * step;
        while edge + 1 < m && edge_start + lengths[edge] <= s {
            edge_start += lengths[edge];
            edge += 1;
        }
        let a = ordered[edge];
        let b = ordered[(edge + 1) % m];
        let t = if lengths[edge] > 0.0 {
            ((s - edge_start) / lengths[edge]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        points.push(a + (b - a) * t);
        arc_positions.push(s);
    }
    Ok(BoundarySamples {
        points,
        arc_positions,
        perimeter,
    })
}

/// Counter-clockwise convex hull with collinear points removed, starting at
/// the vertex with lexicographically smallest `(y, x)`.
pub fn convex_hull(points: &[Point]) -> Result<Polygon> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints {
            required: 3,
            got: points.len(),
        });
    }
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();

    // Andrew's monotone chain; strict turns only.
    let mut hull: Vec<Point> = Vec::with_capacity(pts.len() * 2);
    for &p in &pts {
        while hull.len() >= 2 && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() < 3 {
        return Err(Error::Collinear);
    }
    let anchor = (0..hull.len())
        .min_by(|&i, &j| (hull[i].y, hull[i].x).partial_cmp(&(hull[j].y, hull[j].x)).unwrap())
        .unwrap();
    hull.rotate_left(anchor);
    Polygon::new(hull)
}
