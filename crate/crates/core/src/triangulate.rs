//! Constrained Delaunay triangulation of a sampled outline.
//!
//! The domain is the simple polygon through the boundary samples, so every
//! boundary edge is a constraint and only interior triangles are produced.
//! An initial ear-clipping triangulation is made locally Delaunay by Lawson
//! edge flips across unconstrained diagonals; with exact predicates this
//! converges to the constrained Delaunay triangulation. No Steiner points are
//! inserted, so an `n`-vertex outline always yields `n - 2` triangles.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::contour::{first_self_intersection, BoundarySamples};
use crate::error::{Error, Result};
use crate::geometry::{self, incircle, orient, Point};

/// Samples closer than this are treated as duplicates.
pub const DUPLICATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex-index triples.
    pub triangles: Vec<[usize; 3]>,
    pub areas: Vec<f64>,
}

impl TriangleMesh {
    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.corners(t);
        Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }
}

/// Unsigned triangle area; degenerate triangles give 0.
pub fn triangle_area(a: Point, b: Point, c: Point) -> f64 {
    ((b - a).cross(c - a)).abs() * 0.5
}

pub fn triangulate_interior(samples: &BoundarySamples) -> Result<TriangleMesh> {
    triangulate_polygon(&samples.points)
}

/// Triangulates the simple polygon through `points` (either orientation).
pub fn triangulate_polygon(points: &[Point]) -> Result<TriangleMesh> {
    let n = points.len();
    if n < 3 {
        return Err(Error::TooFewPoints { required: 3, got: n });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if points[i].distance(points[j]) < DUPLICATE_TOLERANCE {
                return Err(Error::DuplicatePoints(i, j));
            }
        }
    }
    if let Some((i, j)) = first_self_intersection(points) {
        return Err(Error::SelfIntersecting(i, j));
    }
    let area = geometry::signed_area(points);
    if area == 0.0 {
        return Err(Error::DegeneratePolygon);
    }
    let ring: Vec<usize> = if area > 0.0 {
        (0..n).collect()
    } else {
        (0..n).rev().collect()
    };

    let mut triangles = ear_clip(points, ring)?;
    let constrained = |a: usize, b: usize| (a + 1) % n == b || (b + 1) % n == a;
    lawson_flips(points, &mut triangles, constrained);

    let areas = triangles
        .iter()
        .map(|&[a, b, c]| triangle_area(points[a], points[b], points[c]))
        .collect();
    Ok(TriangleMesh {
        vertices: points.to_vec(),
        triangles,
        areas,
    })
}

fn ear_clip(points: &[Point], mut ring: Vec<usize>) -> Result<Vec<[usize; 3]>> {
    let mut triangles = Vec::with_capacity(ring.len() - 2);
    while ring.len() > 3 {
        let m = ring.len();
        let ear = (0..m).find(|&k| {
            let (u, v, w) = (ring[(k + m - 1) % m], ring[k], ring[(k + 1) % m]);
            let (pu, pv, pw) = (points[u], points[v], points[w]);
            if orient(pu, pv, pw) <= 0.0 {
                return false;
            }
            ring.iter().all(|&q| {
                if q == u || q == v || q == w {
                    return true;
                }
                let p = points[q];
                !(orient(pu, pv, p) >= 0.0 && orient(pv, pw, p) >= 0.0 && orient(pw, pu, p) >= 0.0)
            })
        });
        let Some(k) = ear else {
            return Err(Error::Triangulation { remaining: m });
        };
        triangles.push([ring[(k + m - 1) % m], ring[k], ring[(k + 1) % m]]);
        ring.remove(k);
    }
    if orient(points[ring[0]], points[ring[1]], points[ring[2]]) <= 0.0 {
        return Err(Error::Triangulation { remaining: 3 });
    }
    triangles.push([ring[0], ring[1], ring[2]]);
    Ok(triangles)
}

/// Flips unconstrained edges until every one is locally Delaunay.
fn lawson_flips(points: &[Point], triangles: &mut [[usize; 3]], constrained: impl Fn(usize, usize) -> bool) {
    // directed edge -> triangle owning it (counter-clockwise)
    let mut owner: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 3);
    for (t, tri) in triangles.iter().enumerate() {
        for e in 0..3 {
            owner.insert((tri[e], tri[(e + 1) % 3]), t);
        }
    }
    let mut stack: Vec<(usize, usize)> = owner
        .keys()
        .filter(|&&(a, b)| a < b && !constrained(a, b))
        .copied()
        .collect();
    stack.sort_unstable();

    while let Some((a, b)) = stack.pop() {
        let (Some(&t1), Some(&t2)) = (owner.get(&(a, b)), owner.get(&(b, a))) else {
            continue;
        };
        let c = apex(&triangles[t1], a, b);
        let d = apex(&triangles[t2], b, a);
        let (pa, pb, pc, pd) = (points[a], points[b], points[c], points[d]);
        if incircle(pa, pb, pc, pd) <= 0.0 {
            continue;
        }
        // The quad a-d-b-c must be strictly convex for the flip to be valid.
        if orient(pc, pd, pb) <= 0.0 || orient(pd, pc, pa) <= 0.0 {
            continue;
        }
        for (u, v) in [(a, b), (b, c), (c, a), (b, a), (a, d), (d, b)] {
            owner.remove(&(u, v));
        }
        triangles[t1] = [a, d, c];
        triangles[t2] = [d, b, c];
        for (t, tri) in [(t1, triangles[t1]), (t2, triangles[t2])] {
            for e in 0..3 {
                owner.insert((tri[e], tri[(e + 1) % 3]), t);
            }
        }
        for (u, v) in [(a, d), (d, b), (b, c), (c, a)] {
            if !constrained(u, v) {
                stack.push((u.min(v), u.max(v)));
            }
        }
    }
}

/// Vertex of `tri` opposite the directed edge `a -> b`.
fn apex(tri: &[usize; 3], a: usize, b: usize) -> usize {
    for e in 0..3 {
        if tri[e] == a && tri[(e + 1) % 3] == b {
            return tri[(e + 2) % 3];
        }
    }
    unreachable!("edge not in triangle")
}
