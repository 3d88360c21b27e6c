//! Planar primitives shared by every stage: points, exact orientation
//! predicates, segment tests and point-in-polygon queries.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// A point (or vector) in continuous pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Lexicographic `(y, x)` ordering used to pick deterministic start points.
    pub fn yx_less(self, other: Point) -> bool {
        (self.y, self.x) < (other.y, other.x)
    }

    fn coord(self) -> robust::Coord<f64> {
        robust::Coord {
            x: self.x,
            y: self.y,
        }
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// Exact sign of the orientation of `(a, b, c)`: positive when the triple
/// turns counter-clockwise, zero when collinear.
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    robust::orient2d(a.coord(), b.coord(), c.coord())
}

/// Exact incircle test: positive when `d` lies strictly inside the
/// circumcircle of the counter-clockwise triangle `(a, b, c)`.
pub fn incircle(a: Point, b: Point, c: Point, d: Point) -> f64 {
    robust::incircle(a.coord(), b.coord(), c.coord(), d.coord())
}

/// Signed shoelace area; positive for counter-clockwise vertex order.
pub fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        acc += vertices[i].cross(vertices[(i + 1) % n]);
    }
    acc * 0.5
}

pub fn perimeter(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    (0..n).map(|i| vertices[i].distance(vertices[(i + 1) % n])).sum()
}

/// True when the open segments `ab` and `cd` cross at a single interior point.
pub fn segments_cross_properly(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// True when `p` lies on the closed segment `ab` (exact collinearity).
pub fn on_segment(p: Point, a: Point, b: Point) -> bool {
    orient(a, b, p) == 0.0
        && p.x >= a.x.min(b.x)
        && p.x <= a.x.max(b.x)
        && p.y >= a.y.min(b.y)
        && p.y <= a.y.max(b.y)
}

/// True when the closed segments `ab` and `cd` share at least one point.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    if segments_cross_properly(a, b, c, d) {
        return true;
    }
    on_segment(c, a, b) || on_segment(d, a, b) || on_segment(a, c, d) || on_segment(b, c, d)
}

pub fn distance_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Point-in-closed-polygon: points within `tol` of the boundary count as inside.
pub fn contains_closed(vertices: &[Point], p: Point, tol: f64) -> bool {
    let n = vertices.len();
    for i in 0..n {
        if distance_to_segment(p, vertices[i], vertices[(i + 1) % n]) <= tol {
            return true;
        }
    }
    contains_strict(vertices, p)
}

/// Crossing-number containment; boundary points may go either way.
pub fn contains_strict(vertices: &[Point], p: Point) -> bool {
    let n = vertices.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Angle of `v` measured counter-clockwise from `reference`, in `[0, 2π)`.
///
/// Works in the frame of `reference` (dot and cross) rather than by
/// subtracting two `atan2` values, so rigid rotations by multiples of 90°
/// give bit-identical results.
pub fn relative_angle(v: Point, reference: Point) -> f64 {
    let a = reference.cross(v).atan2(reference.dot(v));
    wrap_angle(a)
}

/// Maps any finite angle into `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = a.rem_euclid(tau);
    if w >= tau {
        0.0
    } else {
        w
    }
}
