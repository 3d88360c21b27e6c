//! Interior dense points and convex-hull sparse points.
//!
//! Dense points are spread over the triangles of a [`TriangleMesh`] in
//! proportion to triangle area. Per-triangle counts come from largest
//! remainder apportionment so the total is exactly the requested count, and
//! each point uses the square-root barycentric map, which is uniform over the
//! triangle. Random draws are keyed by `(seed, triangle, draw)` through a
//! ChaCha stream, so output never depends on evaluation order.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contour::{resample_uniform, Polygon};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::triangulate::TriangleMesh;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationVector {
    pub counts: Vec<usize>,
}

impl AllocationVector {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensePointSet {
    pub points: Vec<Point>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsePointSet {
    pub points: Vec<Point>,
    /// Unit direction from each point toward the next one (wrapping).
    pub tangents: Vec<Point>,
}

impl SparsePointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Splits `n_dp` into integer counts proportional to `areas`.
///
/// Floors of the real quotas are assigned first; the remaining units go to
/// the largest fractional remainders, lower index first on ties.
pub fn allocate_counts(areas: &[f64], n_dp: usize) -> Result<AllocationVector> {
    for (i, &a) in areas.iter().enumerate() {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::InvalidArea(a, i));
        }
    }
    let total: f64 = areas.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroArea);
    }
    let quotas: Vec<f64> = areas.iter().map(|&a| a / total * n_dp as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();

    if assigned > n_dp {
        // Only reachable through rounding in the quotas; take back from the
        // smallest remainders, highest index first.
        let mut order: Vec<usize> = (0..areas.len()).filter(|&i| counts[i] > 0).collect();
        order.sort_by(|&i, &j| remainder(quotas[i]).total_cmp(&remainder(quotas[j])).then(j.cmp(&i)));
        for &i in order.iter().take(assigned - n_dp) {
            counts[i] -= 1;
        }
    } else {
        let mut order: Vec<usize> = (0..areas.len()).filter(|&i| areas[i] > 0.0).collect();
        order.sort_by(|&i, &j| remainder(quotas[j]).total_cmp(&remainder(quotas[i])).then(i.cmp(&j)));
        let missing = n_dp - assigned;
        for k in 0..missing {
            counts[order[k % order.len()]] += 1;
        }
    }
    Ok(AllocationVector { counts })
}

fn remainder(q: f64) -> f64 {
    q - q.floor()
}

/// Maps `(r1, r2) ∈ [0,1]²` to a point of triangle `xyz`; uniform when the
/// inputs are.
pub fn sample_triangle(x: Point, y: Point, z: Point, r1: f64, r2: f64) -> Point {
    let s = r1.sqrt();
    x * (1.0 - s) + y * (s * (1.0 - r2)) + z * (s * r2)
}

/// Uniform `(r1, r2)` pair for draw `draw` of triangle `triangle`.
pub fn keyed_uniform_pair(seed: u64, triangle: usize, draw: usize) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(triangle as u64);
    // two u64 outputs per draw = four 32-bit words
    rng.set_word_pos(draw as u128 * 4);
    (unit(rng.next_u64()), unit(rng.next_u64()))
}

fn unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Draws exactly `n_dp` points inside the mesh, ordered by triangle then draw.
pub fn dense_points(mesh: &TriangleMesh, n_dp: usize, seed: u64) -> Result<DensePointSet> {
    if n_dp == 0 {
        return Err(Error::InvalidParameter("dense point count must be at least 1".into()));
    }
    let alloc = allocate_counts(&mesh.areas, n_dp)?;
    let mut points = Vec::with_capacity(n_dp);
    for (t, &count) in alloc.counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let [x, y, z] = mesh.corners(t);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        for _ in 0..count {
            let r1 = unit(rng.next_u64());
            let r2 = unit(rng.next_u64());
            points.push(sample_triangle(x, y, z, r1, r2));
        }
    }
    Ok(DensePointSet { points, seed })
}

/// Places `n_sp` landmarks at equal arc spacing along a convex hull.
pub fn sparse_points(hull: &Polygon, n_sp: usize) -> Result<SparsePointSet> {
    if n_sp < 3 {
        return Err(Error::TooFewPoints { required: 3, got: n_sp });
    }
    let samples = resample_uniform(hull, n_sp)?;
    let points = samples.points;
    let tangents = (0..n_sp)
        .map(|k| {
            let d = points[(k + 1) % n_sp] - points[k];
            d * (1.0 / d.norm())
        })
        .collect();
    Ok(SparsePointSet { points, tangents })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::convex_hull;
    use crate::triangulate::triangulate_polygon;
    use proptest::prelude::*;

    #[test]
    fn allocation_examples() {
        assert_eq!(allocate_counts(&[2.0, 1.0, 1.0], 8).unwrap().counts, vec![4, 2, 2]);
        assert_eq!(allocate_counts(&[1.0, 1.0, 1.0], 10).unwrap().counts, vec![4, 3, 3]);
        assert_eq!(allocate_counts(&[5.0], 2000).unwrap().counts, vec![2000]);
    }

    #[test]
    fn allocation_errors() {
        assert!(matches!(allocate_counts(&[0.0, 0.0], 5), Err(Error::ZeroArea)));
        assert!(matches!(allocate_counts(&[1.0, -1.0], 5), Err(Error::InvalidArea(..))));
        assert!(matches!(allocate_counts(&[1.0, f64::NAN], 5), Err(Error::InvalidArea(..))));
    }

    #[test]
    fn zero_area_gets_nothing() {
        let a = allocate_counts(&[0.0, 1.0, 0.0, 1.0], 3).unwrap();
        assert_eq!(a.counts, vec![0, 2, 0, 1]);
    }

    #[test]
    fn triangle_map_corners() {
        let (x, y, z) = (Point::new(1.0, 2.0), Point::new(5.0, 2.0), Point::new(3.0, 7.0));
        assert_eq!(sample_triangle(x, y, z, 0.0, 0.7), x);
        assert_eq!(sample_triangle(x, y, z, 1.0, 0.0), y);
        assert_eq!(sample_triangle(x, y, z, 1.0, 1.0), z);
        assert_eq!(sample_triangle(x, y, z, 1.0, 0.5), Point::new(4.0, 4.5));
    }

    #[test]
    fn keyed_pairs_match_streamed_draws() {
        let sq = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let mesh = triangulate_polygon(&sq).unwrap();
        let dense = dense_points(&mesh, 4, 9).unwrap();
        assert_eq!(dense.points.len(), 4);
        let mut k = 0;
        for t in 0..2 {
            let [x, y, z] = mesh.corners(t);
            for d in 0..2 {
                let (r1, r2) = keyed_uniform_pair(9, t, d);
                assert_eq!(dense.points[k], sample_triangle(x, y, z, r1, r2));
                k += 1;
            }
        }
    }

    #[test]
    fn seeds_change_points_deterministically() {
        let sq = [Point::new(0.0, 0.0), Point::new(3.0, 0.0), Point::new(0.0, 3.0)];
        let mesh = triangulate_polygon(&sq).unwrap();
        let a = dense_points(&mesh, 50, 1).unwrap();
        let b = dense_points(&mesh, 50, 1).unwrap();
        let c = dense_points(&mesh, 50, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn square_hull_landmarks() {
        let hull = convex_hull(&[
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        let sp = sparse_points(&hull, 4).unwrap();
        assert_eq!(sp.points, hull.vertices().to_vec());
        assert_eq!(
            sp.tangents,
            vec![Point::new(1.0, 0.0), Point::new(0.0, 1.0), Point::new(-1.0, 0.0), Point::new(0.0, -1.0)]
        );
        assert!(sparse_points(&hull, 2).is_err());
    }

    proptest! {
        #[test]
        fn allocation_conserves_total(
            areas in proptest::collection::vec(prop_oneof![Just(0.0), 0.0f64..1e4], 1..60),
            n in 1usize..10_000,
        ) {
            prop_assume!(areas.iter().any(|&a| a > 0.0));
            let alloc = allocate_counts(&areas, n).unwrap();
            prop_assert_eq!(alloc.total(), n);
            let sum: f64 = areas.iter().sum();
            for (a, c) in areas.iter().zip(&alloc.counts) {
                let q = a / sum * n as f64;
                prop_assert!((*c as f64 - q).abs() < 1.0 + 1e-9);
            }
        }
    }
}
