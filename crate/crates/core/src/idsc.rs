//! Inner-distance shape context over boundary samples.
//!
//! Inner distances are shortest paths through the visibility graph of the
//! sampled outline; the inner angle is the direction of the first hop of
//! such a path, measured from the local boundary tangent. The same
//! histogram machinery with plain Euclidean distance and direction gives the
//! classic contour shape context, kept here as a reference descriptor.

use serde::{Deserialize, Serialize};

use crate::contour::{resample_uniform, BoundarySamples, Polygon};
use crate::descriptor::{BinGrid, DescriptorFile, DescriptorKind, DescriptorParams, Histogram, DESCRIPTOR_FORMAT, DESCRIPTOR_VERSION};
use crate::error::{Error, Result};
use crate::geometry::{self, relative_angle, Point};
use crate::matching::{self, CostTable, FusionParams};

/// Tolerance for boundary contact in visibility tests.
pub const VISIBILITY_TOLERANCE: f64 = 1e-9;

/// Relative slack below which a detour is not considered shorter.
const PATH_SLACK: f64 = 1e-12;

/// Segments between boundary samples that stay inside the shape.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityGraph {
    pub points: Vec<Point>,
    /// `n × n` edge weights, `f64::INFINITY` where there is no edge.
    weights: Vec<f64>,
}

impl VisibilityGraph {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.len() + j]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.weight(i, j).is_finite()
    }

    pub fn edge_count(&self) -> usize {
        let n = self.len();
        (0..n).map(|i| ((i + 1)..n).filter(|&j| self.has_edge(i, j)).count()).sum()
    }
}

/// Edge `(i, j)` exists iff the segment between samples `i` and `j` lies in
/// the closed `polygon`. When `polygon` is the polygon through the samples
/// themselves, consecutive samples are always joined and the graph is
/// connected.
pub fn visibility_graph(samples: &BoundarySamples, polygon: &Polygon) -> VisibilityGraph {
    let pts = &samples.points;
    let n = pts.len();
    let mut weights = vec![f64::INFINITY; n * n];
    for i in 0..n {
        weights[i * n + i] = 0.0;
        for j in (i + 1)..n {
            if segment_inside(pts[i], pts[j], polygon.vertices()) {
                let d = pts[i].distance(pts[j]);
                weights[i * n + j] = d;
                weights[j * n + i] = d;
            }
        }
    }
    VisibilityGraph {
        points: pts.clone(),
        weights,
    }
}

/// True when the closed segment `ab` lies inside or on the closed polygon.
///
/// Rejects any proper crossing with a polygon edge that stays clear of all
/// four endpoints; then splits the segment at every polygon vertex it
/// touches and requires each piece's midpoint to be inside or on the
/// boundary.
pub fn segment_inside(a: Point, b: Point, polygon: &[Point]) -> bool {
    let m = polygon.len();
    let tol = VISIBILITY_TOLERANCE;
    for k in 0..m {
        let (c, d) = (polygon[k], polygon[(k + 1) % m]);
        // An endpoint resting on the other segment (up to rounding) is
        // contact, not a crossing; the midpoint checks below catch segments
        // leaving the polygon there.
        if geometry::segments_cross_properly(a, b, c, d)
            && geometry::distance_to_segment(a, c, d) > tol
            && geometry::distance_to_segment(b, c, d) > tol
            && geometry::distance_to_segment(c, a, b) > tol
            && geometry::distance_to_segment(d, a, b) > tol
        {
            return false;
        }
    }
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return geometry::contains_closed(polygon, a, VISIBILITY_TOLERANCE);
    }
    let mut cuts = vec![0.0, 1.0];
    for &v in polygon {
        if geometry::distance_to_segment(v, a, b) <= VISIBILITY_TOLERANCE {
            let t = (v - a).dot(ab) / len2;
            if t > 0.0 && t < 1.0 {
                cuts.push(t);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2).all(|w| {
        let mid = a + ab * (0.5 * (w[0] + w[1]));
        geometry::contains_closed(polygon, mid, VISIBILITY_TOLERANCE)
    })
}

/// All-pairs shortest paths through the visibility graph.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerGeodesics {
    pub n: usize,
    dist: Vec<f64>,
    first_hop: Vec<usize>,
    first_dir: Vec<f64>,
}

impl InnerGeodesics {
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    /// Vertex reached by the first segment of the chosen shortest path.
    pub fn first_hop(&self, i: usize, j: usize) -> usize {
        self.first_hop[i * self.n + j]
    }

    /// Angle (from +x, in `[0, 2π)`) of the first segment from `i` toward `j`.
    pub fn first_dir(&self, i: usize, j: usize) -> f64 {
        self.first_dir[i * self.n + j]
    }
}

/// Floyd–Warshall over the visibility graph.
///
/// Among equally short paths the first hop is the lowest-index neighbour.
pub fn inner_geodesics(graph: &VisibilityGraph) -> InnerGeodesics {
    let n = graph.len();
    let mut dist = graph.weights.clone();
    for k in 0..n {
        for i in 0..n {
            let dik = dist[i * n + k];
            if !dik.is_finite() {
                continue;
            }
            for j in 0..n {
                let via = dik + dist[k * n + j];
                let cur = dist[i * n + j];
                if via < cur && (cur.is_infinite() || via < cur - PATH_SLACK * cur) {
                    dist[i * n + j] = via;
                }
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dist[i * n + j].min(dist[j * n + i]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }

    let mut first_hop = vec![0; n * n];
    let mut first_dir = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                first_hop[i * n + j] = i;
                continue;
            }
            let target = dist[i * n + j];
            let tol = 1e-9 * target.max(1.0);
            let hop = (0..n)
                .find(|&h| graph.has_edge(i, h) && graph.weight(i, h) + dist[h * n + j] <= target + tol)
                .unwrap_or(j);
            first_hop[i * n + j] = hop;
            let v = graph.points[hop] - graph.points[i];
            first_dir[i * n + j] = geometry::wrap_angle(v.y.atan2(v.x));
        }
    }
    InnerGeodesics {
        n,
        dist,
        first_hop,
        first_dir,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContourMetric {
    /// Inner distance and inner angle.
    Inner,
    /// Straight-line distance and direction.
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdscParams {
    pub n_points: usize,
    pub grid: BinGrid,
}

impl Default for IdscParams {
    fn default() -> Self {
        Self {
            n_points: 100,
            grid: BinGrid::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdscDescriptor {
    pub histograms: Vec<Histogram>,
    /// Mean pairwise distance used as the radial scale.
    pub mean_inner_distance: f64,
    pub grid: BinGrid,
    pub metric: ContourMetric,
}

impl IdscDescriptor {
    pub fn len(&self) -> usize {
        self.histograms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histograms.is_empty()
    }

    pub fn to_file(&self, shape_id: &str) -> DescriptorFile {
        DescriptorFile {
            format: DESCRIPTOR_FORMAT.into(),
            version: DESCRIPTOR_VERSION,
            kind: DescriptorKind::Idsc,
            shape_id: shape_id.into(),
            params: DescriptorParams {
                n_boundary: self.histograms.len(),
                n_sparse: None,
                n_dense: None,
                rotate: true,
            },
            seed: None,
            scale: self.mean_inner_distance,
            grid: self.grid,
            histograms: self.histograms.iter().map(|h| h.bins.clone()).collect(),
        }
    }

    pub fn from_file(file: &DescriptorFile) -> Result<Self> {
        file.check(DescriptorKind::Idsc)?;
        Ok(Self {
            histograms: file.histograms.iter().map(|b| Histogram { bins: b.clone() }).collect(),
            mean_inner_distance: file.scale,
            grid: file.grid,
            metric: ContourMetric::Inner,
        })
    }
}

/// Inner-distance shape context at `params.n_points` uniform boundary samples.
pub fn describe_idsc(polygon: &Polygon, params: &IdscParams) -> Result<IdscDescriptor> {
    describe_contour(polygon, params, ContourMetric::Inner)
}

/// Contour shape context with Euclidean distance and direction.
pub fn describe_contour_sc(polygon: &Polygon, params: &IdscParams) -> Result<IdscDescriptor> {
    describe_contour(polygon, params, ContourMetric::Euclidean)
}

fn describe_contour(polygon: &Polygon, params: &IdscParams, metric: ContourMetric) -> Result<IdscDescriptor> {
    params.grid.validate()?;
    let n = params.n_points;
    let samples = resample_uniform(polygon, n)?;
    let pts = &samples.points;

    let (dist, dir): (Vec<f64>, Vec<Point>) = match metric {
        ContourMetric::Inner => {
            let region = samples.polygon()?;
            let geo = inner_geodesics(&visibility_graph(&samples, &region));
            (0..n * n)
                .map(|k| {
                    let (i, j) = (k / n, k % n);
                    (geo.dist(i, j), pts[geo.first_hop(i, j)] - pts[i])
                })
                .unzip()
        }
        ContourMetric::Euclidean => (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                (pts[i].distance(pts[j]), pts[j] - pts[i])
            })
            .unzip(),
    };

    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                total += dist[i * n + j];
            }
        }
    }
    let mean = total / (n * (n - 1)) as f64;
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::DegeneratePolygon);
    }

    let grid = params.grid;
    let histograms = (0..n)
        .map(|i| {
            let tangent = pts[(i + 1) % n] - pts[(i + n - 1) % n];
            let mut bins = vec![0.0; grid.len()];
            for j in (0..n).filter(|&j| j != i) {
                let bin = grid.bin_index(dist[i * n + j] / mean, relative_angle(dir[i * n + j], tangent));
                bins[grid.flat_index(bin)] += 1.0;
            }
            bins.iter_mut().for_each(|b| *b /= (n - 1) as f64);
            Histogram { bins }
        })
        .collect();
    Ok(IdscDescriptor {
        histograms,
        mean_inner_distance: mean,
        grid,
        metric,
    })
}

/// Alignment cost between two contour descriptors, same rules as SSC.
pub fn idsc_cost(a: &IdscDescriptor, b: &IdscDescriptor, params: &FusionParams) -> Result<f64> {
    params.validate()?;
    let table = CostTable::new(&a.histograms, &b.histograms)?;
    Ok(matching::directional_costs(&table, params))
}
