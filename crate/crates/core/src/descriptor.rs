//! Solid shape context: log-polar histograms of interior dense points seen
//! from landmarks on the convex hull.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::contour::{convex_hull, resample_uniform, BoundarySamples, Polygon};
use crate::error::{Error, Result};
use crate::geometry::{relative_angle, Point};
use crate::sampling::{dense_points, sparse_points, DensePointSet, SparsePointSet, DEFAULT_SEED};
use crate::triangulate::{triangulate_interior, TriangleMesh};

/// Log-polar bin layout. Radii are relative to the mean landmark-to-point
/// distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinGrid {
    pub n_radial: usize,
    pub n_angular: usize,
    pub inner_radius_factor: f64,
    pub outer_radius_factor: f64,
}

impl Default for BinGrid {
    fn default() -> Self {
        Self {
            n_radial: 8,
            n_angular: 12,
            inner_radius_factor: 0.125,
            outer_radius_factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinId {
    pub radial: usize,
    pub angular: usize,
}

impl BinGrid {
    pub fn len(&self) -> usize {
        self.n_radial * self.n_angular
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_radial == 0 || self.n_angular == 0 {
            return Err(Error::InvalidParameter("bin grid needs at least one bin per axis".into()));
        }
        if !(self.inner_radius_factor > 0.0 && self.outer_radius_factor > self.inner_radius_factor) {
            return Err(Error::InvalidParameter(format!(
                "radial range {}..{} is invalid",
                self.inner_radius_factor, self.outer_radius_factor
            )));
        }
        Ok(())
    }

    /// Radial bin edges, `n_radial + 1` values spaced evenly in log radius.
    pub fn radial_edges(&self) -> Vec<f64> {
        let ratio = self.outer_radius_factor / self.inner_radius_factor;
        (0..=self.n_radial)
            .map(|k| self.inner_radius_factor * ratio.powf(k as f64 / self.n_radial as f64))
            .collect()
    }

    /// Bin of a point at normalized distance `rel_distance` and angle
    /// `rel_angle ∈ [0, 2π)`.
    ///
    /// Radial bins are closed on the outer edge. Distances outside the
    /// radial range clamp into the first or last ring.
    pub fn bin_index(&self, rel_distance: f64, rel_angle: f64) -> BinId {
        let last_r = self.n_radial - 1;
        let radial = if !(rel_distance > self.inner_radius_factor) {
            0
        } else {
            let pos = (rel_distance / self.inner_radius_factor).log2()
                / (self.outer_radius_factor / self.inner_radius_factor).log2()
                * self.n_radial as f64;
            ((pos.ceil() as usize).saturating_sub(1)).min(last_r)
        };
        let width = std::f64::consts::TAU / self.n_angular as f64;
        let angular = ((rel_angle / width).floor().max(0.0) as usize).min(self.n_angular - 1);
        BinId { radial, angular }
    }

    pub fn flat_index(&self, bin: BinId) -> usize {
        bin.radial * self.n_angular + bin.angular
    }
}

/// One log-polar histogram, flattened radial-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: Vec<f64>,
}

impl Histogram {
    pub fn mass(&self) -> f64 {
        self.bins.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SscParams {
    pub n_boundary: usize,
    pub n_sparse: usize,
    pub n_dense: usize,
    pub seed: u64,
    pub grid: BinGrid,
    pub rotate: bool,
}

impl Default for SscParams {
    fn default() -> Self {
        Self {
            n_boundary: 100,
            n_sparse: 300,
            n_dense: 2000,
            seed: DEFAULT_SEED,
            grid: BinGrid::default(),
            rotate: true,
        }
    }
}

impl SscParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_boundary < 3 || self.n_sparse < 3 || self.n_dense < 1 {
            return Err(Error::InvalidParameter(format!(
                "need n_boundary >= 3, n_sparse >= 3, n_dense >= 1 (got {}, {}, {})",
                self.n_boundary, self.n_sparse, self.n_dense
            )));
        }
        self.grid.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SscDescriptor {
    pub histograms: Vec<Histogram>,
    pub mean_distance: f64,
    pub grid: BinGrid,
    pub rotate: bool,
}

impl SscDescriptor {
    /// Builds the descriptor from already sampled landmarks and dense points.
    pub fn from_points(sparse: &SparsePointSet, dense: &DensePointSet, grid: BinGrid, rotate: bool) -> Result<Self> {
        grid.validate()?;
        if sparse.is_empty() || dense.points.is_empty() {
            return Err(Error::EmptyDescriptor);
        }
        let mean_d = mean_distance(sparse, dense);
        if !(mean_d > 0.0) {
            return Err(Error::DegeneratePolygon);
        }
        let histograms = sparse
            .points
            .iter()
            .zip(&sparse.tangents)
            .map(|(&c, &t)| ssc_histogram(c, t, dense, mean_d, &grid, rotate))
            .collect();
        Ok(Self {
            histograms,
            mean_distance: mean_d,
            grid,
            rotate,
        })
    }

    pub fn len(&self) -> usize {
        self.histograms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histograms.is_empty()
    }
}

/// Mean Euclidean distance over all landmark/dense-point pairs.
pub fn mean_distance(sparse: &SparsePointSet, dense: &DensePointSet) -> f64 {
    let mut total = 0.0;
    for &s in &sparse.points {
        for &p in &dense.points {
            total += s.distance(p);
        }
    }
    total / (sparse.points.len() * dense.points.len()) as f64
}

/// Histogram of `dense` around `center`, normalized to unit mass.
///
/// Distances are divided by `mean_d`. With `rotate` the angle is measured
/// from `tangent`, otherwise from the +x axis.
pub fn ssc_histogram(
    center: Point,
    tangent: Point,
    dense: &DensePointSet,
    mean_d: f64,
    grid: &BinGrid,
    rotate: bool,
) -> Histogram {
    let reference = if rotate { tangent } else { Point::new(1.0, 0.0) };
    let mut bins = vec![0.0; grid.len()];
    for &p in &dense.points {
        let v = p - center;
        let bin = grid.bin_index(v.norm() / mean_d, relative_angle(v, reference));
        bins[grid.flat_index(bin)] += 1.0;
    }
    let n = dense.points.len() as f64;
    for b in &mut bins {
        *b /= n;
    }
    Histogram { bins }
}

/// Intermediate products of the sampling pipeline for one shape.
#[derive(Debug, Clone)]
pub struct ShapeSampling {
    pub boundary: BoundarySamples,
    pub mesh: TriangleMesh,
    pub dense: DensePointSet,
    pub hull: Polygon,
    pub sparse: SparsePointSet,
}

/// Boundary resampling, triangulation, dense sampling and hull landmarks.
///
/// The hull is taken over the full outline, not the resampled one, so any
/// change to the outline that leaves the hull alone leaves the landmarks alone.
pub fn sample_shape(polygon: &Polygon, params: &SscParams) -> Result<ShapeSampling> {
    params.validate()?;
    let boundary = resample_uniform(polygon, params.n_boundary)?;
    let mesh = triangulate_interior(&boundary)?;
    let dense = dense_points(&mesh, params.n_dense, params.seed)?;
    let hull = convex_hull(polygon.vertices())?;
    let sparse = sparse_points(&hull, params.n_sparse)?;
    Ok(ShapeSampling {
        boundary,
        mesh,
        dense,
        hull,
        sparse,
    })
}

pub fn describe_shape(polygon: &Polygon, params: &SscParams) -> Result<SscDescriptor> {
    let s = sample_shape(polygon, params)?;
    SscDescriptor::from_points(&s.sparse, &s.dense, params.grid, params.rotate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriptorKind {
    Ssc,
    Idsc,
}

pub const DESCRIPTOR_FORMAT: &str = "shape-descriptor";
pub const DESCRIPTOR_VERSION: u32 = 1;

/// On-disk JSON form shared by both descriptor families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorFile {
    pub format: String,
    pub version: u32,
    pub kind: DescriptorKind,
    pub shape_id: String,
    pub params: DescriptorParams,
    pub seed: Option<u64>,
    /// Mean distance used to normalize radii.
    pub scale: f64,
    pub grid: BinGrid,
    pub histograms: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorParams {
    pub n_boundary: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sparse: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_dense: Option<usize>,
    pub rotate: bool,
}

impl DescriptorFile {
    pub fn from_ssc(shape_id: &str, d: &SscDescriptor, params: &SscParams) -> Self {
        Self {
            format: DESCRIPTOR_FORMAT.into(),
            version: DESCRIPTOR_VERSION,
            kind: DescriptorKind::Ssc,
            shape_id: shape_id.into(),
            params: DescriptorParams {
                n_boundary: params.n_boundary,
                n_sparse: Some(params.n_sparse),
                n_dense: Some(params.n_dense),
                rotate: d.rotate,
            },
            seed: Some(params.seed),
            scale: d.mean_distance,
            grid: d.grid,
            histograms: d.histograms.iter().map(|h| h.bins.clone()).collect(),
        }
    }

    pub fn to_ssc(&self) -> Result<SscDescriptor> {
        self.check(DescriptorKind::Ssc)?;
        Ok(SscDescriptor {
            histograms: self.histograms.iter().map(|b| Histogram { bins: b.clone() }).collect(),
            mean_distance: self.scale,
            grid: self.grid,
            rotate: self.params.rotate,
        })
    }

    pub(crate) fn check(&self, kind: DescriptorKind) -> Result<()> {
        if self.format != DESCRIPTOR_FORMAT || self.version != DESCRIPTOR_VERSION {
            return Err(Error::DescriptorFormat(format!(
                "unsupported format {} v{}",
                self.format, self.version
            )));
        }
        if self.kind != kind {
            return Err(Error::DescriptorFormat(format!("expected {kind:?} descriptor, found {:?}", self.kind)));
        }
        let bins = self.grid.len();
        if let Some(h) = self.histograms.iter().find(|h| h.len() != bins) {
            return Err(Error::GridMismatch(bins, h.len()));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self).map_err(|e| Error::DescriptorFormat(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::DescriptorFormat(format!("{}: {e}", path.display())))
    }
}
