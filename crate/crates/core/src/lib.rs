//! Shape retrieval with solid shape context descriptors.
//!
//! The pipeline turns a binary silhouette into a polygon ([`contour`]),
//! triangulates its interior ([`triangulate`]), draws area-uniform interior
//! points and convex-hull landmarks ([`sampling`]), and bins the interior
//! points around each landmark on a log-polar grid ([`descriptor`]).
//! Descriptors are compared by cyclic order-preserving alignment
//! ([`matching`]), optionally fused with an inner-distance contour descriptor
//! ([`idsc`]), and scored over whole datasets ([`retrieval`]). [`synth`]
//! generates test silhouettes.

// `!(x > 0.0)` checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contour;
pub mod descriptor;
pub mod error;
pub mod geometry;
pub mod idsc;
pub mod matching;
pub mod retrieval;
pub mod sampling;
pub mod synth;
pub mod triangulate;

pub use contour::{convex_hull, load_mask, resample_uniform, trace_boundary, BinaryMask, BoundarySamples, Polygon};
pub use descriptor::{
    describe_shape, sample_shape, BinGrid, DescriptorFile, DescriptorKind, Histogram, SscDescriptor, SscParams,
};
pub use error::{Error, Result};
pub use geometry::Point;
pub use idsc::{describe_contour_sc, describe_idsc, idsc_cost, IdscDescriptor, IdscParams};
pub use matching::{dp_align, fused_cost, ssc_cost, FusionParams, MatchResult};
pub use retrieval::{
    build_cost_matrix, bullseye, evaluate, first_wrong_position, precision_recall, top_k_correct, BullseyeParams,
    BullseyeReport, CostMatrix, DatasetManifest, EvaluationReport, ManifestEntry, Method, PipelineParams,
};
pub use sampling::{allocate_counts, dense_points, sparse_points, AllocationVector, DensePointSet, SparsePointSet};
pub use synth::{generate, ShapeKind, SynthSpec};
pub use triangulate::{triangulate_interior, TriangleMesh};
