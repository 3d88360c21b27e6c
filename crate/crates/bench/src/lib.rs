//! Fixture shapes shared by the benchmarks.

use ssc_core::synth::{generate, ShapeKind, SynthSpec};
use ssc_core::{trace_boundary, Polygon};

/// Traced outline of a synthetic silhouette on the default canvas.
pub fn outline(shape: ShapeKind) -> Polygon {
    let mask = generate(&SynthSpec::new(shape).rotated(17.0)).expect("fixture spec is valid");
    trace_boundary(&mask).expect("fixture mask is traceable")
}

pub fn pentagon() -> Polygon {
    outline(ShapeKind::RegularPolygon { sides: 5, radius: 80.0 })
}

pub fn horseshoe() -> Polygon {
    outline(ShapeKind::Horseshoe {
        outer: 75.0,
        inner: 42.0,
        gap_deg: 75.0,
    })
}
