//! Synthetic silhouettes: discs, slit rings, regular and notched polygons,
//! stencil-cut blobs, hinged worms and horseshoes.
//!
//! Everything is rasterized at pixel centres on a square canvas. Shapes are
//! kept inside the central 80% of the canvas so traced outlines never touch
//! the border.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contour::BinaryMask;
use crate::error::{Error, Result};
use crate::geometry::{distance_to_segment, orient, Point};
use crate::retrieval::{DatasetManifest, ManifestEntry};

pub const DEFAULT_CANVAS: usize = 256;

/// Fraction of the canvas half-width a shape may extend to.
const MAX_EXTENT: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ShapeKind {
    Disc {
        radius: f64,
    },
    /// Annulus with a radial slit along +x, which keeps it simply connected.
    Ring {
        outer: f64,
        inner: f64,
        slit: f64,
    },
    RegularPolygon {
        sides: usize,
        radius: f64,
    },
    /// Regular polygon with rectangular notches cut in from the edges. Notches
    /// stay in the middle of their edge so the convex hull is unchanged.
    IndentedPolygon {
        sides: usize,
        radius: f64,
        notches: usize,
        notch_width: f64,
        /// Notch depth range as fractions of the inradius.
        depth_min: f64,
        depth_max: f64,
    },
    /// Rounded block split by vertical cuts; the largest piece is kept.
    StencilBreak {
        half_width: f64,
        half_height: f64,
        cuts: usize,
        cut_width: f64,
    },
    /// Two capsule limbs meeting at a joint; 180° is a straight worm.
    HingeWorm {
        length: f64,
        width: f64,
        joint_deg: f64,
    },
    /// Annular sector with its opening centred on +x.
    Horseshoe {
        outer: f64,
        inner: f64,
        gap_deg: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub shape: ShapeKind,
    #[serde(default = "default_canvas")]
    pub canvas: usize,
    #[serde(default)]
    pub rotation_deg: f64,
    /// Maximum random shift of the shape centre, in pixels.
    #[serde(default)]
    pub jitter: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_canvas() -> usize {
    DEFAULT_CANVAS
}

impl SynthSpec {
    pub fn new(shape: ShapeKind) -> Self {
        Self {
            shape,
            canvas: DEFAULT_CANVAS,
            rotation_deg: 0.0,
            jitter: 0.0,
            seed: 0,
        }
    }

    pub fn rotated(mut self, deg: f64) -> Self {
        self.rotation_deg = deg;
        self
    }

    pub fn seeded(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Shape-local implicit description.
enum Region {
    Disc(f64),
    Ring { outer: f64, inner: f64, slit: f64 },
    Convex(Vec<Point>),
    Notched { hull: Vec<Point>, notches: Vec<Notch> },
    Stencil { a: f64, b: f64, cuts: Vec<f64>, cut_width: f64 },
    Capsules { segments: [(Point, Point); 2], radius: f64 },
    Sector { outer: f64, inner: f64, half_gap: f64 },
}

struct Notch {
    mouth: Point,
    along: Point,
    inward: Point,
    half_width: f64,
    depth: f64,
}

impl Region {
    fn contains(&self, p: Point) -> bool {
        match self {
            Region::Disc(r) => p.norm() <= *r,
            Region::Ring { outer, inner, slit } => {
                let d = p.norm();
                d >= *inner && d <= *outer && !(p.x > 0.0 && p.y.abs() < slit / 2.0)
            }
            Region::Convex(v) => in_convex(v, p),
            Region::Notched { hull, notches } => in_convex(hull, p) && !notches.iter().any(|n| n.contains(p)),
            Region::Stencil { a, b, cuts, cut_width } => {
                (p.x / a).powi(4) + (p.y / b).powi(4) <= 1.0 && !cuts.iter().any(|c| (p.x - c).abs() < cut_width / 2.0)
            }
            Region::Capsules { segments, radius } => segments.iter().any(|&(s, e)| distance_to_segment(p, s, e) <= *radius),
            Region::Sector { outer, inner, half_gap } => {
                let d = p.norm();
                d >= *inner && d <= *outer && p.y.atan2(p.x).abs() > *half_gap
            }
        }
    }
}

impl Notch {
    fn contains(&self, p: Point) -> bool {
        let q = p - self.mouth;
        let inward = q.dot(self.inward);
        q.dot(self.along).abs() <= self.half_width && inward <= self.depth && inward >= -3.0
    }
}

fn in_convex(v: &[Point], p: Point) -> bool {
    (0..v.len()).all(|k| orient(v[k], v[(k + 1) % v.len()], p) >= 0.0)
}

fn regular_vertices(sides: usize, radius: f64) -> Vec<Point> {
    (0..sides)
        .map(|k| {
            let a = -PI / 2.0 + TAU * k as f64 / sides as f64;
            Point::new(radius * a.cos(), radius * a.sin())
        })
        .collect()
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Synth(format!("{name} must be positive, got {v}")))
    }
}

/// Builds the shape-local region and its bounding radius.
fn build_region(shape: &ShapeKind, rng: &mut ChaCha8Rng) -> Result<(Region, f64)> {
    Ok(match *shape {
        ShapeKind::Disc { radius } => {
            positive("radius", radius)?;
            (Region::Disc(radius), radius)
        }
        ShapeKind::Ring { outer, inner, slit } => {
            positive("inner radius", inner)?;
            positive("slit", slit)?;
            if outer <= inner + 2.0 {
                return Err(Error::Synth("ring needs outer > inner + 2".into()));
            }
            if slit >= inner {
                return Err(Error::Synth("ring slit must be narrower than the inner radius".into()));
            }
            (Region::Ring { outer, inner, slit }, outer)
        }
        ShapeKind::RegularPolygon { sides, radius } => {
            positive("radius", radius)?;
            if sides < 3 {
                return Err(Error::Synth("polygon needs at least 3 sides".into()));
            }
            (Region::Convex(regular_vertices(sides, radius)), radius)
        }
        ShapeKind::IndentedPolygon {
            sides,
            radius,
            notches,
            notch_width,
            depth_min,
            depth_max,
        } => {
            positive("radius", radius)?;
            positive("notch width", notch_width)?;
            if sides < 3 {
                return Err(Error::Synth("polygon needs at least 3 sides".into()));
            }
            if !(depth_min > 0.0 && depth_min <= depth_max && depth_max <= 0.45) {
                return Err(Error::Synth(format!("notch depth range {depth_min}..{depth_max} must lie in (0, 0.45]")));
            }
            let hull = regular_vertices(sides, radius);
            let inradius = radius * (PI / sides as f64).cos();
            let edge_len = hull[0].distance(hull[1]);
            let per_edge = notches.div_ceil(sides).max(1);
            // notches share the middle half of each edge
            let slot = 0.5 / per_edge as f64;
            if notch_width > slot * edge_len * 0.8 {
                return Err(Error::Synth("notches too wide for their edges".into()));
            }
            let offset = rng.gen_range(0..sides);
            let mut cut = Vec::with_capacity(notches);
            for j in 0..notches {
                let e = (offset + j) % sides;
                let k = j / sides;
                let (a, b) = (hull[e], hull[(e + 1) % sides]);
                let margin = (notch_width / edge_len).min(slot * 0.4);
                let t = 0.25 + slot * k as f64 + rng.gen_range(margin..(slot - margin).max(margin + 1e-9));
                let along = (b - a) * (1.0 / edge_len);
                let depth = inradius * rng.gen_range(depth_min..=depth_max);
                cut.push(Notch {
                    mouth: a + (b - a) * t,
                    along,
                    inward: Point::new(-along.y, along.x),
                    half_width: notch_width / 2.0,
                    depth,
                });
            }
            (Region::Notched { hull, notches: cut }, radius)
        }
        ShapeKind::StencilBreak {
            half_width,
            half_height,
            cuts,
            cut_width,
        } => {
            positive("half width", half_width)?;
            positive("half height", half_height)?;
            positive("cut width", cut_width)?;
            let spacing = 2.0 * half_width / (cuts + 1) as f64;
            let xs = (1..=cuts)
                .map(|k| -half_width + spacing * k as f64 + rng.gen_range(-0.1..=0.1) * spacing)
                .collect();
            (
                Region::Stencil {
                    a: half_width,
                    b: half_height,
                    cuts: xs,
                    cut_width,
                },
                half_width.hypot(half_height),
            )
        }
        ShapeKind::HingeWorm { length, width, joint_deg } => {
            positive("length", length)?;
            positive("width", width)?;
            if !(joint_deg > 0.0 && joint_deg <= 180.0) {
                return Err(Error::Synth(format!("joint angle {joint_deg} must lie in (0, 180]")));
            }
            let dir = (180.0 - joint_deg).to_radians();
            let joint = Point::new(0.0, 0.0);
            let a = Point::new(-length, 0.0);
            let b = Point::new(length * dir.cos(), length * dir.sin());
            let lo = Point::new(a.x.min(b.x).min(0.0), a.y.min(b.y).min(0.0));
            let hi = Point::new(a.x.max(b.x).max(0.0), a.y.max(b.y).max(0.0));
            let c = (lo + hi) * 0.5;
            let segments = [(joint - c, a - c), (joint - c, b - c)];
            let extent = [a - c, b - c, joint - c].iter().map(|p| p.norm()).fold(0.0, f64::max) + width / 2.0;
            (
                Region::Capsules {
                    segments,
                    radius: width / 2.0,
                },
                extent,
            )
        }
        ShapeKind::Horseshoe { outer, inner, gap_deg } => {
            positive("inner radius", inner)?;
            if outer <= inner + 2.0 {
                return Err(Error::Synth("horseshoe needs outer > inner + 2".into()));
            }
            if !(gap_deg > 0.0 && gap_deg < 300.0) {
                return Err(Error::Synth(format!("gap {gap_deg} must lie in (0, 300)")));
            }
            (
                Region::Sector {
                    outer,
                    inner,
                    half_gap: gap_deg.to_radians() / 2.0,
                },
                outer,
            )
        }
    })
}

/// Rasterizes `spec` into a single-component mask.
pub fn generate(spec: &SynthSpec) -> Result<BinaryMask> {
    if spec.canvas < 16 {
        return Err(Error::Synth("canvas must be at least 16 pixels".into()));
    }
    if !(spec.jitter >= 0.0) || !spec.rotation_deg.is_finite() {
        return Err(Error::Synth("jitter must be non-negative and rotation finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (region, extent) = build_region(&spec.shape, &mut rng)?;
    let half = spec.canvas as f64 / 2.0;
    if extent + spec.jitter > MAX_EXTENT * half {
        return Err(Error::Synth(format!(
            "shape extent {:.1} px exceeds the {:.1} px allowed on a {} px canvas",
            extent + spec.jitter,
            MAX_EXTENT * half,
            spec.canvas
        )));
    }
    let shift = if spec.jitter > 0.0 {
        Point::new(rng.gen_range(-spec.jitter..=spec.jitter), rng.gen_range(-spec.jitter..=spec.jitter))
    } else {
        Point::new(0.0, 0.0)
    };
    let center = Point::new(half, half) + shift;
    let (sin, cos) = spec.rotation_deg.to_radians().sin_cos();
    let mask = BinaryMask::from_fn(spec.canvas, spec.canvas, |x, y| {
        let d = Point::new(x as f64 + 0.5, y as f64 + 0.5) - center;
        // inverse rotation into shape-local coordinates
        region.contains(Point::new(cos * d.x + sin * d.y, -sin * d.x + cos * d.y))
    })?;

    let components = mask.components();
    match components.len() {
        0 => Err(Error::Synth("shape rasterized to nothing".into())),
        1 => Ok(mask),
        n if matches!(spec.shape, ShapeKind::StencilBreak { .. }) => {
            let _ = n;
            mask.isolate_largest()
        }
        n => Err(Error::Synth(format!("shape rasterized to {n} disconnected pieces"))),
    }
}

/// Class names of the default desk-scale benchmark, in manifest order.
pub const BENCHMARK_CLASSES: [&str; 5] = ["disc", "ring", "pentagon", "indented-pentagon", "horseshoe"];

/// The default benchmark: every class in [`BENCHMARK_CLASSES`] with
/// `per_class` instances.
///
/// Each instance gets a uniform random rotation, a scale factor in
/// `[0.85, 1.1]` and up to 4 px of centre jitter. Rings draw their inner
/// radius ratio from `[0.55, 0.7]`; horseshoes draw an inner ratio from
/// `[0.5, 0.6]` and an opening of 60–90°; indented pentagons get 3–6 notches
/// of width 6 px and depth 25–40% of the inradius.
pub fn benchmark_recipe(per_class: usize, seed: u64) -> Vec<(String, String, SynthSpec)> {
    let mut out = Vec::with_capacity(per_class * BENCHMARK_CLASSES.len());
    for (c, class) in BENCHMARK_CLASSES.iter().enumerate() {
        for i in 0..per_class {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((c * 10_000 + i) as u64);
            let s: f64 = rng.gen_range(0.85..=1.1);
            let shape = match *class {
                "disc" => ShapeKind::Disc { radius: 70.0 * s },
                "ring" => ShapeKind::Ring {
                    outer: 70.0 * s,
                    inner: 70.0 * s * rng.gen_range(0.55..=0.7),
                    slit: 4.0,
                },
                "pentagon" => ShapeKind::RegularPolygon { sides: 5, radius: 80.0 * s },
                "indented-pentagon" => ShapeKind::IndentedPolygon {
                    sides: 5,
                    radius: 80.0 * s,
                    notches: rng.gen_range(3..=6),
                    notch_width: 6.0,
                    depth_min: 0.25,
                    depth_max: 0.4,
                },
                _ => ShapeKind::Horseshoe {
                    outer: 75.0 * s,
                    inner: 75.0 * s * rng.gen_range(0.5..=0.6),
                    gap_deg: rng.gen_range(60.0..=90.0),
                },
            };
            let spec = SynthSpec {
                shape,
                canvas: DEFAULT_CANVAS,
                rotation_deg: rng.gen_range(0.0..360.0),
                jitter: 4.0,
                seed: rng.gen(),
            };
            out.push((format!("{class}-{i:02}"), class.to_string(), spec));
        }
    }
    out
}

/// Writes one PGM per entry plus `manifest.tsv` and `recipe.json` into `dir`.
pub fn write_dataset(dir: &Path, entries: &[(String, String, SynthSpec)]) -> Result<DatasetManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = Vec::with_capacity(entries.len());
    for (id, class, spec) in entries {
        let mask = generate(spec).map_err(|e| e.for_shape(id))?;
        let file = format!("{id}.pgm");
        mask.write_pgm(&dir.join(&file))?;
        manifest.push(ManifestEntry {
            id: id.clone(),
            path: dir.join(&file),
            class: class.clone(),
        });
    }
    let manifest = DatasetManifest::new(manifest)?;
    manifest.save(&dir.join("manifest.tsv"))?;
    let recipe: Vec<_> = entries
        .iter()
        .map(|(id, class, spec)| serde_json::json!({ "id": id, "class": class, "spec": spec }))
        .collect();
    let path = dir.join("recipe.json");
    std::fs::write(&path, serde_json::to_string_pretty(&recipe).expect("serializable"))
        .map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
