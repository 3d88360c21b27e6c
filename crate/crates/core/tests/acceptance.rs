//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary so the report is printed on every `cargo test`.
//! Pass a substring (e.g. `C08`) to run a subset. Criterion C11 needs a
//! user-supplied dataset manifest in `SSC_MPEG7_MANIFEST` and reports SKIP
//! otherwise.

use std::f64::consts::TAU;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use ssc_core::contour::{convex_hull, resample_uniform, trace_boundary, Polygon};
use ssc_core::descriptor::{describe_shape, sample_shape, SscDescriptor, SscParams};
use ssc_core::geometry::{contains_closed, signed_area, Point};
use ssc_core::idsc::{describe_contour_sc, describe_idsc, idsc_cost, inner_geodesics, visibility_graph, IdscParams};
use ssc_core::matching::{chi2, dp_align, ssc_cost, FusionParams};
use ssc_core::retrieval::{
    bullseye, describe_manifest, first_wrong_position, top_k_correct, BullseyeParams, CostMatrix, DatasetManifest,
    MatrixBuilder, Method, PipelineParams,
};
use ssc_core::sampling::{allocate_counts, dense_points, DensePointSet, SparsePointSet};
use ssc_core::synth::{benchmark_recipe, generate, write_dataset, ShapeKind, SynthSpec};
use ssc_core::triangulate::triangulate_polygon;
use ssc_core::Histogram;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Criterion = (&'static str, &'static str, Duration, fn() -> Option<Outcome>);

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [Criterion; 12] = [
        ("C01", "sampling exactness", secs(30), c01_sampling_exactness),
        ("C02", "count conservation", secs(5), c02_conservation),
        ("C03", "triangulation laws", secs(60), c03_triangulation),
        ("C04", "interior uniformity", secs(10), c04_uniformity),
        ("C05", "invariance suite", secs(60), c05_invariance),
        ("C06", "disc vs ring separation", secs(300), c06_disc_ring),
        ("C07", "indentation robustness", secs(600), c07_indentation),
        ("C08", "alignment vs brute force", secs(120), c08_dp_oracle),
        ("C09", "inner distance sanity", secs(300), c09_idsc),
        ("C10", "desk-scale retrieval", secs(1800), c10_desk_retrieval),
        ("C11", "full MPEG-7 retrieval", secs(6 * 3600), c11_mpeg7),
        ("C12", "metric laws", secs(60), c12_metrics),
    ];
    let mut failed = 0;
    for (id, name, budget, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| id.contains(p.as_str()) || name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f));
        let elapsed = start.elapsed();
        let (status, detail) = match result {
            Ok(None) => ("SKIP", "dataset not supplied (set SSC_MPEG7_MANIFEST)".to_string()),
            Ok(Some(o)) if o.pass && elapsed <= budget => ("PASS", o.detail),
            Ok(Some(o)) if o.pass => ("FAIL", format!("{}; over time budget {budget:?}", o.detail)),
            Ok(Some(o)) => ("FAIL", o.detail),
            Err(e) => ("FAIL", format!("panicked: {}", panic_message(&e))),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("[{status}] {id} {name}: {detail} ({:.1}s)", elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn panic_message(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "unknown panic".into())
}

/// Star-shaped polygon with `k` vertices: jittered increasing angles, random
/// radii. Always simple.
fn random_star(rng: &mut ChaCha8Rng, k: usize) -> Polygon {
    let angles: Vec<f64> = (0..k).map(|i| (i as f64 + rng.gen_range(0.0..0.9)) * TAU / k as f64).collect();
    let scale = rng.gen_range(0.5..200.0);
    let c = Point::new(rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0));
    let pts = angles
        .iter()
        .map(|&a| {
            let r = scale * rng.gen_range(0.3..1.0);
            c + Point::new(r * a.cos(), r * a.sin())
        })
        .collect();
    Polygon::new(pts).expect("star polygon is valid")
}

fn mask_polygon(spec: &SynthSpec) -> Polygon {
    trace_boundary(&generate(spec).expect("synthetic spec is valid")).expect("traceable")
}

fn c01_sampling_exactness() -> Option<Outcome> {
    const TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut checked, mut bad_count, mut outside) = (0, 0, 0);
    for _ in 0..200 {
        let k = rng.gen_range(5..=40);
        let region = random_star(&mut rng, k);
        let mesh = triangulate_polygon(region.vertices()).unwrap();
        for n_dp in [1, 7, 100, 2000] {
            let dense = dense_points(&mesh, n_dp, 42).unwrap();
            checked += 1;
            bad_count += usize::from(dense.points.len() != n_dp);
            outside += dense.points.iter().filter(|&&p| !contains_closed(region.vertices(), p, TOL)).count();
        }
    }
    Some(outcome(
        bad_count == 0 && outside == 0,
        format!("{checked} runs, {bad_count} wrong counts, {outside} points outside (tol {TOL:e})"),
    ))
}

fn c02_conservation() -> Option<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad = 0;
    let mut with_zeros = 0;
    for _ in 0..10_000 {
        let len = rng.gen_range(1..=60);
        let mut areas: Vec<f64> =
            (0..len).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(1e-6..1e3) }).collect();
        if areas.iter().all(|&a| a == 0.0) {
            areas[0] = 1.0;
        }
        with_zeros += usize::from(areas.contains(&0.0));
        let n_dp = rng.gen_range(0..5000);
        let alloc = allocate_counts(&areas, n_dp).unwrap();
        let zero_ok = areas.iter().zip(&alloc.counts).all(|(&a, &c)| a > 0.0 || c == 0);
        bad += usize::from(alloc.total() != n_dp || !zero_ok);
    }
    Some(outcome(bad == 0, format!("10000 vectors ({with_zeros} with zero entries), {bad} violations")))
}

fn c03_triangulation() -> Option<Outcome> {
    const REL_TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut wrong_count, mut worst) = (0, 0.0f64);
    for _ in 0..100 {
        let outline = random_star(&mut rng, 100);
        let mesh = triangulate_polygon(outline.vertices()).unwrap();
        wrong_count += usize::from(mesh.len() != 98);
        let shoelace = signed_area(outline.vertices()).abs();
        let summed: f64 = mesh.areas.iter().sum();
        worst = worst.max((summed - shoelace).abs() / shoelace);
    }
    Some(outcome(
        wrong_count == 0 && worst <= REL_TOL,
        format!("100 polygons, {wrong_count} without 98 triangles, worst area error {worst:.2e} (tol {REL_TOL:e})"),
    ))
}

fn c04_uniformity() -> Option<Outcome> {
    const N: usize = 100_000;
    const FRACTION_TOL: f64 = 0.01;
    const ALPHA: f64 = 0.001;
    // 1000-gon: its area differs from the disc by 7e-6 relative
    let sides = 1000;
    let disc: Vec<Point> =
        (0..sides).map(|k| TAU * k as f64 / sides as f64).map(|a| Point::new(a.cos(), a.sin())).collect();
    let mesh = triangulate_polygon(&disc).unwrap();
    let pts = dense_points(&mesh, N, 42).unwrap().points;
    let inner = pts.iter().filter(|p| p.norm() < 0.5).count() as f64 / N as f64;

    // 4 rings of equal area × 4 quadrants
    let mut cells = [0usize; 16];
    for p in &pts {
        let ring = ((p.norm() * p.norm() * 4.0) as usize).min(3);
        let sector = ((p.y.atan2(p.x).rem_euclid(TAU) / TAU * 4.0) as usize).min(3);
        cells[ring * 4 + sector] += 1;
    }
    let expected = N as f64 / 16.0;
    let stat: f64 = cells.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let critical = ChiSquared::new(15.0).unwrap().inverse_cdf(1.0 - ALPHA);
    Some(outcome(
        (inner - 0.25).abs() <= FRACTION_TOL && stat < critical,
        format!("inner fraction {inner:.4} (0.25 ± {FRACTION_TOL}), chi2 {stat:.2} < {critical:.2} (15 dof, alpha {ALPHA})"),
    ))
}

fn c05_invariance() -> Option<Outcome> {
    const ROT_TOL: f64 = 1e-9;
    let params = SscParams::default();
    let spec = SynthSpec::new(ShapeKind::IndentedPolygon {
        sides: 5,
        radius: 80.0,
        notches: 4,
        notch_width: 6.0,
        depth_min: 0.25,
        depth_max: 0.4,
    })
    .rotated(20.0)
    .seeded(9);
    let poly = mask_polygon(&spec);
    let base = describe_shape(&poly, &params).unwrap();

    let moved = describe_shape(&poly.map(|p| p + Point::new(37.0, -211.0)).unwrap(), &params).unwrap();
    let translation = moved.histograms == base.histograms;

    let doubled = describe_shape(&poly.map(|p| p * 2.0).unwrap(), &params).unwrap();
    let scale = doubled.histograms == base.histograms;

    // rotate the sampled point sets themselves: the outline anchor moves
    // under rotation, so only the point-level map is comparable
    let s = sample_shape(&poly, &params).unwrap();
    let rot = |p: Point| Point::new(-p.y, p.x);
    let sparse = SparsePointSet {
        points: s.sparse.points.iter().copied().map(rot).collect(),
        tangents: s.sparse.tangents.iter().copied().map(rot).collect(),
    };
    let dense = DensePointSet {
        points: s.dense.points.iter().copied().map(rot).collect(),
        seed: s.dense.seed,
    };
    let turned = SscDescriptor::from_points(&sparse, &dense, params.grid, true).unwrap();
    let max_diff = max_bin_diff(&base.histograms, &turned.histograms);
    Some(outcome(
        translation && scale && max_diff < ROT_TOL,
        format!(
            "translation identical: {translation}, scale x2 identical: {scale}, 90° rotation max bin diff {max_diff:.1e} (tol {ROT_TOL:e})"
        ),
    ))
}

fn max_bin_diff(a: &[Histogram], b: &[Histogram]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(h, g)| h.bins.iter().zip(&g.bins).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

fn c06_disc_ring() -> Option<Outcome> {
    const RATIO: f64 = 3.0;
    let params = SscParams::default();
    let fusion = FusionParams::default();
    let disc = mask_polygon(&SynthSpec::new(ShapeKind::Disc { radius: 60.0 }));
    let ring = mask_polygon(&SynthSpec::new(ShapeKind::Ring {
        outer: 60.0,
        inner: 40.0,
        slit: 4.0,
    }));
    let d = describe_shape(&disc, &params).unwrap();
    let reseeded = describe_shape(&disc, &SscParams { seed: 43, ..params.clone() }).unwrap();
    let r = describe_shape(&ring, &params).unwrap();
    let cross = ssc_cost(&d, &r, &fusion).unwrap();
    let same = ssc_cost(&d, &reseeded, &fusion).unwrap();
    Some(outcome(
        cross > RATIO * same,
        format!("cost(disc, ring) {cross:.3} vs {RATIO} x cost(disc, reseeded disc) {:.3}", RATIO * same),
    ))
}

fn c07_indentation() -> Option<Outcome> {
    let params = SscParams::default();
    let fusion = FusionParams::default();
    let pentagon = describe_shape(
        &mask_polygon(&SynthSpec::new(ShapeKind::RegularPolygon { sides: 5, radius: 80.0 })),
        &params,
    )
    .unwrap();
    let disc = describe_shape(&mask_polygon(&SynthSpec::new(ShapeKind::Disc { radius: 80.0 })), &params).unwrap();
    let to_disc = ssc_cost(&pentagon, &disc, &fusion).unwrap();
    let mut worst = 0.0f64;
    let mut passes = 0;
    for seed in 0..10 {
        let spec = SynthSpec::new(ShapeKind::IndentedPolygon {
            sides: 5,
            radius: 80.0,
            notches: 5,
            notch_width: 6.0,
            depth_min: 0.25,
            depth_max: 0.4,
        })
        .seeded(seed);
        let indented = describe_shape(&mask_polygon(&spec), &params).unwrap();
        let c = ssc_cost(&pentagon, &indented, &fusion).unwrap();
        worst = worst.max(c);
        passes += usize::from(c < to_disc);
    }
    Some(outcome(
        passes == 10,
        format!("{passes}/10 notch seeds closer than the disc (worst {worst:.3} vs disc {to_disc:.3})"),
    ))
}

/// Minimum over every shift of `b` and every increasing partial matching.
fn brute_force(a: &[Histogram], b: &[Histogram], tau: f64) -> f64 {
    let m = b.len();
    let cost: Vec<Vec<f64>> = a.iter().map(|h| b.iter().map(|g| chi2(h, g).unwrap().min(tau)).collect()).collect();
    fn rec(cost: &[Vec<f64>], i: usize, next: usize, shift: usize, tau: f64) -> f64 {
        if i == cost.len() {
            return 0.0;
        }
        let m = cost[0].len();
        let mut best = tau + rec(cost, i + 1, next, shift, tau);
        for p in next..m {
            best = best.min(cost[i][(p + shift) % m] + rec(cost, i + 1, p + 1, shift, tau));
        }
        best
    }
    (0..m).map(|s| rec(&cost, 0, 0, s, tau)).fold(f64::INFINITY, f64::min)
}

fn c08_dp_oracle() -> Option<Outcome> {
    const TOL: f64 = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let random_hist = |rng: &mut ChaCha8Rng| {
        let mut bins: Vec<f64> = (0..6).map(|_| if rng.gen_bool(0.4) { 0.0 } else { rng.gen::<f64>() }).collect();
        let s: f64 = bins.iter().sum();
        if s == 0.0 {
            bins[0] = 1.0;
        } else {
            bins.iter_mut().for_each(|b| *b /= s);
        }
        Histogram { bins }
    };
    let (mut worst, mut bad_phi) = (0.0f64, 0);
    for _ in 0..500 {
        let (n, m) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
        let a: Vec<Histogram> = (0..n).map(|_| random_hist(&mut rng)).collect();
        let b: Vec<Histogram> = (0..m).map(|_| random_hist(&mut rng)).collect();
        let tau = rng.gen_range(0.05..1.0);
        let params = FusionParams {
            tau,
            ..FusionParams::default()
        };
        let r = dp_align(&a, &b, &params).unwrap();
        worst = worst.max((r.total - brute_force(&a, &b, tau)).abs());
        // matched columns must increase after undoing the chosen shift
        let cols: Vec<usize> = r.phi.iter().flatten().map(|&c| (c + m - r.shift) % m).collect();
        bad_phi += usize::from(cols.windows(2).any(|w| w[0] >= w[1]));
    }
    Some(outcome(
        worst <= TOL && bad_phi == 0,
        format!("500 instances, max |dp - brute force| {worst:.1e} (tol {TOL:e}), {bad_phi} non-monotone matchings"),
    ))
}

fn c09_idsc() -> Option<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut mismatches = 0;
    for _ in 0..20 {
        let cloud: Vec<Point> =
            (0..30).map(|_| Point::new(rng.gen_range(-50.0..50.0), rng.gen_range(-30.0..30.0))).collect();
        let hull = convex_hull(&cloud).unwrap();
        let samples = resample_uniform(&hull, 100).unwrap();
        let geo = inner_geodesics(&visibility_graph(&samples, &samples.polygon().unwrap()));
        for i in 0..100 {
            for j in 0..100 {
                mismatches += usize::from(geo.dist(i, j) != samples.points[i].distance(samples.points[j]));
            }
        }
    }

    let worm = |joint_deg| {
        mask_polygon(&SynthSpec::new(ShapeKind::HingeWorm {
            length: 70.0,
            width: 20.0,
            joint_deg,
        }))
    };
    let (straight, bent) = (worm(180.0), worm(120.0));
    let (params, fusion) = (IdscParams::default(), FusionParams::default());
    let inner = idsc_cost(
        &describe_idsc(&straight, &params).unwrap(),
        &describe_idsc(&bent, &params).unwrap(),
        &fusion,
    )
    .unwrap();
    let euclid = idsc_cost(
        &describe_contour_sc(&straight, &params).unwrap(),
        &describe_contour_sc(&bent, &params).unwrap(),
        &fusion,
    )
    .unwrap();
    Some(outcome(
        mismatches == 0 && inner < euclid,
        format!("convex: {mismatches} entries differ from Euclidean; hinge 120°: inner {inner:.3} < euclidean {euclid:.3}"),
    ))
}

fn c10_desk_retrieval() -> Option<Outcome> {
    const MIN_FUSED: f64 = 0.90;
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_dataset(dir.path(), &benchmark_recipe(20, 42)).unwrap();
    let params = PipelineParams::default();
    let descriptors = describe_manifest(&manifest, &params, true, true).unwrap();
    let score = |method| {
        let m = MatrixBuilder::new(method, params.fusion, &descriptors, None)
            .unwrap()
            .build(manifest.ids())
            .unwrap();
        bullseye(&m, &manifest, &BullseyeParams::default()).unwrap()
    };
    let (fused, idsc) = (score(Method::Fused), score(Method::Idsc));
    let classes: Vec<String> = fused
        .per_class
        .iter()
        .zip(&idsc.per_class)
        .map(|(f, i)| format!("{} {:.2}/{:.2}", f.class, f.score, i.score))
        .collect();
    Some(outcome(
        fused.overall >= idsc.overall && fused.overall >= MIN_FUSED,
        format!(
            "bullseye fused {:.4} >= idsc {:.4}, fused >= {MIN_FUSED}; per class fused/idsc: {}",
            fused.overall,
            idsc.overall,
            classes.join(", ")
        ),
    ))
}

fn c11_mpeg7() -> Option<Outcome> {
    const REF_FUSED: f64 = 0.9165;
    const REF_TOP20: f64 = 0.8378;
    let path = PathBuf::from(std::env::var_os("SSC_MPEG7_MANIFEST")?);
    let manifest = DatasetManifest::load(&path).unwrap();
    let params = PipelineParams::default();
    let descriptors = describe_manifest(&manifest, &params, true, true).unwrap();
    let build = |method| {
        MatrixBuilder::new(method, params.fusion, &descriptors, None)
            .unwrap()
            .build(manifest.ids())
            .unwrap()
    };
    let (fused, idsc): (CostMatrix, CostMatrix) = (build(Method::Fused), build(Method::Idsc));
    let bp = BullseyeParams::default();
    let f = bullseye(&fused, &manifest, &bp).unwrap().overall;
    let i = bullseye(&idsc, &manifest, &bp).unwrap().overall;
    let top = top_k_correct(&fused, &manifest, 20).unwrap();
    Some(outcome(
        (f - REF_FUSED).abs() <= 0.025 && f > i && (top - REF_TOP20).abs() <= 0.03,
        format!("fused bullseye {f:.4} (ref {REF_FUSED} ± 0.025), idsc {i:.4}, top-20 {top:.4} (ref {REF_TOP20} ± 0.03)"),
    ))
}

fn c12_metrics() -> Option<Outcome> {
    const RANDOM_EXPECTED: f64 = 40.0 / 1400.0;
    const RANDOM_TOL: f64 = 0.01;
    let (classes, size) = (70, 20);
    let n = classes * size;
    let ids: Vec<String> = (0..n).map(|k| format!("s{k:04}")).collect();
    let labels: Vec<String> = (0..n).map(|k| format!("c{:02}", k / size)).collect();
    let manifest = DatasetManifest::from_labels(&ids, &labels).unwrap();

    let block: Vec<f64> = (0..n * n).map(|k| f64::from((k / n) / size != (k % n) / size)).collect();
    let perfect = CostMatrix::new(ids.clone(), block).unwrap();
    let bp = BullseyeParams::default();
    let perfect_score = bullseye(&perfect, &manifest, &bp).unwrap().overall;
    let fwp = first_wrong_position(&perfect, &manifest).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let trials: Vec<f64> = (0..20)
        .map(|_| {
            let m = CostMatrix::new(ids.clone(), (0..n * n).map(|_| rng.gen::<f64>()).collect()).unwrap();
            bullseye(&m, &manifest, &bp).unwrap().overall
        })
        .collect();
    let random_mean = trials.iter().sum::<f64>() / trials.len() as f64;
    Some(outcome(
        perfect_score == 1.0 && fwp == (size + 1) as f64 && (random_mean - RANDOM_EXPECTED).abs() <= RANDOM_TOL,
        format!(
            "perfect bullseye {perfect_score}, ideal first wrong {fwp} (want {}), random bullseye {random_mean:.4} ({RANDOM_EXPECTED:.4} ± {RANDOM_TOL})",
            size + 1
        ),
    ))
}
