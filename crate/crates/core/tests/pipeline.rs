//! End-to-end runs of the library: images on disk to ranked retrievals.

use ssc_core::descriptor::{describe_shape, DescriptorFile, SscParams};
use ssc_core::retrieval::{
    build_cost_matrix, bullseye, evaluate, BullseyeParams, CostMatrix, DatasetManifest, Method, PipelineParams,
};
use ssc_core::synth::{benchmark_recipe, generate, write_dataset, ShapeKind, SynthSpec};
use ssc_core::{load_mask, trace_boundary, Error};

fn small_params() -> PipelineParams {
    let mut p = PipelineParams::default();
    p.ssc.n_sparse = 60;
    p.ssc.n_dense = 500;
    p.idsc.n_points = 60;
    p
}

#[test]
fn written_masks_reload_identically() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec::new(ShapeKind::Horseshoe {
        outer: 70.0,
        inner: 40.0,
        gap_deg: 70.0,
    })
    .rotated(33.0);
    let mask = generate(&spec).unwrap();
    let path = dir.path().join("h.pgm");
    mask.write_pgm(&path).unwrap();
    assert_eq!(load_mask(&path).unwrap(), mask);
}

#[test]
fn descriptor_file_survives_disk() {
    let dir = tempfile::tempdir().unwrap();
    let poly = trace_boundary(&generate(&SynthSpec::new(ShapeKind::Disc { radius: 50.0 })).unwrap()).unwrap();
    let params = SscParams::default();
    let d = describe_shape(&poly, &params).unwrap();
    let path = dir.path().join("disc.json");
    DescriptorFile::from_ssc("disc", &d, &params).save(&path).unwrap();
    assert_eq!(DescriptorFile::load(&path).unwrap().to_ssc().unwrap(), d);
}

#[test]
fn identical_shapes_cost_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec::new(ShapeKind::RegularPolygon { sides: 6, radius: 60.0 });
    let entries: Vec<_> = (0..3).map(|k| (format!("hex{k}"), "hex".to_string(), spec.clone())).collect();
    let manifest = write_dataset(dir.path(), &entries).unwrap();
    let m = build_cost_matrix(&manifest, &small_params(), Method::Fused, None).unwrap();
    assert_eq!(m.len(), 3);
    assert!(m.values().iter().all(|&v| v == 0.0));
    assert_eq!(m.seed, Some(42));
}

#[test]
fn small_benchmark_ranks_classes_together() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_dataset(dir.path(), &benchmark_recipe(3, 7)).unwrap();
    let reloaded = DatasetManifest::load(&dir.path().join("manifest.tsv")).unwrap();
    assert_eq!(reloaded, manifest);
    let m = build_cost_matrix(&manifest, &small_params(), Method::Fused, None).unwrap();
    let bp = BullseyeParams {
        window: 6,
        class_size: 3,
        include_self: true,
    };
    let b = bullseye(&m, &manifest, &bp).unwrap();
    assert!(b.overall >= 0.9, "bullseye {}", b.overall);
    let report = evaluate(&m, &manifest, &bp, 3).unwrap();
    assert_eq!(report.precision_recall.len(), 2);

    // the CSV form scores the same
    let path = dir.path().join("m.csv");
    m.save(&path).unwrap();
    let back = CostMatrix::load(&path).unwrap();
    assert_eq!(back, m);
    assert_eq!(evaluate(&back, &manifest, &bp, 3).unwrap(), report);
}

#[test]
fn external_idsc_matrix_is_fused() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_dataset(dir.path(), &benchmark_recipe(1, 3)).unwrap();
    let params = small_params();
    let ssc = build_cost_matrix(&manifest, &params, Method::Ssc, None).unwrap();
    // reversed row order: the builder must follow ids, not positions
    let mut ids = manifest.ids();
    ids.reverse();
    let n = ids.len();
    let ext = CostMatrix::new(ids, vec![1.0; n * n]).unwrap();
    let fused = build_cost_matrix(&manifest, &params, Method::Fused, Some(&ext)).unwrap();
    for (f, s) in fused.values().iter().zip(ssc.values()) {
        assert_eq!(*f, (4.0 * s).min(1.0));
    }
}

#[test]
fn failures_name_the_shape() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.pgm");
    generate(&SynthSpec::new(ShapeKind::Disc { radius: 30.0 })).unwrap().write_pgm(&good).unwrap();
    std::fs::write(
        dir.path().join("m.tsv"),
        format!("good\t{}\tdisc\nghost\tmissing.pgm\tdisc\n", good.display()),
    )
    .unwrap();
    let manifest = DatasetManifest::load(&dir.path().join("m.tsv")).unwrap();
    match build_cost_matrix(&manifest, &small_params(), Method::Ssc, None) {
        Err(Error::Shape { id, inner }) => {
            assert_eq!(id, "ghost");
            assert!(matches!(*inner, Error::Io { .. }));
        }
        other => panic!("expected a shape error, got {other:?}"),
    }
}
