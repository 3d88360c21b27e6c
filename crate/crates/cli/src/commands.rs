use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde_json::json;

use ssc_core::descriptor::{describe_shape, DescriptorFile};
use ssc_core::idsc::{describe_idsc, IdscDescriptor};
use ssc_core::matching::{fused_cost, ssc_cost};
use ssc_core::retrieval::{
    csv_header, csv_row, describe_manifest, evaluate, load_polygon, required_kinds, BullseyeParams, CostMatrix,
    DatasetManifest, MatrixBuilder, Method, ShapeDescriptors,
};
use ssc_core::synth::{benchmark_recipe, write_dataset, SynthSpec};
use ssc_core::{idsc_cost, Error};

use crate::config::RunConfig;
use crate::{Cli, Command};

/// Failure in the shape pipeline itself, as opposed to bad input.
#[derive(Debug)]
struct PipelineFailure(String);

impl std::fmt::Display for PipelineFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for PipelineFailure {}

/// 1 for input errors, 2 for pipeline failures.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<PipelineFailure>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(e) if is_pipeline_failure(e) => 2,
        _ => 1,
    }
}

fn is_pipeline_failure(e: &Error) -> bool {
    match e {
        Error::Shape { inner, .. } => is_pipeline_failure(inner),
        Error::Io { .. }
        | Error::Decode { .. }
        | Error::InvalidDimensions { .. }
        | Error::EmptyForeground
        | Error::NoComponent { .. }
        | Error::ThinComponent
        | Error::InvalidParameter(_)
        | Error::Manifest(_)
        | Error::MatrixFormat(_)
        | Error::DescriptorFormat(_)
        | Error::SizeMismatch { .. }
        | Error::GridMismatch(..)
        | Error::Synth(_) => false,
        _ => true,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let Cli { config, jobs, command } = cli;
    let resolve = |pipeline, manifest, idsc_matrix| -> Result<RunConfig> {
        let c = RunConfig::resolve(pipeline, config.as_deref(), jobs, manifest, idsc_matrix)?;
        if let Some(j) = c.jobs {
            // only the first call configures the global pool
            let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
        }
        Ok(c)
    };
    match command {
        Command::Describe { manifest, out, pipeline } => describe(&resolve(&pipeline, manifest, None)?, &out),
        Command::Match { a, b, pipeline } => match_pair(&resolve(&pipeline, None, None)?, &a, &b),
        Command::Matrix {
            manifest,
            out,
            descriptors,
            idsc_matrix,
            resume,
            pipeline,
        } => matrix(&resolve(&pipeline, manifest, idsc_matrix)?, &out, descriptors.as_deref(), resume),
        Command::Evaluate {
            matrix,
            manifest,
            out,
            pr,
            similarity,
            exclude_self,
            top_k,
            window,
            class_size,
        } => {
            let c = resolve(&Default::default(), manifest, None)?;
            let bp = BullseyeParams {
                window,
                class_size,
                include_self: !exclude_self,
            };
            evaluate_cmd(&c, &matrix, out.as_deref(), pr, similarity, &bp, top_k)
        }
        Command::Synth {
            out,
            spec,
            per_class,
            seed,
        } => synth(&out, spec.as_deref(), per_class, seed),
    }
}

fn descriptor_path(dir: &Path, id: &str, kind: &str) -> PathBuf {
    dir.join(format!("{id}.{kind}.json"))
}

fn describe(c: &RunConfig, out: &Path) -> Result<()> {
    let manifest = DatasetManifest::load(c.manifest()?)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let want_ssc = c.method != Method::Idsc;
    let want_idsc = c.method != Method::Ssc;
    let results: Vec<Result<(), Error>> = manifest
        .entries()
        .par_iter()
        .map(|e| {
            let polygon = load_polygon(&e.path)?;
            if want_ssc {
                let d = describe_shape(&polygon, &c.params.ssc)?;
                DescriptorFile::from_ssc(&e.id, &d, &c.params.ssc).save(&descriptor_path(out, &e.id, "ssc"))?;
            }
            if want_idsc {
                let d = describe_idsc(&polygon, &c.params.idsc)?;
                d.to_file(&e.id).save(&descriptor_path(out, &e.id, "idsc"))?;
            }
            Ok(())
        })
        .collect();
    let failures: Vec<Error> = manifest
        .entries()
        .iter()
        .zip(results)
        .filter_map(|(e, r)| r.err().map(|err| err.for_shape(&e.id)))
        .collect();
    if failures.is_empty() {
        eprintln!("described {} shapes into {}", manifest.len(), out.display());
        return Ok(());
    }
    for f in &failures {
        eprintln!("failed: {f}");
    }
    let summary = format!("{} of {} shapes failed", failures.len(), manifest.len());
    if failures.iter().any(|f| !is_pipeline_failure(f)) {
        bail!(summary)
    }
    Err(PipelineFailure(summary).into())
}

fn match_pair(c: &RunConfig, a: &Path, b: &Path) -> Result<()> {
    let (pa, pb) = (load_polygon(a)?, load_polygon(b)?);
    let (want_ssc, want_idsc) = required_kinds(c.method, false);
    let fusion = &c.params.fusion;
    let ssc = if want_ssc {
        let (da, db) = (describe_shape(&pa, &c.params.ssc)?, describe_shape(&pb, &c.params.ssc)?);
        Some(ssc_cost(&da, &db, fusion)?)
    } else {
        None
    };
    let idsc = if want_idsc {
        let (da, db) = (describe_idsc(&pa, &c.params.idsc)?, describe_idsc(&pb, &c.params.idsc)?);
        Some(idsc_cost(&da, &db, fusion)?)
    } else {
        None
    };
    let cost = match (c.method, ssc, idsc) {
        (Method::Ssc, Some(s), _) => s,
        (Method::Idsc, _, Some(i)) => i,
        (Method::Fused, Some(s), Some(i)) => fused_cost(i, s, fusion),
        _ => unreachable!("required kinds computed above"),
    };
    let report = json!({
        "a": a, "b": b, "method": c.method, "cost": cost, "ssc": ssc, "idsc": idsc,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn load_descriptors(dir: &Path, manifest: &DatasetManifest, want_ssc: bool, want_idsc: bool) -> Result<ShapeDescriptors> {
    let load = |id: &str, kind: &str| -> Result<DescriptorFile> {
        let path = descriptor_path(dir, id, kind);
        if !path.exists() {
            bail!("missing {kind} descriptor for shape {id:?} at {}", path.display());
        }
        Ok(DescriptorFile::load(&path)?)
    };
    let mut out = ShapeDescriptors {
        ids: manifest.ids(),
        ..Default::default()
    };
    if want_ssc {
        out.ssc = Some(manifest.ids().iter().map(|id| Ok(load(id, "ssc")?.to_ssc()?)).collect::<Result<_>>()?);
    }
    if want_idsc {
        out.idsc = Some(
            manifest
                .ids()
                .iter()
                .map(|id| Ok(IdscDescriptor::from_file(&load(id, "idsc")?)?))
                .collect::<Result<_>>()?,
        );
    }
    Ok(out)
}

/// Rows of an earlier run that can be kept: same header, ids in manifest
/// order, complete and parseable. Returns the kept text and row count.
fn resumable_prefix(path: &Path, header: &str, ids: &[String]) -> Result<(String, usize)> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((header.to_string(), 0)),
        Err(e) => return Err(e).with_context(|| format!("reading {}", path.display())),
    };
    let mut lines = text.split_inclusive('\n');
    match lines.next() {
        Some(h) if h == header => {}
        Some(_) => bail!(
            "{} was built with different settings; remove it or drop --resume",
            path.display()
        ),
        None => return Ok((header.to_string(), 0)),
    }
    let mut kept = header.to_string();
    let mut rows = 0;
    for line in lines {
        let complete = line.ends_with('\n') && rows < ids.len() && {
            let mut fields = line.trim_end().split(',');
            fields.next() == Some(ids[rows].as_str())
                && fields.clone().count() == ids.len()
                && fields.all(|v| v.parse::<f64>().is_ok_and(f64::is_finite))
        };
        if !complete {
            break;
        }
        kept.push_str(line);
        rows += 1;
    }
    Ok((kept, rows))
}

fn matrix(c: &RunConfig, out: &Path, descriptors_dir: Option<&Path>, resume: bool) -> Result<()> {
    let manifest = DatasetManifest::load(c.manifest()?)?;
    let ids = manifest.ids();
    let external = c
        .idsc_matrix
        .as_deref()
        .map(|p| -> Result<CostMatrix> { Ok(CostMatrix::load(p)?.align_to(&ids)?) })
        .transpose()?;
    let (want_ssc, want_idsc) = required_kinds(c.method, external.is_some());
    let header = csv_header(Some(c.method), Some(&c.params.hash()), Some(c.params.ssc.seed), ids.len());
    let (prefix, done) = if resume {
        resumable_prefix(out, &header, &ids)?
    } else {
        (header.clone(), 0)
    };
    if done == ids.len() {
        fs::write(out, prefix).with_context(|| format!("writing {}", out.display()))?;
        eprintln!("all {done} rows already present in {}", out.display());
        return Ok(());
    }
    let descriptors = match descriptors_dir {
        Some(dir) => load_descriptors(dir, &manifest, want_ssc, want_idsc)?,
        None => describe_manifest(&manifest, &c.params, want_ssc, want_idsc)?,
    };
    let builder = MatrixBuilder::new(c.method, c.params.fusion, &descriptors, external.as_ref())?;

    fs::write(out, prefix).with_context(|| format!("writing {}", out.display()))?;
    let mut file = OpenOptions::new()
        .append(true)
        .open(out)
        .with_context(|| format!("opening {}", out.display()))?;
    builder.build_rows(done, |i, row| {
        file.write_all(csv_row(&ids[i], row).as_bytes())
            .and_then(|_| file.flush())
            .map_err(|cause| Error::Io {
                path: out.to_path_buf(),
                cause,
            })
    })?;
    eprintln!(
        "wrote {}x{} {} matrix to {} ({} rows resumed)",
        ids.len(),
        ids.len(),
        c.method,
        out.display(),
        done
    );
    Ok(())
}

fn evaluate_cmd(
    c: &RunConfig,
    matrix_path: &Path,
    out: Option<&Path>,
    pr: Option<PathBuf>,
    similarity: bool,
    bp: &BullseyeParams,
    top_k: usize,
) -> Result<()> {
    let manifest = DatasetManifest::load(c.manifest()?)?;
    let mut matrix = CostMatrix::load(matrix_path)?;
    if similarity {
        matrix = matrix.from_similarity();
    }
    if matrix.len() != manifest.len() {
        return Err(Error::SizeMismatch {
            expected: manifest.len(),
            got: matrix.len(),
        })
        .context(format!("{} does not match the manifest", matrix_path.display()));
    }
    let matrix = matrix.align_to(&manifest.ids())?;
    if top_k == 0 || top_k > matrix.len() {
        bail!("--top-k must lie in 1..={}", matrix.len());
    }
    let report = evaluate(&matrix, &manifest, bp, top_k)?;
    let json = serde_json::to_string_pretty(&report)?;
    match out {
        Some(path) => {
            fs::write(path, format!("{json}\n")).with_context(|| format!("writing {}", path.display()))?;
            let pr_path = pr.unwrap_or_else(|| path.with_extension("pr.csv"));
            fs::write(&pr_path, report.pr_csv()).with_context(|| format!("writing {}", pr_path.display()))?;
            eprintln!(
                "bullseye {:.4}, top-{} {:.4}, first wrong {:.3}",
                report.bullseye.overall, report.top_k, report.top_k_correct, report.first_wrong_position
            );
        }
        None => {
            println!("{json}");
            if let Some(p) = pr {
                fs::write(&p, report.pr_csv()).with_context(|| format!("writing {}", p.display()))?;
            }
        }
    }
    Ok(())
}

fn synth(out: &Path, spec: Option<&Path>, per_class: usize, seed: u64) -> Result<()> {
    let entries = match spec {
        None => {
            if per_class == 0 {
                bail!("--per-class must be at least 1");
            }
            benchmark_recipe(per_class, seed)
        }
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let value: serde_json::Value = serde_json::from_str(&text).context("spec is not valid JSON")?;
            parse_spec_entries(value)?
        }
    };
    let manifest = write_dataset(out, &entries)?;
    eprintln!("wrote {} shapes to {}", manifest.len(), out.display());
    Ok(())
}

/// Either a list of `{id, class, spec}` objects or one bare spec.
fn parse_spec_entries(value: serde_json::Value) -> Result<Vec<(String, String, SynthSpec)>> {
    let entry = |v: serde_json::Value, k: usize| -> Result<(String, String, SynthSpec)> {
        if v.get("spec").is_some() {
            let spec: SynthSpec = serde_json::from_value(v["spec"].clone()).map_err(|e| anyhow!("entry {k}: {e}"))?;
            let kind = spec_kind(&spec);
            let id = v.get("id").and_then(|x| x.as_str()).map_or_else(|| format!("shape-{k:03}"), str::to_string);
            let class = v.get("class").and_then(|x| x.as_str()).map_or(kind, str::to_string);
            Ok((id, class, spec))
        } else {
            let spec: SynthSpec = serde_json::from_value(v).map_err(|e| anyhow!("entry {k}: {e}"))?;
            Ok((format!("shape-{k:03}"), spec_kind(&spec), spec))
        }
    };
    match value {
        serde_json::Value::Array(items) => {
            if items.is_empty() {
                bail!("spec list is empty");
            }
            items.into_iter().enumerate().map(|(k, v)| entry(v, k)).collect()
        }
        v => Ok(vec![entry(v, 0)?]),
    }
}

fn spec_kind(spec: &SynthSpec) -> String {
    serde_json::to_value(&spec.shape).ok().and_then(|v| v["kind"].as_str().map(str::to_string)).unwrap_or_default()
}
