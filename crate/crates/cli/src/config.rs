//! Run configuration: command-line flags over a key=value file over defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;

use ssc_core::descriptor::SscParams;
use ssc_core::idsc::IdscParams;
use ssc_core::matching::FusionParams;
use ssc_core::retrieval::{Method, PipelineParams};

/// Keys accepted in a config file.
pub const CONFIG_KEYS: [&str; 14] = [
    "nb",
    "nsp",
    "ndp",
    "alpha",
    "tau",
    "seed",
    "method",
    "rotate",
    "symmetric",
    "starts",
    "idsc_points",
    "jobs",
    "manifest",
    "idsc_matrix",
];

/// Pipeline flags shared by every subcommand that computes descriptors or
/// costs. `None` means "not given on the command line".
#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// Boundary samples used for triangulation.
    #[arg(long)]
    pub nb: Option<usize>,
    /// Convex-hull landmarks per shape.
    #[arg(long)]
    pub nsp: Option<usize>,
    /// Interior points per shape.
    #[arg(long)]
    pub ndp: Option<usize>,
    /// Weight on the SSC cost in the fused minimum.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// χ² threshold and unmatched-point cost.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Interior sampling seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cost to compute.
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
    /// Measure angles in the image frame instead of relative to the tangent.
    #[arg(long)]
    pub no_rotate: bool,
    /// Use max(Ψ(a→b), Ψ(b→a)) instead of the one-directional cost.
    #[arg(long)]
    pub symmetric: bool,
    /// Cyclic starting offsets tried by the aligner.
    #[arg(long)]
    pub starts: Option<usize>,
    /// Contour samples for the inner-distance descriptor.
    #[arg(long)]
    pub idsc_points: Option<usize>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: ssc_core::Error| e.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: PipelineParams,
    pub method: Method,
    pub jobs: Option<usize>,
    pub manifest: Option<PathBuf>,
    pub idsc_matrix: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: PipelineParams::default(),
            method: Method::Fused,
            jobs: None,
            manifest: None,
            idsc_matrix: None,
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key = value", k + 1))?;
        let key = key.trim().replace('-', "_");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            bail!("config line {}: unknown key {key:?}", k + 1);
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

fn value<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    map.get(key)
        .map(|v| v.parse::<T>().map_err(|e| anyhow!("config key {key}: {e}")))
        .transpose()
}

impl RunConfig {
    /// Resolves flags, then the optional config file, then defaults.
    /// `manifest` and `idsc_matrix` come from flags of the subcommand.
    pub fn resolve(
        args: &PipelineArgs,
        config: Option<&Path>,
        jobs: Option<usize>,
        manifest: Option<PathBuf>,
        idsc_matrix: Option<PathBuf>,
    ) -> Result<Self> {
        let file = match config {
            Some(p) => {
                parse_config(&std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?)?
            }
            None => BTreeMap::new(),
        };
        let d = RunConfig::default();
        let pick = |flag: Option<bool>, key: &str, default: bool| -> Result<bool> {
            Ok(match flag {
                Some(v) => v,
                None => value(&file, key)?.unwrap_or(default),
            })
        };
        let ssc = SscParams {
            n_boundary: args.nb.or(value(&file, "nb")?).unwrap_or(d.params.ssc.n_boundary),
            n_sparse: args.nsp.or(value(&file, "nsp")?).unwrap_or(d.params.ssc.n_sparse),
            n_dense: args.ndp.or(value(&file, "ndp")?).unwrap_or(d.params.ssc.n_dense),
            seed: args.seed.or(value(&file, "seed")?).unwrap_or(d.params.ssc.seed),
            grid: d.params.ssc.grid,
            rotate: pick(args.no_rotate.then_some(false), "rotate", d.params.ssc.rotate)?,
        };
        let fusion = FusionParams {
            alpha: args.alpha.or(value(&file, "alpha")?).unwrap_or(d.params.fusion.alpha),
            tau: args.tau.or(value(&file, "tau")?).unwrap_or(d.params.fusion.tau),
            n_starts: args.starts.or(value(&file, "starts")?).unwrap_or(d.params.fusion.n_starts),
            symmetric: pick(args.symmetric.then_some(true), "symmetric", d.params.fusion.symmetric)?,
        };
        let idsc = IdscParams {
            n_points: args.idsc_points.or(value(&file, "idsc_points")?).unwrap_or(d.params.idsc.n_points),
            grid: d.params.idsc.grid,
        };
        let params = PipelineParams { ssc, idsc, fusion };
        params.validate()?;
        let method = match args.method {
            Some(m) => m,
            None => file.get("method").map(|m| m.parse()).transpose()?.unwrap_or(d.method),
        };
        let jobs = jobs.or(value(&file, "jobs")?);
        if jobs == Some(0) {
            bail!("jobs must be at least 1");
        }
        Ok(Self {
            params,
            method,
            jobs,
            manifest: manifest.or_else(|| file.get("manifest").map(PathBuf::from)),
            idsc_matrix: idsc_matrix.or_else(|| file.get("idsc_matrix").map(PathBuf::from)),
        })
    }

    pub fn manifest(&self) -> Result<&Path> {
        self.manifest
            .as_deref()
            .ok_or_else(|| anyhow!("no manifest given (use --manifest or the manifest config key)"))
    }
}
