//! Dataset manifests, pairwise cost matrices and ranking metrics.
//!
//! Rankings sort costs ascending with ties broken by shape id, so every
//! metric is reproducible bit for bit regardless of thread count.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::contour::{load_mask, trace_boundary, Polygon};
use crate::descriptor::{describe_shape, SscDescriptor, SscParams};
use crate::error::{Error, Result};
use crate::idsc::{describe_idsc, IdscDescriptor, IdscParams};
use crate::matching::{align_table, fused_cost, CostTable, FusionParams};

/// Number of retrievals kept per query by the bullseye protocol.
pub const BULLSEYE_WINDOW: usize = 40;
/// Class size the bullseye protocol assumes.
pub const BULLSEYE_CLASS_SIZE: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    pub class: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Errors on an empty list or duplicate ids.
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Manifest("manifest has no entries".into()));
        }
        let mut seen = HashSet::new();
        for e in &entries {
            if e.id.is_empty() || e.class.is_empty() {
                return Err(Error::Manifest(format!("entry {:?} has an empty id or class", e.id)));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(Error::Manifest(format!("duplicate id {:?}", e.id)));
            }
        }
        Ok(Self { entries })
    }

    /// Class labels only; paths are left empty. Handy for scoring matrices.
    pub fn from_labels(ids: &[String], classes: &[String]) -> Result<Self> {
        if ids.len() != classes.len() {
            return Err(Error::SizeMismatch {
                expected: ids.len(),
                got: classes.len(),
            });
        }
        Self::new(
            ids.iter()
                .zip(classes)
                .map(|(id, class)| ManifestEntry {
                    id: id.clone(),
                    path: PathBuf::new(),
                    class: class.clone(),
                })
                .collect(),
        )
    }

    /// Reads `id<TAB>path<TAB>class` lines. Blank lines and `#` comments are
    /// skipped, as is an `id path class` header. Relative paths resolve
    /// against the manifest's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Manifest(format!(
                    "line {}: expected 3 tab-separated fields, found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            if entries.is_empty() && fields == ["id", "path", "class"] {
                continue;
            }
            let p = PathBuf::from(fields[1]);
            entries.push(ManifestEntry {
                id: fields[0].to_string(),
                path: if p.is_absolute() { p } else { base.join(p) },
                class: fields[2].to_string(),
            });
        }
        Self::new(entries)
    }

    /// Writes the manifest with a header; paths under the manifest's
    /// directory are stored relative to it.
    pub fn save(&self, path: &Path) -> Result<()> {
        let base = path.parent().unwrap_or(Path::new(""));
        let mut out = String::from("id\tpath\tclass\n");
        for e in &self.entries {
            let p = e.path.strip_prefix(base).unwrap_or(&e.path);
            out.push_str(&format!("{}\t{}\t{}\n", e.id, p.display(), e.class));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.id.clone()).collect()
    }

    /// Class labels in order of first appearance.
    pub fn classes(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.entries
            .iter()
            .filter(|e| seen.insert(e.class.as_str()))
            .map(|e| e.class.clone())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ssc,
    Idsc,
    Fused,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ssc => "ssc",
            Method::Idsc => "idsc",
            Method::Fused => "fused",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ssc" => Ok(Method::Ssc),
            "idsc" => Ok(Method::Idsc),
            "fused" => Ok(Method::Fused),
            other => Err(Error::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PipelineParams {
    pub ssc: SscParams,
    pub idsc: IdscParams,
    pub fusion: FusionParams,
}

impl PipelineParams {
    pub fn validate(&self) -> Result<()> {
        self.ssc.validate()?;
        self.idsc.grid.validate()?;
        if self.idsc.n_points < 3 {
            return Err(Error::InvalidParameter("IDSC needs at least 3 points".into()));
        }
        self.fusion.validate()
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("serializable");
        let digest = Sha256::digest(&json);
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Square matrix of pairwise costs, row = query, column = candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    pub ids: Vec<String>,
    values: Vec<f64>,
    pub method: Option<Method>,
    pub params_hash: Option<String>,
    pub seed: Option<u64>,
}

impl CostMatrix {
    /// Errors unless `values` is `ids.len()²` finite entries.
    pub fn new(ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = ids.len();
        if values.len() != n * n {
            return Err(Error::SizeMismatch {
                expected: n * n,
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::MatrixFormat(format!("entry ({}, {}) is not finite", k / n, k % n)));
        }
        Ok(Self {
            ids,
            values,
            method: None,
            params_hash: None,
            seed: None,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Turns a similarity matrix (larger = closer) into costs via `max − s`.
    pub fn from_similarity(mut self) -> Self {
        let max = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.values.iter_mut().for_each(|v| *v = max - *v);
        self
    }

    /// Reorders rows and columns to follow `ids`.
    pub fn reordered(&self, ids: &[String]) -> Result<Self> {
        if ids == self.ids.as_slice() {
            return Ok(self.clone());
        }
        let pos: HashMap<&str, usize> = self.ids.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();
        let idx = ids
            .iter()
            .map(|id| {
                pos.get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::MatrixFormat(format!("matrix has no row for shape {id:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if idx.len() != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                got: idx.len(),
            });
        }
        let values = idx.iter().flat_map(|&i| idx.iter().map(move |&j| (i, j))).map(|(i, j)| self.get(i, j)).collect();
        Ok(Self {
            ids: ids.to_vec(),
            values,
            ..self.clone()
        })
    }

    /// Follows `ids` by label when every id has a row, or by position when
    /// the rows carry bare index labels (`0`, `1`, …) and the sizes agree.
    pub fn align_to(&self, ids: &[String]) -> Result<Self> {
        let positional = self.ids.iter().enumerate().all(|(k, id)| *id == k.to_string());
        let labelled = ids.iter().all(|id| self.ids.contains(id));
        if labelled || !positional {
            return self.reordered(ids);
        }
        if self.len() != ids.len() {
            return Err(Error::SizeMismatch {
                expected: ids.len(),
                got: self.len(),
            });
        }
        Ok(Self {
            ids: ids.to_vec(),
            ..self.clone()
        })
    }

    /// CSV with a `#` header line, then one `id,v1,…,vn` row per shape.
    /// Values use the shortest representation that round-trips exactly.
    pub fn to_csv(&self) -> String {
        let mut out = csv_header(self.method, self.params_hash.as_deref(), self.seed, self.len());
        for i in 0..self.len() {
            out.push_str(&csv_row(&self.ids[i], self.row(i)));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses matrices written by [`CostMatrix::to_csv`] as well as bare
    /// numeric grids separated by commas or whitespace. Rows without a
    /// leading label are named by their 0-based index.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows: Vec<(Option<String>, Vec<f64>)> = Vec::new();
        let (mut method, mut params_hash, mut seed) = (None, None, None);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                for kv in comment.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("method", v)) => method = Some(v.parse()?),
                        Some(("params", v)) => params_hash = Some(v.to_string()),
                        Some(("seed", v)) => {
                            seed = Some(v.parse().map_err(|_| Error::MatrixFormat(format!("bad seed {v:?}")))?)
                        }
                        _ => {}
                    }
                }
                continue;
            }
            let tokens: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .collect();
            let (label, numbers) = match tokens.first().map(|t| t.parse::<f64>()) {
                Some(Ok(_)) => (None, &tokens[..]),
                _ => (Some(tokens[0].to_string()), &tokens[1..]),
            };
            let values = numbers
                .iter()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::MatrixFormat(format!("line {}: {t:?} is not a number", lineno + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push((label, values));
        }
        let n = rows.len();
        if n == 0 {
            return Err(Error::MatrixFormat("no rows".into()));
        }
        let mut ids = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n * n);
        for (k, (label, row)) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::MatrixFormat(format!("row {} has {} values, expected {n}", k + 1, row.len())));
            }
            ids.push(label.unwrap_or_else(|| k.to_string()));
            values.extend(row);
        }
        if ids.iter().collect::<HashSet<_>>().len() != n {
            return Err(Error::MatrixFormat("duplicate row labels".into()));
        }
        let mut m = Self::new(ids, values)?;
        m.method = method;
        m.params_hash = params_hash;
        m.seed = seed;
        Ok(m)
    }
}

/// Header line of the matrix CSV, newline included.
pub fn csv_header(method: Option<Method>, params_hash: Option<&str>, seed: Option<u64>, n: usize) -> String {
    let mut h = String::from("# cost-matrix");
    if let Some(m) = method {
        h.push_str(&format!(" method={m}"));
    }
    if let Some(p) = params_hash {
        h.push_str(&format!(" params={p}"));
    }
    if let Some(s) = seed {
        h.push_str(&format!(" seed={s}"));
    }
    h.push_str(&format!(" n={n}\n"));
    h
}

/// One matrix CSV row, newline included.
pub fn csv_row(id: &str, values: &[f64]) -> String {
    let mut out = id.to_string();
    for v in values {
        out.push_str(&format!(",{v:?}"));
    }
    out.push('\n');
    out
}

/// Traces the outline of the largest foreground component of an image.
pub fn load_polygon(path: &Path) -> Result<Polygon> {
    trace_boundary(&load_mask(path)?)
}

/// Per-shape descriptors in manifest order.
#[derive(Debug, Clone, Default)]
pub struct ShapeDescriptors {
    pub ids: Vec<String>,
    pub ssc: Option<Vec<SscDescriptor>>,
    pub idsc: Option<Vec<IdscDescriptor>>,
}

/// Which descriptor kinds a method needs, given an optional external IDSC
/// matrix.
pub fn required_kinds(method: Method, external_idsc: bool) -> (bool, bool) {
    match method {
        Method::Ssc => (true, false),
        Method::Idsc => (false, !external_idsc),
        Method::Fused => (true, !external_idsc),
    }
}

/// Describes every shape of the manifest in parallel. The first failure in
/// manifest order aborts the run and names the shape.
pub fn describe_manifest(
    manifest: &DatasetManifest,
    params: &PipelineParams,
    want_ssc: bool,
    want_idsc: bool,
) -> Result<ShapeDescriptors> {
    params.validate()?;
    let results: Vec<Result<(Option<SscDescriptor>, Option<IdscDescriptor>)>> = manifest
        .entries()
        .par_iter()
        .map(|e| {
            let run = || -> Result<_> {
                let polygon = load_polygon(&e.path)?;
                let ssc = want_ssc.then(|| describe_shape(&polygon, &params.ssc)).transpose()?;
                let idsc = want_idsc.then(|| describe_idsc(&polygon, &params.idsc)).transpose()?;
                Ok((ssc, idsc))
            };
            run().map_err(|err| err.for_shape(&e.id))
        })
        .collect();
    let mut ssc = Vec::new();
    let mut idsc = Vec::new();
    for r in results {
        let (s, i) = r?;
        ssc.extend(s);
        idsc.extend(i);
    }
    Ok(ShapeDescriptors {
        ids: manifest.ids(),
        ssc: want_ssc.then_some(ssc),
        idsc: want_idsc.then_some(idsc),
    })
}

/// Computes pairwise costs from descriptors.
///
/// One χ² table per unordered pair serves both directions, since χ² is
/// symmetric and the reverse alignment runs on the transpose.
pub struct MatrixBuilder<'a> {
    method: Method,
    fusion: FusionParams,
    ssc: Option<&'a [SscDescriptor]>,
    idsc: Option<&'a [IdscDescriptor]>,
    external_idsc: Option<&'a CostMatrix>,
    n: usize,
}

impl<'a> MatrixBuilder<'a> {
    /// `external_idsc` must already follow the descriptor order.
    pub fn new(
        method: Method,
        fusion: FusionParams,
        descriptors: &'a ShapeDescriptors,
        external_idsc: Option<&'a CostMatrix>,
    ) -> Result<Self> {
        fusion.validate()?;
        let n = descriptors.ids.len();
        let ssc = descriptors.ssc.as_deref();
        let idsc = descriptors.idsc.as_deref();
        let need_ssc = method != Method::Idsc;
        let need_idsc = method != Method::Ssc;
        if need_ssc && ssc.is_none() {
            return Err(Error::InvalidParameter(format!("method {method} needs SSC descriptors")));
        }
        if need_idsc && idsc.is_none() && external_idsc.is_none() {
            return Err(Error::InvalidParameter(format!(
                "method {method} needs IDSC descriptors or an external IDSC matrix"
            )));
        }
        for len in [ssc.map(<[_]>::len), idsc.map(<[_]>::len), external_idsc.map(CostMatrix::len)].into_iter().flatten() {
            if len != n {
                return Err(Error::SizeMismatch { expected: n, got: len });
            }
        }
        if n == 0 {
            return Err(Error::Manifest("no shapes to compare".into()));
        }
        Ok(Self {
            method,
            fusion,
            ssc: need_ssc.then_some(ssc).flatten(),
            idsc: if need_idsc && external_idsc.is_none() { idsc } else { None },
            external_idsc: need_idsc.then_some(external_idsc).flatten(),
            n,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Both directional costs `(i → j, j → i)` for `i < j`.
    fn pair(&self, i: usize, j: usize) -> Result<(f64, f64)> {
        let directional = |a: &[_], b: &[_]| -> Result<(f64, f64)> {
            let t = CostTable::new(a, b)?;
            let tt = t.transposed();
            let forward = align_table(&t, &self.fusion).total;
            let backward = align_table(&tt, &self.fusion).total;
            Ok(if self.fusion.symmetric {
                let m = forward.max(backward);
                (m, m)
            } else {
                (forward, backward)
            })
        };
        let ssc = self
            .ssc
            .map(|d| directional(&d[i].histograms, &d[j].histograms))
            .transpose()?;
        let idsc = match (self.idsc, self.external_idsc) {
            (_, Some(m)) => Some((m.get(i, j), m.get(j, i))),
            (Some(d), None) => Some(directional(&d[i].histograms, &d[j].histograms)?),
            (None, None) => None,
        };
        Ok(match (self.method, ssc, idsc) {
            (Method::Ssc, Some(s), _) => s,
            (Method::Idsc, _, Some(d)) => d,
            (Method::Fused, Some(s), Some(d)) => (fused_cost(d.0, s.0, &self.fusion), fused_cost(d.1, s.1, &self.fusion)),
            _ => unreachable!("checked in MatrixBuilder::new"),
        })
    }

    fn diagonal(&self, i: usize) -> Result<f64> {
        let self_cost = |a: &[_]| -> Result<f64> { Ok(align_table(&CostTable::new(a, a)?, &self.fusion).total) };
        let ssc = self.ssc.map(|d| self_cost(&d[i].histograms)).transpose()?;
        let idsc = match (self.idsc, self.external_idsc) {
            (_, Some(m)) => Some(m.get(i, i)),
            (Some(d), None) => Some(self_cost(&d[i].histograms)?),
            (None, None) => None,
        };
        Ok(match (self.method, ssc, idsc) {
            (Method::Ssc, Some(s), _) => s,
            (Method::Idsc, _, Some(d)) => d,
            (Method::Fused, Some(s), Some(d)) => fused_cost(d, s, &self.fusion),
            _ => unreachable!("checked in MatrixBuilder::new"),
        })
    }

    /// Row `i` of the matrix, `Ψ(i → j)` for every `j`.
    pub fn row(&self, i: usize) -> Result<Vec<f64>> {
        (0..self.n)
            .into_par_iter()
            .map(|j| match j.cmp(&i) {
                std::cmp::Ordering::Equal => self.diagonal(i),
                std::cmp::Ordering::Less => self.pair(j, i).map(|p| p.1),
                std::cmp::Ordering::Greater => self.pair(i, j).map(|p| p.0),
            })
            .collect()
    }

    /// The full matrix. Each unordered pair is aligned once per direction.
    pub fn build(&self, ids: Vec<String>) -> Result<CostMatrix> {
        let n = self.n;
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let costs: Vec<(f64, f64)> = pairs
            .par_iter()
            .map(|&(i, j)| if i == j { self.diagonal(i).map(|d| (d, d)) } else { self.pair(i, j) })
            .collect::<Result<_>>()?;
        let mut values = vec![0.0; n * n];
        for (&(i, j), &(f, b)) in pairs.iter().zip(&costs) {
            values[i * n + j] = f;
            values[j * n + i] = b;
        }
        let mut m = CostMatrix::new(ids, values)?;
        m.method = Some(self.method);
        Ok(m)
    }

    /// Computes rows `start..n` in order and hands each to `sink` as soon as
    /// it is complete. Values equal those of [`MatrixBuilder::build`] bit for
    /// bit. Pairs whose both rows are computed here are aligned once; pairs
    /// reaching back before `start` are recomputed.
    pub fn build_rows(&self, start: usize, mut sink: impl FnMut(usize, &[f64]) -> Result<()>) -> Result<()> {
        let n = self.n;
        // pending[j][i - start]: cost j → i found while computing row i
        let mut pending: Vec<Vec<f64>> = (0..n).map(|j| Vec::with_capacity(j.saturating_sub(start))).collect();
        for i in start..n {
            let cells: Vec<(f64, Option<f64>)> = (0..n)
                .into_par_iter()
                .map(|j| {
                    if j < start {
                        self.pair(j, i).map(|p| (p.1, None))
                    } else if j < i {
                        Ok((pending[i][j - start], None))
                    } else if j == i {
                        self.diagonal(i).map(|d| (d, None))
                    } else {
                        self.pair(i, j).map(|p| (p.0, Some(p.1)))
                    }
                })
                .collect::<Result<_>>()?;
            let row: Vec<f64> = cells.iter().map(|c| c.0).collect();
            for (j, c) in cells.iter().enumerate() {
                if let Some(back) = c.1 {
                    pending[j].push(back);
                }
            }
            pending[i] = Vec::new();
            sink(i, &row)?;
        }
        Ok(())
    }
}

/// Loads, describes and compares every shape in the manifest.
pub fn build_cost_matrix(
    manifest: &DatasetManifest,
    params: &PipelineParams,
    method: Method,
    external_idsc: Option<&CostMatrix>,
) -> Result<CostMatrix> {
    let external = external_idsc.map(|m| m.align_to(&manifest.ids())).transpose()?;
    let (want_ssc, want_idsc) = required_kinds(method, external.is_some());
    let descriptors = describe_manifest(manifest, params, want_ssc, want_idsc)?;
    let builder = MatrixBuilder::new(method, params.fusion, &descriptors, external.as_ref())?;
    let mut m = builder.build(manifest.ids())?;
    m.params_hash = Some(params.hash());
    m.seed = Some(params.ssc.seed);
    Ok(m)
}

/// Class index of every matrix row, following the manifest by id.
fn class_labels(matrix: &CostMatrix, manifest: &DatasetManifest) -> Result<Vec<usize>> {
    if matrix.len() != manifest.len() {
        return Err(Error::SizeMismatch {
            expected: manifest.len(),
            got: matrix.len(),
        });
    }
    let classes = manifest.classes();
    let class_idx: HashMap<&str, usize> = classes.iter().enumerate().map(|(k, c)| (c.as_str(), k)).collect();
    let by_id: HashMap<&str, usize> =
        manifest.entries().iter().map(|e| (e.id.as_str(), class_idx[e.class.as_str()])).collect();
    let positional = matrix.ids.iter().any(|id| !by_id.contains_key(id.as_str()));
    Ok(if positional {
        // unlabelled or foreign ids: fall back to manifest order
        manifest.entries().iter().map(|e| class_idx[e.class.as_str()]).collect()
    } else {
        matrix.ids.iter().map(|id| by_id[id.as_str()]).collect()
    })
}

/// Candidates for query `q` in ascending cost, ties by id.
pub fn ranking(matrix: &CostMatrix, q: usize) -> Vec<usize> {
    let row = matrix.row(q);
    let mut order: Vec<usize> = (0..matrix.len()).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then_with(|| matrix.ids[a].cmp(&matrix.ids[b])));
    order
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub class: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BullseyeReport {
    pub overall: f64,
    pub per_class: Vec<ClassScore>,
    pub per_query: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BullseyeParams {
    pub window: usize,
    pub class_size: usize,
    /// Count the query itself among the retrieved shapes.
    pub include_self: bool,
}

impl Default for BullseyeParams {
    fn default() -> Self {
        Self {
            window: BULLSEYE_WINDOW,
            class_size: BULLSEYE_CLASS_SIZE,
            include_self: true,
        }
    }
}

/// Same-class hits among each query's top `window`, capped at `class_size`
/// and divided by it.
pub fn bullseye(matrix: &CostMatrix, manifest: &DatasetManifest, params: &BullseyeParams) -> Result<BullseyeReport> {
    if params.class_size == 0 || params.window == 0 {
        return Err(Error::InvalidParameter("bullseye window and class size must be positive".into()));
    }
    let labels = class_labels(matrix, manifest)?;
    let per_query: Vec<f64> = (0..matrix.len())
        .map(|q| {
            let hits = ranking(matrix, q)
                .into_iter()
                .filter(|&c| params.include_self || c != q)
                .take(params.window)
                .filter(|&c| labels[c] == labels[q])
                .count();
            hits.min(params.class_size) as f64 / params.class_size as f64
        })
        .collect();
    let per_class = manifest
        .classes()
        .into_iter()
        .enumerate()
        .map(|(k, class)| {
            let scores: Vec<f64> = (0..per_query.len()).filter(|&q| labels[q] == k).map(|q| per_query[q]).collect();
            ClassScore {
                class,
                score: mean(&scores),
            }
        })
        .collect();
    Ok(BullseyeReport {
        overall: mean(&per_query),
        per_class,
        per_query,
    })
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Mean precision at recall levels `k / r` for `k = 1..=r`, where `r` is
/// the number of relevant shapes (same class, query excluded). Queries whose
/// class has `r` other members contribute to all levels; precision at a level
/// is the precision at the rank where that recall is first reached.
///
/// Levels follow the largest class; smaller classes are interpolated to the
/// smallest rank whose recall reaches the level.
pub fn precision_recall(matrix: &CostMatrix, manifest: &DatasetManifest) -> Result<Vec<(f64, f64)>> {
    let labels = class_labels(matrix, manifest)?;
    let n = matrix.len();
    let relevant = |q: usize| (0..n).filter(|&c| c != q && labels[c] == labels[q]).count();
    let levels = (0..n).map(relevant).max().unwrap_or(0);
    if levels == 0 {
        return Ok(Vec::new());
    }
    let mut sums = vec![0.0; levels];
    let mut counts = vec![0usize; levels];
    for q in 0..n {
        if relevant(q) == 0 {
            continue;
        }
        for (k, p) in query_precisions(matrix, &labels, q, levels).into_iter().enumerate() {
            sums[k] += p;
            counts[k] += 1;
        }
    }
    Ok(sums
        .iter()
        .zip(&counts)
        .enumerate()
        .map(|(k, (s, &c))| ((k + 1) as f64 / levels as f64, s / c as f64))
        .collect())
}

/// Precision of query `q` at recall `k / levels`, `k = 1..=levels`.
fn query_precisions(matrix: &CostMatrix, labels: &[usize], q: usize, levels: usize) -> Vec<f64> {
    // precision at the rank of each successive relevant hit
    let mut at_hit = Vec::new();
    for (rank, c) in ranking(matrix, q).into_iter().filter(|&c| c != q).enumerate() {
        if labels[c] == labels[q] {
            at_hit.push((at_hit.len() + 1) as f64 / (rank + 1) as f64);
        }
    }
    let r = at_hit.len() as f64;
    (1..=levels)
        .map(|k| {
            // fewest hits whose recall reaches the level
            let need = ((k as f64 / levels as f64) * r - 1e-9).ceil().max(1.0) as usize;
            at_hit[need - 1]
        })
        .collect()
}

/// Mean 1-based rank of the first other-class shape, query included in the
/// ranking. Queries with no other-class shape score `n + 1`.
pub fn first_wrong_position(matrix: &CostMatrix, manifest: &DatasetManifest) -> Result<f64> {
    let labels = class_labels(matrix, manifest)?;
    let n = matrix.len();
    let ranks: Vec<f64> = (0..n)
        .map(|q| {
            ranking(matrix, q)
                .into_iter()
                .position(|c| labels[c] != labels[q])
                .map_or(n + 1, |p| p + 1) as f64
        })
        .collect();
    Ok(mean(&ranks))
}

/// Mean fraction of same-class shapes among the top `k`, query included.
pub fn top_k_correct(matrix: &CostMatrix, manifest: &DatasetManifest, k: usize) -> Result<f64> {
    let labels = class_labels(matrix, manifest)?;
    let n = matrix.len();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("top-k needs 1 <= k <= {n}, got {k}")));
    }
    let fractions: Vec<f64> = (0..n)
        .map(|q| ranking(matrix, q).into_iter().take(k).filter(|&c| labels[c] == labels[q]).count() as f64 / k as f64)
        .collect();
    Ok(mean(&fractions))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n_shapes: usize,
    pub method: Option<Method>,
    pub params_hash: Option<String>,
    pub seed: Option<u64>,
    pub bullseye: BullseyeReport,
    pub bullseye_params: BullseyeParams,
    pub top_k: usize,
    pub top_k_correct: f64,
    pub first_wrong_position: f64,
    pub precision_recall: Vec<(f64, f64)>,
}

impl EvaluationReport {
    /// PR curve as `recall,precision` CSV.
    pub fn pr_csv(&self) -> String {
        let mut out = String::from("recall,precision\n");
        for (r, p) in &self.precision_recall {
            out.push_str(&format!("{r:?},{p:?}\n"));
        }
        out
    }
}

/// Runs every metric on one matrix. `top_k` is clamped to the matrix size.
pub fn evaluate(
    matrix: &CostMatrix,
    manifest: &DatasetManifest,
    bullseye_params: &BullseyeParams,
    top_k: usize,
) -> Result<EvaluationReport> {
    let top_k = top_k.min(matrix.len());
    Ok(EvaluationReport {
        n_shapes: matrix.len(),
        method: matrix.method,
        params_hash: matrix.params_hash.clone(),
        seed: matrix.seed,
        bullseye: bullseye(matrix, manifest, bullseye_params)?,
        bullseye_params: *bullseye_params,
        top_k,
        top_k_correct: top_k_correct(matrix, manifest, top_k)?,
        first_wrong_position: first_wrong_position(matrix, manifest)?,
        precision_recall: precision_recall(matrix, manifest)?,
    })
}
