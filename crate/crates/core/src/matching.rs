//! Histogram dissimilarity, order-preserving cyclic alignment and cost fusion.

use serde::{Deserialize, Serialize};

use crate::descriptor::{Histogram, SscDescriptor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionParams {
    /// Weight applied to the SSC cost before taking the minimum.
    pub alpha: f64,
    /// χ² threshold; also the cost of leaving a point unmatched.
    pub tau: f64,
    /// Evenly spaced cyclic shifts of the second sequence tried by the aligner.
    pub n_starts: usize,
    /// Use `max(Ψ(a→b), Ψ(b→a))` instead of the one-directional cost.
    pub symmetric: bool,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            alpha: 4.0,
            tau: 0.6,
            n_starts: 8,
            symmetric: false,
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.tau > 0.0 && self.tau <= 2.0) {
            return Err(Error::InvalidParameter(format!("tau must lie in (0, 2], got {}", self.tau)));
        }
        if self.n_starts == 0 {
            return Err(Error::InvalidParameter("n_starts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// Matched index in the second sequence, or `None` when unmatched.
    pub phi: Vec<Option<usize>>,
    pub per_point_cost: Vec<f64>,
    pub total: f64,
    /// Cyclic shift of the second sequence that produced the optimum.
    pub shift: usize,
}

/// `½ Σ (h−g)² / (h+g)`, skipping bins empty in both histograms.
pub fn chi2(h: &Histogram, g: &Histogram) -> Result<f64> {
    if h.len() != g.len() {
        return Err(Error::GridMismatch(h.len(), g.len()));
    }
    Ok(chi2_bins(&h.bins, &g.bins))
}

#[inline]
pub(crate) fn chi2_bins(h: &[f64], g: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&x, &y) in h.iter().zip(g) {
        let s = x + y;
        if s > 0.0 {
            let d = x - y;
            acc += d * d / s;
        }
    }
    0.5 * acc
}

/// Dense `n × m` table of raw χ² values between two histogram sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    pub rows: usize,
    pub cols: usize,
    values: Vec<f64>,
}

impl CostTable {
    pub fn new(a: &[Histogram], b: &[Histogram]) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::EmptyDescriptor);
        }
        let bins = a[0].len();
        if let Some(h) = a.iter().chain(b).find(|h| h.len() != bins) {
            return Err(Error::GridMismatch(bins, h.len()));
        }
        let mut values = Vec::with_capacity(a.len() * b.len());
        for h in a {
            for g in b {
                values.push(chi2_bins(&h.bins, &g.bins));
            }
        }
        Ok(Self {
            rows: a.len(),
            cols: b.len(),
            values,
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn transposed(&self) -> CostTable {
        let mut values = Vec::with_capacity(self.values.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                values.push(self.get(i, j));
            }
        }
        CostTable {
            rows: self.cols,
            cols: self.rows,
            values,
        }
    }

    /// Cyclic shifts tried by [`align_table`].
    pub fn shifts(&self, n_starts: usize) -> Vec<usize> {
        let starts = n_starts.clamp(1, self.cols);
        let mut s: Vec<usize> = (0..starts).map(|r| r * self.cols / starts).collect();
        s.dedup();
        s
    }
}

/// Aligns sequence `a` against the cyclic sequence `b`.
///
/// For each tried shift of `b` an edit-style recurrence is solved: matching
/// `a_i` with `b_j` costs `min(χ², τ)`, leaving `a_i` unmatched costs `τ`,
/// and passing over an element of `b` is free, so the total is the sum of one
/// cost per element of `a`. Pairs whose χ² exceeds `τ` are reported as
/// unmatched at cost `τ`. The lowest total wins, earliest shift on ties.
pub fn dp_align(a: &[Histogram], b: &[Histogram], params: &FusionParams) -> Result<MatchResult> {
    params.validate()?;
    let table = CostTable::new(a, b)?;
    Ok(align_table(&table, params))
}

pub fn align_table(table: &CostTable, params: &FusionParams) -> MatchResult {
    let (n, m, tau) = (table.rows, table.cols, params.tau);
    let clamped: Vec<f64> = table.values.iter().map(|&c| c.min(tau)).collect();

    let mut best: Option<(f64, usize)> = None;
    let mut prev = vec![0.0; m + 1];
    let mut cur = vec![0.0; m + 1];
    for s in table.shifts(params.n_starts) {
        prev.iter_mut().for_each(|v| *v = 0.0);
        for i in 1..=n {
            let row = &clamped[(i - 1) * m..i * m];
            cur[0] = prev[0] + tau;
            let mut col = s;
            for j in 1..=m {
                let diag = prev[j - 1] + row[col];
                let skip_a = prev[j] + tau;
                cur[j] = diag.min(skip_a).min(cur[j - 1]);
                col += 1;
                if col == m {
                    col = 0;
                }
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        let total = prev[m];
        if best.is_none_or(|(t, _)| total < t) {
            best = Some((total, s));
        }
    }
    let (_, shift) = best.expect("at least one shift");
    backtrack(table, &clamped, shift, tau)
}

fn backtrack(table: &CostTable, clamped: &[f64], shift: usize, tau: f64) -> MatchResult {
    let (n, m) = (table.rows, table.cols);
    let w = m + 1;
    let col_of = |j: usize| (j + shift) % m;
    let mut d = vec![0.0; (n + 1) * w];
    for i in 1..=n {
        d[i * w] = d[(i - 1) * w] + tau;
        for j in 1..=m {
            let diag = d[(i - 1) * w + j - 1] + clamped[(i - 1) * m + col_of(j - 1)];
            let skip_a = d[(i - 1) * w + j] + tau;
            d[i * w + j] = diag.min(skip_a).min(d[i * w + j - 1]);
        }
    }

    let mut phi = vec![None; n];
    let mut per_point_cost = vec![tau; n];
    let (mut i, mut j) = (n, m);
    while i > 0 {
        let here = d[i * w + j];
        if j > 0 && here == d[i * w + j - 1] {
            j -= 1;
            continue;
        }
        if j > 0 {
            let col = col_of(j - 1);
            let c = clamped[(i - 1) * m + col];
            if here == d[(i - 1) * w + j - 1] + c {
                if table.get(i - 1, col) <= tau {
                    phi[i - 1] = Some(col);
                }
                per_point_cost[i - 1] = c;
                i -= 1;
                j -= 1;
                continue;
            }
        }
        i -= 1;
    }
    let total = per_point_cost.iter().sum();
    MatchResult {
        phi,
        per_point_cost,
        total,
        shift,
    }
}

/// One-directional SSC cost, or the symmetrized maximum when requested.
pub fn ssc_cost(a: &SscDescriptor, b: &SscDescriptor, params: &FusionParams) -> Result<f64> {
    params.validate()?;
    let table = CostTable::new(&a.histograms, &b.histograms)?;
    Ok(directional_costs(&table, params))
}

/// Cost for `a → b` from its χ² table, honouring `params.symmetric`.
pub fn directional_costs(table: &CostTable, params: &FusionParams) -> f64 {
    let forward = align_table(table, params).total;
    if params.symmetric {
        forward.max(align_table(&table.transposed(), params).total)
    } else {
        forward
    }
}

/// `min(Ψ_idsc, α · Ψ_ssc)`.
pub fn fused_cost(psi_idsc: f64, psi_ssc: f64, params: &FusionParams) -> f64 {
    psi_idsc.min(params.alpha * psi_ssc)
}
