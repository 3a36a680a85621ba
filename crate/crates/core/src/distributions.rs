//! Discrete statistical substrate for tree learning.
//!
//! Continuous features are discretized per dimension by quantile binning;
//! class-conditional node marginals and pairwise joint tables are then
//! estimated from weighted samples with additive smoothing. Node marginals
//! are read off the pairwise tables (designated partner: the lowest-indexed
//! other variable), which makes marginal consistency hold by construction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Dense 2-D table of f64, row-major. Used both for probability tables and
/// for per-edge log-ratio tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Table {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::ShapeMismatch(
                format!("{rows}x{cols}"),
                format!("{} values", data.len()),
            ));
        }
        Ok(Table { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Table {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] += v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn row_marginals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for r in 0..self.rows {
            out[r] = self.data[r * self.cols..(r + 1) * self.cols].iter().sum();
        }
        out
    }

    pub fn col_marginals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[c] += self.get(r, c);
            }
        }
        out
    }

    pub fn transposed(&self) -> Table {
        let mut t = Table::filled(self.cols, self.rows, 0.0);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    /// Strictly positive entries summing to 1 within 1e-8.
    pub fn validate_pmf(&self) -> Result<()> {
        if let Some(i) = self.data.iter().position(|&v| v <= 0.0 || !v.is_finite()) {
            return Err(Error::NonPositiveEntry(i));
        }
        let sum = self.sum();
        if (sum - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized { sum });
        }
        Ok(())
    }
}

/// Mutual information in nats of a strictly positive normalized joint table,
/// with marginals taken from the table itself. Clamped to be nonnegative.
pub fn mutual_information(joint: &Table) -> Result<f64> {
    joint.validate_pmf()?;
    let pa = joint.row_marginals();
    let pb = joint.col_marginals();
    let mut mi = 0.0;
    for a in 0..joint.rows() {
        for b in 0..joint.cols() {
            let p = joint.get(a, b);
            mi += p * (p / (pa[a] * pb[b])).ln();
        }
    }
    Ok(mi.max(0.0))
}

/// Kullback-Leibler divergence sum(p * ln(p/q)) in nats over two strictly
/// positive normalized tables of identical shape (flattened).
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch(
            format!("{} cells", p.len()),
            format!("{} cells", q.len()),
        ));
    }
    for (i, v) in p.iter().chain(q.iter()).enumerate() {
        if *v <= 0.0 || !v.is_finite() {
            return Err(Error::NonPositiveEntry(i % p.len()));
        }
    }
    for dist in [p, q] {
        let sum: f64 = dist.iter().sum();
        if (sum - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized { sum });
        }
    }
    Ok(p.iter().zip(q).map(|(&pi, &qi)| pi * (pi / qi).ln()).sum())
}

// ---------------------------------------------------------------------------
// Quantizer
// ---------------------------------------------------------------------------

/// Per-dimension quantile binning of continuous features into discrete
/// symbols. Edges are strictly increasing; an edge value itself falls in the
/// lower cell, anything beyond the range clamps to the end cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantizer {
    edges: Vec<Vec<f64>>,
}

impl Quantizer {
    /// Fits edges at the empirical quantiles k/B (k = 1..B-1) of each column,
    /// by linear interpolation of order statistics. Duplicate edges collapse,
    /// and edges at or below the column minimum are dropped, so a constant
    /// column yields zero edges (a single cell).
    pub fn fit(data: &FeatureMatrix, bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::InvalidParameter(format!(
                "bins must be >= 2, got {bins}"
            )));
        }
        if data.rows() == 0 {
            return Err(Error::Data("cannot fit a quantizer on zero samples".into()));
        }
        if data.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quantizer input".into()));
        }
        let n = data.rows();
        let mut edges = Vec::with_capacity(data.cols());
        for d in 0..data.cols() {
            let mut col = data.column(d);
            col.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let min = col[0];
            let mut dim_edges: Vec<f64> = Vec::new();
            for k in 1..bins {
                let q = k as f64 / bins as f64;
                let pos = q * (n - 1) as f64;
                let lo = pos.floor() as usize;
                let frac = pos - lo as f64;
                let edge = if lo + 1 < n {
                    col[lo] * (1.0 - frac) + col[lo + 1] * frac
                } else {
                    col[lo]
                };
                if edge > min && dim_edges.last().is_none_or(|&last| edge > last) {
                    dim_edges.push(edge);
                }
            }
            edges.push(dim_edges);
        }
        Ok(Quantizer { edges })
    }

    /// Builds a quantizer directly from edge lists (strictly increasing per
    /// dimension).
    pub fn from_edges(edges: Vec<Vec<f64>>) -> Result<Self> {
        for dim in &edges {
            if dim.iter().any(|e| !e.is_finite()) {
                return Err(Error::NonFinite("quantizer edges".into()));
            }
            if dim.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter(
                    "edges must be strictly increasing".into(),
                ));
            }
        }
        Ok(Quantizer { edges })
    }

    pub fn dims(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self, dim: usize) -> &[f64] {
        &self.edges[dim]
    }

    /// Number of cells per dimension (edges + 1).
    pub fn cells(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.len() + 1).collect()
    }

    pub fn quantize(&self, x: &[f64]) -> Result<Vec<u16>> {
        if x.len() != self.edges.len() {
            return Err(Error::DimensionMismatch {
                expected: self.edges.len(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quantizer input".into()));
        }
        Ok(x.iter()
            .zip(&self.edges)
            .map(|(&v, edges)| edges.partition_point(|&e| e < v) as u16)
            .collect())
    }
}

// ---------------------------------------------------------------------------
// Weighted dataset
// ---------------------------------------------------------------------------

/// Discretized training samples with binary labels and a probability
/// distribution of weights over samples.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDataset {
    n_vars: usize,
    cells: Vec<usize>,
    symbols: Vec<u16>,
    labels: Vec<i8>,
    weights: Vec<f64>,
}

impl WeightedDataset {
    pub fn new(
        symbols: Vec<u16>,
        cells: Vec<usize>,
        labels: Vec<i8>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let n_vars = cells.len();
        if n_vars == 0 {
            return Err(Error::Data("dataset needs at least one variable".into()));
        }
        let n = labels.len();
        if symbols.len() != n * n_vars {
            return Err(Error::ShapeMismatch(
                format!("{n} x {n_vars} symbols"),
                format!("{}", symbols.len()),
            ));
        }
        if labels.iter().any(|&l| l != 1 && l != -1) {
            return Err(Error::Data("labels must be +1 or -1".into()));
        }
        for (i, row) in symbols.chunks(n_vars).enumerate() {
            for (v, (&s, &c)) in row.iter().zip(&cells).enumerate() {
                if s as usize >= c {
                    let _ = i;
                    return Err(Error::SymbolOutOfRange {
                        variable: v,
                        symbol: s,
                        cells: c,
                    });
                }
            }
        }
        let ds = WeightedDataset {
            n_vars,
            cells,
            symbols,
            labels,
            weights: vec![0.0; n],
        };
        let mut ds = ds;
        ds.set_weights(weights)?;
        Ok(ds)
    }

    /// Uniform weights 1/N.
    pub fn with_uniform_weights(
        symbols: Vec<u16>,
        cells: Vec<usize>,
        labels: Vec<i8>,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Data("no samples".into()));
        }
        let w = vec![1.0 / n as f64; n];
        WeightedDataset::new(symbols, cells, labels, w)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn row(&self, i: usize) -> &[u16] {
        &self.symbols[i * self.n_vars..(i + 1) * self.n_vars]
    }

    pub fn label(&self, i: usize) -> i8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Replaces the weight distribution; weights must be nonnegative and sum
    /// to 1 within 1e-12.
    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.labels.len() {
            return Err(Error::DimensionMismatch {
                expected: self.labels.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::Data("weights must be nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized { sum });
        }
        self.weights = weights;
        Ok(())
    }

    /// New dataset holding the given rows (in order) with uniform weights.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let mut symbols = Vec::with_capacity(idx.len() * self.n_vars);
        let mut labels = Vec::with_capacity(idx.len());
        for &i in idx {
            symbols.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        WeightedDataset::with_uniform_weights(symbols, self.cells.clone(), labels)
    }
}

// ---------------------------------------------------------------------------
// Empirical model
// ---------------------------------------------------------------------------

fn pair_slot(i: usize, j: usize, n: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Smoothed, sample-weighted node marginals and pairwise joint tables for
/// one class, over a subset of the global variables.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalModel {
    variables: Vec<usize>,
    cells: Vec<usize>,
    marginals: Vec<Vec<f64>>,
    pairs: Vec<Table>,
    alpha: f64,
}

impl EmpiricalModel {
    /// Fits tables from the samples of `ds` carrying `label`, using the
    /// dataset's current weights. Each pairwise cell receives pseudocount
    /// alpha/(cells_i*cells_j); tables normalize to (class mass + alpha).
    pub fn fit(ds: &WeightedDataset, label: i8, variables: &[usize], alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "smoothing alpha must be positive, got {alpha}"
            )));
        }
        let variables = validate_variables(variables, ds.n_vars())?;
        let idx: Vec<usize> = (0..ds.n()).filter(|&i| ds.label(i) == label).collect();
        let mass: f64 = idx.iter().map(|&i| ds.weights()[i]).sum();
        if idx.is_empty() || mass <= 0.0 {
            return Err(Error::NoTrainingMass(format!("{label:+}")));
        }

        let cells: Vec<usize> = variables.iter().map(|&v| ds.cells()[v]).collect();
        let nv = variables.len();
        let norm = mass + alpha;

        let slots: Vec<(usize, usize)> = (0..nv)
            .flat_map(|i| ((i + 1)..nv).map(move |j| (i, j)))
            .collect();
        let pairs: Vec<Table> = slots
            .par_iter()
            .map(|&(i, j)| {
                let (ci, cj) = (cells[i], cells[j]);
                let (vi, vj) = (variables[i], variables[j]);
                let mut t = Table::filled(ci, cj, alpha / (ci * cj) as f64);
                for &s in &idx {
                    let row = ds.row(s);
                    t.add(row[vi] as usize, row[vj] as usize, ds.weights()[s]);
                }
                t.scale(1.0 / norm);
                t
            })
            .collect();

        let marginals = if nv == 1 {
            let c = cells[0];
            let mut m = vec![alpha / c as f64; c];
            for &s in &idx {
                m[ds.row(s)[variables[0]] as usize] += ds.weights()[s];
            }
            m.iter_mut().for_each(|v| *v /= norm);
            vec![m]
        } else {
            derive_marginals(&pairs, nv)
        };

        Ok(EmpiricalModel {
            variables,
            cells,
            marginals,
            pairs,
            alpha,
        })
    }

    /// Builds a model from an explicit full joint pmf over the variables
    /// (row-major, last variable fastest). Intended for small hand-built
    /// instances; the joint must be strictly positive and normalized.
    pub fn from_joint(variables: &[usize], cells: &[usize], joint: &[f64]) -> Result<Self> {
        let variables = validate_variables(variables, usize::MAX)?;
        if variables.len() != cells.len() {
            return Err(Error::ShapeMismatch(
                format!("{} variables", variables.len()),
                format!("{} cell counts", cells.len()),
            ));
        }
        let support: usize = cells.iter().product();
        if joint.len() != support {
            return Err(Error::ShapeMismatch(
                format!("{support} joint cells"),
                format!("{}", joint.len()),
            ));
        }
        if let Some(i) = joint.iter().position(|&v| v <= 0.0 || !v.is_finite()) {
            return Err(Error::NonPositiveEntry(i));
        }
        let sum: f64 = joint.iter().sum();
        if (sum - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized { sum });
        }

        let nv = variables.len();
        // Strides for row-major indexing, last variable fastest.
        let mut strides = vec![1usize; nv];
        for i in (0..nv.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * cells[i + 1];
        }
        let digit = |flat: usize, v: usize| (flat / strides[v]) % cells[v];

        let mut pairs = Vec::new();
        for i in 0..nv {
            for j in (i + 1)..nv {
                let mut t = Table::filled(cells[i], cells[j], 0.0);
                for (flat, &p) in joint.iter().enumerate() {
                    t.add(digit(flat, i), digit(flat, j), p);
                }
                pairs.push(t);
            }
        }
        let marginals = if nv == 1 {
            vec![joint.to_vec()]
        } else {
            derive_marginals(&pairs, nv)
        };
        Ok(EmpiricalModel {
            variables,
            cells: cells.to_vec(),
            marginals,
            pairs,
            alpha: 0.0,
        })
    }

    /// Builds a single-variable model with an explicit marginal.
    pub fn from_marginal(variable: usize, marginal: Vec<f64>) -> Result<Self> {
        let sum: f64 = marginal.iter().sum();
        if (sum - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized { sum });
        }
        if let Some(i) = marginal.iter().position(|&v| v <= 0.0) {
            return Err(Error::NonPositiveEntry(i));
        }
        Ok(EmpiricalModel {
            variables: vec![variable],
            cells: vec![marginal.len()],
            marginals: vec![marginal],
            pairs: Vec::new(),
            alpha: 0.0,
        })
    }

    pub fn variables(&self) -> &[usize] {
        &self.variables
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn local_index(&self, variable: usize) -> Result<usize> {
        self.variables
            .binary_search(&variable)
            .map_err(|_| Error::Data(format!("variable {variable} not in model")))
    }

    /// Node marginal for a global variable id.
    pub fn marginal(&self, variable: usize) -> Result<&[f64]> {
        Ok(&self.marginals[self.local_index(variable)?])
    }

    /// Pairwise joint table for global variables i != j, with i indexing
    /// rows. Tables are stored once per unordered pair; the swapped
    /// orientation is returned transposed.
    pub fn pair_table(&self, i: usize, j: usize) -> Result<Table> {
        let (li, lj) = (self.local_index(i)?, self.local_index(j)?);
        if li == lj {
            return Err(Error::Data("pair requires two distinct variables".into()));
        }
        let nv = self.variables.len();
        if li < lj {
            Ok(self.pairs[pair_slot(li, lj, nv)].clone())
        } else {
            Ok(self.pairs[pair_slot(lj, li, nv)].transposed())
        }
    }

    /// Mutual information of the pair (i, j).
    pub fn pair_mi(&self, i: usize, j: usize) -> Result<f64> {
        mutual_information(&self.pair_table(i, j)?)
    }
}

fn validate_variables(variables: &[usize], n_vars: usize) -> Result<Vec<usize>> {
    if variables.is_empty() {
        return Err(Error::Data("empty variable list".into()));
    }
    let mut v = variables.to_vec();
    v.sort_unstable();
    v.dedup();
    if v.len() != variables.len() {
        return Err(Error::Data("duplicate variables".into()));
    }
    if n_vars != usize::MAX {
        if let Some(&bad) = v.iter().find(|&&x| x >= n_vars) {
            return Err(Error::Data(format!(
                "variable {bad} out of range ({n_vars} dataset variables)"
            )));
        }
    }
    Ok(v)
}

// Marginal of local var 0 from pair (0,1) rows; var k > 0 from pair (0,k)
// columns. All pairwise tables share these marginals exactly because the
// smoothing term is separable.
fn derive_marginals(pairs: &[Table], nv: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(nv);
    out.push(pairs[pair_slot(0, 1, nv)].row_marginals());
    for k in 1..nv {
        out.push(pairs[pair_slot(0, k, nv)].col_marginals());
    }
    out
}
