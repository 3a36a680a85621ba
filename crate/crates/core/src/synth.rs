//! Synthetic labeled data for the fusion pipeline.
//!
//! Each class samples from a forest-structured discrete distribution: one
//! Markov chain per feature set, with class-dependent root marginals. Under
//! class p only, designated cross-set pairs are coupled: the child variable
//! re-parents onto a variable from an earlier feature set with mixing
//! strength rho, so the cross-set correlation exists in one class and not
//! the other. Symbols are emitted as continuous features (symbol plus
//! sub-cell uniform jitter) so the quantization path is exercised.
//!
//! The per-class distributions stay forest-structured, so exact node and
//! pairwise marginals are computable in closed form; they serve as oracles
//! for the generator itself.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::Table;
use crate::error::{Error, Result};
use crate::features::{FeatureLayout, FeatureMatrix};
use crate::fusion::ClassData;
use crate::tree::ClassSide;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    /// Per-set variable counts (M sets).
    pub sets: Vec<usize>,
    /// Symbols per variable.
    pub cells: usize,
    /// Cross-set coupling strength in [0, 1); 0 means independent sets.
    pub rho: f64,
    /// Within-set chain stay-probability for class p.
    pub chain_stay: f64,
    /// Chain stay-probability for class q; defaults to the class-p value.
    pub chain_stay_q: Option<f64>,
    /// Class q's chain copies (parent + shift) mod cells instead of the
    /// parent symbol, so the two classes can differ in dependence structure
    /// while sharing uniform marginals.
    pub chain_shift_q: usize,
    /// Root marginal for class p; class q uses it reversed.
    pub root_tilt: Vec<f64>,
    /// (parent, child) global variable pairs; the child re-parents onto the
    /// parent under class p. Parents must live in an earlier set.
    pub planted_pairs: Vec<(usize, usize)>,
    pub n_per_class: usize,
    /// Uniform noise in [0, jitter) added to each symbol; must stay below 1
    /// so symbols remain recoverable.
    pub jitter: f64,
    pub class_names: [String; 2],
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            sets: vec![4, 4, 4],
            cells: 4,
            rho: 0.8,
            chain_stay: 0.5,
            chain_stay_q: None,
            chain_shift_q: 0,
            root_tilt: vec![0.4, 0.3, 0.2, 0.1],
            planted_pairs: vec![(2, 6), (7, 11)],
            n_per_class: 1000,
            jitter: 0.999,
            class_names: ["p".to_string(), "q".to_string()],
        }
    }
}

impl SynthSpec {
    pub fn layout(&self) -> Result<FeatureLayout> {
        FeatureLayout::new(self.sets.clone())
    }

    pub fn n_total(&self) -> usize {
        self.sets.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let layout = self.layout()?;
        if self.cells < 2 {
            return Err(Error::InvalidParameter("cells must be >= 2".into()));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidParameter(format!(
                "rho must lie in [0, 1), got {}",
                self.rho
            )));
        }
        for stay in [self.chain_stay, self.chain_stay_q.unwrap_or(self.chain_stay)] {
            if !(0.0..=1.0).contains(&stay) {
                return Err(Error::InvalidParameter("chain_stay must lie in [0, 1]".into()));
            }
        }
        if !(0.0..1.0).contains(&self.jitter) {
            return Err(Error::InvalidParameter("jitter must lie in [0, 1)".into()));
        }
        if self.root_tilt.len() != self.cells
            || self.root_tilt.iter().any(|&p| p <= 0.0)
            || (self.root_tilt.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidParameter(
                "root_tilt must be a positive pmf over `cells` symbols".into(),
            ));
        }
        if self.chain_shift_q >= self.cells {
            return Err(Error::InvalidParameter(format!(
                "chain_shift_q must be below cells ({})",
                self.cells
            )));
        }
        if self.n_per_class == 0 {
            return Err(Error::InvalidParameter("n_per_class must be >= 1".into()));
        }
        let offsets = layout.offsets();
        let set_of = |v: usize| -> usize {
            offsets
                .iter()
                .rposition(|&off| off <= v)
                .expect("offsets start at zero")
        };
        let mut children = std::collections::BTreeSet::new();
        for &(u, v) in &self.planted_pairs {
            if u >= self.n_total() || v >= self.n_total() {
                return Err(Error::InvalidParameter(format!(
                    "planted pair ({u}, {v}) out of range"
                )));
            }
            if set_of(u) >= set_of(v) {
                return Err(Error::InvalidParameter(format!(
                    "planted pair ({u}, {v}) must couple an earlier set to a later one"
                )));
            }
            if !children.insert(v) {
                return Err(Error::InvalidParameter(format!(
                    "variable {v} is coupled more than once"
                )));
            }
        }
        if self.class_names[0] == self.class_names[1] {
            return Err(Error::InvalidParameter("class names must differ".into()));
        }
        Ok(())
    }

    /// Root marginal for one class: class q reverses the tilt.
    fn root_marginal(&self, side: ClassSide) -> Vec<f64> {
        match side {
            ClassSide::P => self.root_tilt.clone(),
            ClassSide::Q => self.root_tilt.iter().rev().copied().collect(),
        }
    }

    fn chain_transition(&self, side: ClassSide) -> Vec<Vec<f64>> {
        let c = self.cells;
        let (stay, shift) = match side {
            ClassSide::P => (self.chain_stay, 0),
            ClassSide::Q => (self.chain_stay_q.unwrap_or(self.chain_stay), self.chain_shift_q),
        };
        (0..c)
            .map(|a| {
                (0..c)
                    .map(|b| {
                        let keep = if (a + shift) % c == b { stay } else { 0.0 };
                        keep + (1.0 - stay) / c as f64
                    })
                    .collect()
            })
            .collect()
    }

    fn coupling_transition(&self) -> Vec<Vec<f64>> {
        let c = self.cells;
        (0..c)
            .map(|a| {
                (0..c)
                    .map(|b| {
                        let copy = if a == b { self.rho } else { 0.0 };
                        copy + (1.0 - self.rho) / c as f64
                    })
                    .collect()
            })
            .collect()
    }

    /// Forest structure for one class: each node is a root (with marginal)
    /// or carries (parent, transition rows).
    fn class_structure(&self, side: ClassSide) -> Vec<NodeModel> {
        let layout = self.layout().expect("validated layout");
        let mut nodes = Vec::with_capacity(self.n_total());
        for s in 0..layout.num_sets() {
            for (k, v) in layout.set_range(s).enumerate() {
                let _ = v;
                if k == 0 {
                    nodes.push(NodeModel {
                        parent: None,
                        rows: vec![self.root_marginal(side)],
                    });
                } else {
                    nodes.push(NodeModel {
                        parent: Some(layout.offsets()[s] + k - 1),
                        rows: self.chain_transition(side),
                    });
                }
            }
        }
        if side == ClassSide::P {
            for &(u, v) in &self.planted_pairs {
                nodes[v] = NodeModel {
                    parent: Some(u),
                    rows: self.coupling_transition(),
                };
            }
        }
        nodes
    }

    /// Exact node marginal under one class.
    pub fn exact_marginal(&self, side: ClassSide, variable: usize) -> Result<Vec<f64>> {
        self.validate()?;
        let nodes = self.class_structure(side);
        Ok(marginal_of(&nodes, variable))
    }

    /// Exact pairwise joint pmf under one class; rows index `i`.
    pub fn exact_pair_pmf(&self, side: ClassSide, i: usize, j: usize) -> Result<Table> {
        self.validate()?;
        if i == j || i >= self.n_total() || j >= self.n_total() {
            return Err(Error::InvalidParameter(format!("bad pair ({i}, {j})")));
        }
        let nodes = self.class_structure(side);
        let c = self.cells;

        let anc_i = ancestors(&nodes, i);
        let anc_j = ancestors(&nodes, j);
        let common = anc_i.iter().find(|v| anc_j.contains(v)).copied();

        let mut out = Table::filled(c, c, 0.0);
        match common {
            None => {
                // Different roots: independent.
                let mi = marginal_of(&nodes, i);
                let mj = marginal_of(&nodes, j);
                for a in 0..c {
                    for b in 0..c {
                        out.set(a, b, mi[a] * mj[b]);
                    }
                }
            }
            Some(w) if w == i => {
                let mi = marginal_of(&nodes, i);
                let m_ij = path_matrix(&nodes, i, j, c);
                for a in 0..c {
                    for b in 0..c {
                        out.set(a, b, mi[a] * m_ij[a][b]);
                    }
                }
            }
            Some(w) if w == j => {
                let mj = marginal_of(&nodes, j);
                let m_ji = path_matrix(&nodes, j, i, c);
                for a in 0..c {
                    for b in 0..c {
                        out.set(a, b, mj[b] * m_ji[b][a]);
                    }
                }
            }
            Some(w) => {
                let mw = marginal_of(&nodes, w);
                let m_wi = path_matrix(&nodes, w, i, c);
                let m_wj = path_matrix(&nodes, w, j, c);
                for a in 0..c {
                    for b in 0..c {
                        let mut p = 0.0;
                        for (cw, &pw) in mw.iter().enumerate() {
                            p += pw * m_wi[cw][a] * m_wj[cw][b];
                        }
                        out.set(a, b, p);
                    }
                }
            }
        }
        Ok(out)
    }
}

struct NodeModel {
    parent: Option<usize>,
    /// Root: one row, the marginal. Child: transition rows indexed by the
    /// parent symbol.
    rows: Vec<Vec<f64>>,
}

/// Ancestors of `v` starting at `v` itself up to its root.
fn ancestors(nodes: &[NodeModel], v: usize) -> Vec<usize> {
    let mut out = vec![v];
    let mut cur = v;
    while let Some(p) = nodes[cur].parent {
        out.push(p);
        cur = p;
    }
    out
}

fn marginal_of(nodes: &[NodeModel], v: usize) -> Vec<f64> {
    let mut path = ancestors(nodes, v);
    path.reverse();
    let root = path[0];
    let mut mu = nodes[root].rows[0].clone();
    for &step in &path[1..] {
        let rows = &nodes[step].rows;
        let c = mu.len();
        let mut next = vec![0.0; c];
        for (a, &pa) in mu.iter().enumerate() {
            for b in 0..c {
                next[b] += pa * rows[a][b];
            }
        }
        mu = next;
    }
    mu
}

/// Transition matrix P(descendant | ancestor) along the unique parent chain
/// from `anc` down to `desc`.
fn path_matrix(nodes: &[NodeModel], anc: usize, desc: usize, c: usize) -> Vec<Vec<f64>> {
    let mut path = ancestors(nodes, desc);
    path.reverse();
    let start = path.iter().position(|&v| v == anc).expect("anc on path");
    let mut m: Vec<Vec<f64>> = (0..c)
        .map(|a| (0..c).map(|b| if a == b { 1.0 } else { 0.0 }).collect())
        .collect();
    for &step in &path[start + 1..] {
        let rows = &nodes[step].rows;
        let mut next = vec![vec![0.0; c]; c];
        for (a, row) in m.iter().enumerate() {
            for (mid, &pm) in row.iter().enumerate() {
                for b in 0..c {
                    next[a][b] += pm * rows[mid][b];
                }
            }
        }
        m = next;
    }
    m
}

fn sample_row(row: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    row.len() - 1
}

/// Generates the two labeled classes. Fixed seeds give bit-identical
/// datasets.
pub fn generate(spec: &SynthSpec, seed: u64) -> Result<Vec<ClassData>> {
    spec.validate()?;
    let layout = spec.layout()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut classes = Vec::with_capacity(2);
    for (side, name) in [
        (ClassSide::P, spec.class_names[0].clone()),
        (ClassSide::Q, spec.class_names[1].clone()),
    ] {
        let nodes = spec.class_structure(side);
        let n_total = spec.n_total();
        let mut flat = vec![0.0; spec.n_per_class * n_total];
        let mut symbols = vec![0usize; n_total];
        for i in 0..spec.n_per_class {
            for v in 0..n_total {
                let row = match nodes[v].parent {
                    None => &nodes[v].rows[0],
                    Some(p) => &nodes[v].rows[symbols[p]],
                };
                symbols[v] = sample_row(row, &mut rng);
                let noise: f64 = rng.random::<f64>() * spec.jitter;
                flat[i * n_total + v] = symbols[v] as f64 + noise;
            }
        }
        let sets = (0..layout.num_sets())
            .map(|s| {
                let range = layout.set_range(s);
                let mut data = Vec::with_capacity(spec.n_per_class * range.len());
                for i in 0..spec.n_per_class {
                    data.extend_from_slice(&flat[i * n_total + range.start..i * n_total + range.end]);
                }
                FeatureMatrix::new(spec.n_per_class, range.len(), data)
            })
            .collect::<Result<Vec<_>>>()?;
        classes.push(ClassData { name, sets });
    }
    Ok(classes)
}
