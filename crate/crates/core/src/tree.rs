//! Tree-structured graphical models: generative (Chow-Liu) and
//! discriminative structure learning via maximum-weight spanning trees, and
//! the tree-approximate J-divergence that drives the discriminative
//! objective and the boosting stopping rule.
//!
//! A tree over nodes V with edges E and pairwise tables marginally
//! consistent with the node tables defines the pmf
//!
//! ```text
//! p(x) = prod_i p_i(x_i) * prod_{(i,j) in E} p_ij(x_i,x_j) / (p_i(x_i) p_j(x_j))
//! ```
//!
//! Structure learning reduces to a maximum-weight spanning tree: mutual
//! information weights give the best generative fit, while the weights
//!
//! ```text
//! psi_p(i,j) = sum_{a,b} [p_ij(a,b) - q_ij(a,b)] * ln[p_ij(a,b) / (p_i(a) p_j(b))]
//! ```
//!
//! (and symmetrically psi_q with the roles swapped) decouple the joint
//! discriminative objective into two independent MWST problems.

use serde::{Deserialize, Serialize};

use crate::distributions::{EmpiricalModel, Table};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeKind {
    Generative,
    Discriminative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassSide {
    P,
    Q,
}

/// Where a tree came from: which objective, which class, which boosting
/// iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: TreeKind,
    pub side: ClassSide,
    pub iteration: usize,
}

/// A spanning tree or forest over a subset of the global variables, with
/// per-node log-marginal tables and per-edge log-ratio tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeGraph {
    nodes: Vec<usize>,
    cells: Vec<usize>,
    edges: Vec<(usize, usize)>,
    node_log_marginals: Vec<Vec<f64>>,
    edge_log_ratios: Vec<Table>,
    provenance: Provenance,
}

impl TreeGraph {
    /// Assembles a tree from a model and an edge list (global ids, i < j).
    /// Node tables are ln p_i; edge tables are ln[p_ij / (p_i p_j)].
    pub fn from_model(
        model: &EmpiricalModel,
        edges: Vec<(usize, usize)>,
        provenance: Provenance,
    ) -> Result<Self> {
        let nodes = model.variables().to_vec();
        // Rejects cycles and endpoints outside the node set.
        count_components(&nodes, &edges)?;
        let node_log_marginals: Vec<Vec<f64>> = nodes
            .iter()
            .map(|&v| Ok(model.marginal(v)?.iter().map(|p| p.ln()).collect()))
            .collect::<Result<_>>()?;
        let mut edge_log_ratios = Vec::with_capacity(edges.len());
        for &(i, j) in &edges {
            let t = model.pair_table(i, j)?;
            let pi = model.marginal(i)?;
            let pj = model.marginal(j)?;
            let mut log = Table::filled(t.rows(), t.cols(), 0.0);
            for a in 0..t.rows() {
                for b in 0..t.cols() {
                    log.set(a, b, (t.get(a, b) / (pi[a] * pj[b])).ln());
                }
            }
            edge_log_ratios.push(log);
        }
        Ok(TreeGraph {
            cells: model.cells().to_vec(),
            nodes,
            edges,
            node_log_marginals,
            edge_log_ratios,
            provenance,
        })
    }

    /// Concatenates disjoint trees (no shared nodes) into one forest.
    pub fn concatenate(parts: &[TreeGraph], provenance: Provenance) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut cells = Vec::new();
        let mut edges = Vec::new();
        let mut node_log_marginals = Vec::new();
        let mut edge_log_ratios = Vec::new();
        for part in parts {
            nodes.extend_from_slice(&part.nodes);
            cells.extend_from_slice(&part.cells);
            edges.extend_from_slice(&part.edges);
            node_log_marginals.extend(part.node_log_marginals.iter().cloned());
            edge_log_ratios.extend(part.edge_log_ratios.iter().cloned());
        }
        let mut sorted = nodes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != nodes.len() {
            return Err(Error::Data("concatenated trees share nodes".into()));
        }
        // Keep node order sorted for deterministic lookup.
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by_key(|&k| nodes[k]);
        let nodes_s: Vec<usize> = order.iter().map(|&k| nodes[k]).collect();
        let cells_s: Vec<usize> = order.iter().map(|&k| cells[k]).collect();
        let marg_s: Vec<Vec<f64>> = order.iter().map(|&k| node_log_marginals[k].clone()).collect();
        let mut paired: Vec<((usize, usize), Table)> =
            edges.into_iter().zip(edge_log_ratios).collect();
        paired.sort_by_key(|(e, _)| *e);
        let (edges, edge_log_ratios): (Vec<_>, Vec<_>) = paired.into_iter().unzip();
        Ok(TreeGraph {
            nodes: nodes_s,
            cells: cells_s,
            edges,
            node_log_marginals: marg_s,
            edge_log_ratios,
            provenance,
        })
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    /// Log-likelihood of a sample under the tree factorization. `sample` is
    /// indexed by global variable id and must cover every tree node.
    pub fn log_likelihood(&self, sample: &[u16]) -> Result<f64> {
        Ok(self.log_likelihood_counted(sample)?.0)
    }

    /// Log-likelihood plus the number of table lookups performed.
    pub fn log_likelihood_counted(&self, sample: &[u16]) -> Result<(f64, usize)> {
        let mut ll = 0.0;
        let mut lookups = 0usize;
        for (k, &node) in self.nodes.iter().enumerate() {
            let sym = *sample.get(node).ok_or(Error::DimensionMismatch {
                expected: node + 1,
                got: sample.len(),
            })? as usize;
            if sym >= self.cells[k] {
                return Err(Error::SymbolOutOfRange {
                    variable: node,
                    symbol: sym as u16,
                    cells: self.cells[k],
                });
            }
            ll += self.node_log_marginals[k][sym];
            lookups += 1;
        }
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            // Edge endpoints are tree nodes, so the symbols were validated
            // by the node loop above.
            ll += self.edge_log_ratios[e].get(sample[i] as usize, sample[j] as usize);
            lookups += 1;
        }
        Ok((ll, lookups))
    }
}

/// A (tree_p, tree_q) pair learned jointly for one boosting iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreePair {
    pub tree_p: TreeGraph,
    pub tree_q: TreeGraph,
    pub iteration: usize,
    pub j_divergence: f64,
}

// ---------------------------------------------------------------------------
// Maximum-weight spanning tree (Kruskal)
// ---------------------------------------------------------------------------

struct Dsu {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            self.parent[x] = self.find(self.parent[x]);
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Kruskal over local node indices 0..n. Candidates are (weight, i, j) with
/// i < j; ties break lexicographically on (i, j) so learning is
/// deterministic. Returns the selected edges in lexicographic order.
fn max_weight_spanning_tree(n: usize, mut candidates: Vec<(f64, usize, usize)>) -> Vec<(usize, usize)> {
    candidates.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("finite edge weights")
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut dsu = Dsu::new(n);
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for (_, i, j) in candidates {
        if dsu.union(i, j) {
            edges.push((i, j));
            if edges.len() + 1 == n {
                break;
            }
        }
    }
    edges.sort_unstable();
    edges
}

fn count_components(nodes: &[usize], edges: &[(usize, usize)]) -> Result<usize> {
    let index = |v: usize| -> Result<usize> {
        nodes
            .binary_search(&v)
            .map_err(|_| Error::Data(format!("edge endpoint {v} not in node set")))
    };
    let mut dsu = Dsu::new(nodes.len());
    let mut merges = 0;
    for &(i, j) in edges {
        if dsu.union(index(i)?, index(j)?) {
            merges += 1;
        } else {
            return Err(Error::Data(format!("cycle through edge ({i}, {j})")));
        }
    }
    Ok(nodes.len() - merges)
}

/// Pairwise edge weights for all unordered pairs of `nodes`, by global id.
fn weight_matrix<F>(nodes: &[usize], mut weight: F) -> Result<Vec<(f64, usize, usize)>>
where
    F: FnMut(usize, usize) -> Result<f64>,
{
    let mut out = Vec::with_capacity(nodes.len() * (nodes.len().saturating_sub(1)) / 2);
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            out.push((weight(nodes[i], nodes[j])?, i, j));
        }
    }
    Ok(out)
}

/// Chow-Liu structure: the maximum-weight spanning tree under mutual
/// information edge weights, with tables from `model`.
pub fn chow_liu_tree(model: &EmpiricalModel, nodes: &[usize]) -> Result<TreeGraph> {
    let nodes = resolve_nodes(model, nodes)?;
    let weights = weight_matrix(&nodes, |i, j| model.pair_mi(i, j))?;
    let local_edges = max_weight_spanning_tree(nodes.len(), weights);
    let edges = to_global(&nodes, &local_edges);
    TreeGraph::from_model(
        model,
        edges,
        Provenance {
            kind: TreeKind::Generative,
            side: ClassSide::P,
            iteration: 0,
        },
    )
}

/// The discriminative edge weight psi_p(i, j); swap the model arguments to
/// obtain psi_q.
pub fn discriminative_edge_weight(
    p_model: &EmpiricalModel,
    q_model: &EmpiricalModel,
    i: usize,
    j: usize,
) -> Result<f64> {
    let tp = p_model.pair_table(i, j)?;
    let tq = q_model.pair_table(i, j)?;
    if tp.rows() != tq.rows() || tp.cols() != tq.cols() {
        return Err(Error::ShapeMismatch(
            format!("{}x{}", tp.rows(), tp.cols()),
            format!("{}x{}", tq.rows(), tq.cols()),
        ));
    }
    let pi = p_model.marginal(i)?;
    let pj = p_model.marginal(j)?;
    let mut psi = 0.0;
    for a in 0..tp.rows() {
        for b in 0..tp.cols() {
            psi += (tp.get(a, b) - tq.get(a, b)) * (tp.get(a, b) / (pi[a] * pj[b])).ln();
        }
    }
    Ok(psi)
}

/// Jointly learns the discriminative pair: tree_p maximizes the psi_p total,
/// tree_q the psi_q total, each by Kruskal. With `allow_forest`, edges whose
/// weight is not positive are dropped afterwards.
pub fn learn_discriminative_tree_pair(
    p_model: &EmpiricalModel,
    q_model: &EmpiricalModel,
    nodes: &[usize],
    iteration: usize,
    allow_forest: bool,
) -> Result<TreePair> {
    let nodes = resolve_nodes(p_model, nodes)?;
    let side = |model_a: &EmpiricalModel,
                model_b: &EmpiricalModel,
                class: ClassSide|
     -> Result<TreeGraph> {
        let weights = weight_matrix(&nodes, |i, j| {
            discriminative_edge_weight(model_a, model_b, i, j)
        })?;
        let lookup: std::collections::BTreeMap<(usize, usize), f64> =
            weights.iter().map(|&(w, i, j)| ((i, j), w)).collect();
        let mut local_edges = max_weight_spanning_tree(nodes.len(), weights);
        if allow_forest {
            local_edges.retain(|&(i, j)| lookup[&(i, j)] > 0.0);
        }
        TreeGraph::from_model(
            model_a,
            to_global(&nodes, &local_edges),
            Provenance {
                kind: TreeKind::Discriminative,
                side: class,
                iteration,
            },
        )
    };

    let tree_p = side(p_model, q_model, ClassSide::P)?;
    let tree_q = side(q_model, p_model, ClassSide::Q)?;
    let mut pair = TreePair {
        tree_p,
        tree_q,
        iteration,
        j_divergence: 0.0,
    };
    pair.j_divergence = tree_approx_j_divergence(&pair, p_model, q_model)?;
    Ok(pair)
}

/// Closed-form tree-approximate J-divergence of a pair under the two
/// empirical models: the node term
/// `sum_i sum_a [p_i(a) - q_i(a)] ln[p_i(a)/q_i(a)]` plus the psi_p total
/// over tree_p's edges and the psi_q total over tree_q's edges.
pub fn tree_approx_j_divergence(
    pair: &TreePair,
    p_model: &EmpiricalModel,
    q_model: &EmpiricalModel,
) -> Result<f64> {
    let mut j = 0.0;
    for &v in p_model.variables() {
        let pm = p_model.marginal(v)?;
        let qm = q_model.marginal(v)?;
        if pm.len() != qm.len() {
            return Err(Error::ShapeMismatch(
                format!("{} cells", pm.len()),
                format!("{} cells", qm.len()),
            ));
        }
        for (pa, qa) in pm.iter().zip(qm) {
            j += (pa - qa) * (pa / qa).ln();
        }
    }
    for &(i, k) in pair.tree_p.edges() {
        j += discriminative_edge_weight(p_model, q_model, i, k)?;
    }
    for &(i, k) in pair.tree_q.edges() {
        j += discriminative_edge_weight(q_model, p_model, i, k)?;
    }
    Ok(j)
}

/// Log-likelihood of `sample` under `tree`; finite whenever the underlying
/// tables are strictly positive.
pub fn tree_log_likelihood(tree: &TreeGraph, sample: &[u16]) -> Result<f64> {
    tree.log_likelihood(sample)
}

fn resolve_nodes(model: &EmpiricalModel, nodes: &[usize]) -> Result<Vec<usize>> {
    let mut nodes = nodes.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    for &v in &nodes {
        model.local_index(v)?;
    }
    if nodes.is_empty() {
        return Err(Error::Data("empty node list".into()));
    }
    Ok(nodes)
}

fn to_global(nodes: &[usize], local_edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    local_edges
        .iter()
        .map(|&(i, j)| (nodes[i], nodes[j]))
        .collect()
}
