//! Shared helpers for the integration suites: a tiny deterministic RNG,
//! random strictly-positive joint pmfs, and exhaustive spanning-tree
//! enumeration via Pruefer sequences (the structure-learning oracle).

// Each test binary compiles its own copy and uses a different subset.
#![allow(dead_code)]

pub struct XorShift(pub u64);

impl XorShift {
    pub fn new(seed: u64) -> Self {
        XorShift(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.next_u64() % (hi - lo) as u64) as usize
    }
}

/// Strictly positive normalized joint over the given cell counts.
pub fn random_joint(cells: &[usize], rng: &mut XorShift) -> Vec<f64> {
    let n: usize = cells.iter().product();
    let mut joint: Vec<f64> = (0..n).map(|_| rng.uniform() + 0.05).collect();
    let sum: f64 = joint.iter().sum();
    joint.iter_mut().for_each(|v| *v /= sum);
    joint
}

fn prufer_decode(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut ptr = 0;
    while degree[ptr] != 1 {
        ptr += 1;
    }
    let mut leaf = ptr;
    for &s in seq {
        edges.push((leaf.min(s), leaf.max(s)));
        degree[s] -= 1;
        if degree[s] == 1 && s < ptr {
            leaf = s;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    edges.push((leaf.min(n - 1), leaf.max(n - 1)));
    edges
}

/// Every labeled spanning tree on n nodes (Cayley: n^(n-2) of them).
pub fn all_spanning_trees(n: usize) -> Vec<Vec<(usize, usize)>> {
    match n {
        0 => Vec::new(),
        1 => vec![Vec::new()],
        2 => vec![vec![(0, 1)]],
        _ => {
            let len = n - 2;
            let count = n.pow(len as u32);
            let mut out = Vec::with_capacity(count);
            for code in 0..count {
                let mut seq = Vec::with_capacity(len);
                let mut c = code;
                for _ in 0..len {
                    seq.push(c % n);
                    c /= n;
                }
                out.push(prufer_decode(&seq, n));
            }
            out
        }
    }
}

/// Evaluates a tree's pmf over the full joint support (row-major, last
/// variable fastest) through the public log-likelihood path.
pub fn tree_pmf_full(tree: &treefuse::tree::TreeGraph, cells: &[usize]) -> Vec<f64> {
    let n: usize = cells.iter().product();
    let nv = cells.len();
    let mut strides = vec![1usize; nv];
    for i in (0..nv.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * cells[i + 1];
    }
    (0..n)
        .map(|flat| {
            let sample: Vec<u16> = (0..nv)
                .map(|v| ((flat / strides[v]) % cells[v]) as u16)
                .collect();
            tree.log_likelihood(&sample).unwrap().exp()
        })
        .collect()
}
