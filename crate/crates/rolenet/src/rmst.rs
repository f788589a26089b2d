//! Relaxed Minimum Spanning Tree: sparsifies the similarity matrix into a
//! connected undirected network.
//!
//! The MST of the dissimilarity matrix is always kept; a non-tree pair (i, j)
//! is added when mlink_{ij} + gamma (d_i + d_j) > z_{ij}, where mlink is the
//! maximal dissimilarity along the MST path and d_i the distance to the
//! nearest neighbor of i.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::rbs::SimilarityMatrix;

/// Z = 1 - Y with an exactly zero diagonal.
#[derive(Debug, Clone)]
pub struct DissimilarityMatrix {
    pub z: DMatrix<f64>,
}

/// Nearest-neighbor distance per node, d_i = min_{k != i} z_{i,k}.
#[derive(Debug, Clone)]
pub struct LocalScale {
    pub d: Vec<f64>,
}

/// The sparsified similarity network. Edges are stored once as (i, j) with
/// i < j, sorted; `similarities` is index-aligned with `edges` and holds
/// y_{i,j} = 1 - z_{i,j} for every kept edge.
#[derive(Debug, Clone)]
pub struct RmstNetwork {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub similarities: Vec<f64>,
    pub mst_edges: Vec<(usize, usize)>,
    pub gamma: f64,
}

pub fn dissimilarity(y: &SimilarityMatrix) -> DissimilarityMatrix {
    let n = y.y.nrows();
    let mut z = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            z[(i, j)] = if i == j { 0.0 } else { 1.0 - y.y[(i, j)] };
        }
    }
    DissimilarityMatrix { z }
}

/// Prim's algorithm on the complete graph weighted by Z, O(N^2).
///
/// Ties are broken deterministically: the next node attached is the one with
/// the smallest index among minimum-distance candidates, and a node's parent
/// is only replaced on a strict improvement. On an all-equal matrix this
/// yields the lexicographically smallest edge set (a star rooted at node 0).
pub fn minimum_spanning_tree(z: &DissimilarityMatrix) -> Result<Vec<(usize, usize)>> {
    let n = z.z.nrows();
    if n < 2 {
        return Err(Error::Config(format!(
            "spanning tree requires at least 2 nodes, got {n}"
        )));
    }
    let mut in_tree = vec![false; n];
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![0usize; n];
    in_tree[0] = true;
    for j in 1..n {
        dist[j] = z.z[(0, j)];
    }
    let mut edges = Vec::with_capacity(n - 1);
    for _ in 1..n {
        let mut best = usize::MAX;
        for j in 0..n {
            if !in_tree[j] && (best == usize::MAX || dist[j] < dist[best]) {
                best = j;
            }
        }
        in_tree[best] = true;
        let (a, b) = (parent[best].min(best), parent[best].max(best));
        edges.push((a, b));
        for j in 0..n {
            if !in_tree[j] && z.z[(best, j)] < dist[j] {
                dist[j] = z.z[(best, j)];
                parent[j] = best;
            }
        }
    }
    edges.sort_unstable();
    Ok(edges)
}

struct DisjointSets {
    parent: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            members: (0..n).map(|i| vec![i]).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// All-pairs maximum edge weight along the unique tree path, via a single
/// pass over the tree edges in ascending (weight, i, j) order: when an edge
/// of weight w merges two components, w is the path maximum for every
/// cross-component pair. O(N^2) total.
pub fn mlink_all_pairs(
    n: usize,
    tree: &[(usize, usize)],
    z: &DissimilarityMatrix,
) -> Result<DMatrix<f64>> {
    if tree.len() != n - 1 {
        return Err(Error::Internal(format!(
            "not a spanning tree: {} edges for {} nodes",
            tree.len(),
            n
        )));
    }
    let mut order: Vec<(f64, usize, usize)> = tree
        .iter()
        .map(|&(i, j)| {
            let (a, b) = (i.min(j), i.max(j));
            (z.z[(a, b)], a, b)
        })
        .collect();
    order.sort_by(|x, y| x.partial_cmp(y).expect("non-finite tree weight"));

    let mut sets = DisjointSets::new(n);
    let mut mlink = DMatrix::zeros(n, n);
    for (w, i, j) in order {
        let ra = sets.find(i);
        let rb = sets.find(j);
        if ra == rb {
            return Err(Error::Internal(format!(
                "not a spanning tree: edge ({i}, {j}) closes a cycle"
            )));
        }
        for &a in &sets.members[ra] {
            for &b in &sets.members[rb] {
                mlink[(a, b)] = w;
                mlink[(b, a)] = w;
            }
        }
        // merge the smaller member list into the larger
        let (keep, gone) = if sets.members[ra].len() >= sets.members[rb].len() {
            (ra, rb)
        } else {
            (rb, ra)
        };
        let moved = std::mem::take(&mut sets.members[gone]);
        sets.members[keep].extend(moved);
        sets.parent[gone] = keep;
    }
    Ok(mlink)
}

pub fn local_scale(z: &DissimilarityMatrix) -> Result<LocalScale> {
    let n = z.z.nrows();
    if n < 2 {
        return Err(Error::Config(
            "local scale requires at least 2 nodes".to_string(),
        ));
    }
    let d = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&k| k != i)
                .map(|k| z.z[(i, k)])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(LocalScale { d })
}

/// Applies the relaxation criterion: every tree edge is kept, and a non-tree
/// pair is kept when mlink_{ij} + gamma (d_i + d_j) > z_{ij} holds strictly
/// (exact ties exclude the edge).
pub fn relax(
    z: &DissimilarityMatrix,
    tree: &[(usize, usize)],
    mlink: &DMatrix<f64>,
    d: &LocalScale,
    gamma: f64,
) -> Result<RmstNetwork> {
    if gamma < 0.0 {
        return Err(Error::Config(format!("gamma must be >= 0, got {gamma}")));
    }
    let n = z.z.nrows();
    let mut in_tree = DMatrix::from_element(n, n, false);
    for &(i, j) in tree {
        in_tree[(i, j)] = true;
        in_tree[(j, i)] = true;
    }
    let mut edges = Vec::new();
    let mut similarities = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let keep = in_tree[(i, j)]
                || mlink[(i, j)] + gamma * (d.d[i] + d.d[j]) > z.z[(i, j)];
            if keep {
                edges.push((i, j));
                similarities.push(1.0 - z.z[(i, j)]);
            }
        }
    }
    let mut mst_edges: Vec<(usize, usize)> = tree.iter().map(|&(i, j)| (i.min(j), i.max(j))).collect();
    mst_edges.sort_unstable();
    Ok(RmstNetwork {
        n,
        edges,
        similarities,
        mst_edges,
        gamma,
    })
}

/// Full RMST construction from a similarity matrix.
pub fn rmst(y: &SimilarityMatrix, gamma: f64) -> Result<RmstNetwork> {
    let z = dissimilarity(y);
    let tree = minimum_spanning_tree(&z)?;
    let mlink = mlink_all_pairs(z.z.nrows(), &tree, &z)?;
    let d = local_scale(&z)?;
    relax(&z, &tree, &mlink, &d, gamma)
}
