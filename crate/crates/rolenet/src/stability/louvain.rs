//! Louvain heuristic for a generalized quality r(H) = trace(H^T B H) on a
//! dense symmetric matrix B.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Partition;
use crate::stability::partition_quality;

/// One phase-1 pass structure: sweeps nodes in a seeded-random order, moving
/// each node to the community with the largest positive gain, until a full
/// sweep makes no move. Returns compact labels and whether anything moved.
fn local_moves(b: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> (Vec<u32>, bool) {
    let n = b.nrows();
    let mut label: Vec<usize> = (0..n).collect();
    let mut size: Vec<usize> = vec![1; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut conn = vec![0.0f64; n];
    let mut moved_any = false;
    loop {
        let mut moved_this_sweep = false;
        for &i in &order {
            // connection strength from i to every community, excluding b_ii
            for c in conn.iter_mut() {
                *c = 0.0;
            }
            for j in 0..n {
                if j != i {
                    conn[label[j]] += b[(i, j)];
                }
            }
            let current = label[i];
            // best existing community; ties keep the current community,
            // then the smallest community index
            let mut best_c = current;
            let mut best_gain = conn[current];
            for c in 0..n {
                if c != current && size[c] > 0 && conn[c] > best_gain {
                    best_gain = conn[c];
                    best_c = c;
                }
            }
            // isolation in a fresh community scores 0
            if best_gain < 0.0 && size[current] > 1 {
                if let Some(empty) = (0..n).find(|&c| size[c] == 0) {
                    best_gain = 0.0;
                    best_c = empty;
                }
            }
            if best_c != current && best_gain > conn[current] {
                size[current] -= 1;
                size[best_c] += 1;
                label[i] = best_c;
                moved_this_sweep = true;
                moved_any = true;
            }
        }
        if !moved_this_sweep {
            break;
        }
    }
    (label.iter().map(|&l| l as u32).collect(), moved_any)
}

/// Aggregates B into the community-by-community block-sum matrix.
fn aggregate(b: &DMatrix<f64>, labels: &[u32], n_comm: usize) -> DMatrix<f64> {
    let n = b.nrows();
    let mut out = DMatrix::zeros(n_comm, n_comm);
    for i in 0..n {
        for j in 0..n {
            out[(labels[i] as usize, labels[j] as usize)] += b[(i, j)];
        }
    }
    out
}

/// Two-phase Louvain optimization of trace(H^T B H) on a dense symmetric B.
/// Deterministic given the seed: randomness enters only through the node
/// sweep order.
pub fn louvain_optimize(b: &DMatrix<f64>, seed: u64) -> (Partition, f64) {
    let n = b.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // mapping from original nodes to current super-node labels
    let mut node_to_super: Vec<u32> = (0..n as u32).collect();
    let mut current = b.clone();

    loop {
        let (raw, moved) = local_moves(&current, &mut rng);
        let level = Partition::new(&raw);
        if !moved || level.n_communities() == current.nrows() {
            break;
        }
        for l in node_to_super.iter_mut() {
            *l = level.assignment()[*l as usize];
        }
        current = aggregate(&current, level.assignment(), level.n_communities());
    }

    let partition = Partition::new(&node_to_super);
    let quality = partition_quality(b, &partition);
    (partition, quality)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rmst::RmstNetwork;
    use crate::stability::MarkovProcess;
    use nalgebra::DVector;

    fn two_clique_autocov(t: f64) -> (MarkovProcess, DMatrix<f64>) {
        let mut edges = Vec::new();
        for base in [0, 4] {
            for i in 0..4 {
                for j in (i + 1)..4 {
                    edges.push((base + i, base + j));
                }
            }
        }
        edges.push((0, 4));
        let net = RmstNetwork {
            n: 8,
            edges,
            similarities: vec![1.0; 13],
            mst_edges: Vec::new(),
            gamma: 0.5,
        };
        let mp = MarkovProcess::new(&net, false).unwrap();
        let b = mp.autocovariance(t).unwrap();
        (mp, b)
    }

    #[test]
    fn recovers_two_cliques_at_moderate_time() {
        let (_, b) = two_clique_autocov(1.0);
        let (p, q) = louvain_optimize(&b, 3);
        assert_eq!(p.n_communities(), 2);
        let a = p.assignment();
        assert!((0..4).all(|i| a[i] == a[0]));
        assert!((4..8).all(|i| a[i] == a[4]));
        assert!(q > 0.0);
    }

    #[test]
    fn pure_anticorrelation_never_merges() {
        // b = -pi pi^T: every merge has a strictly negative gain, so the
        // optimum over partitions is all-singletons with quality -sum pi_i^2
        let n = 6;
        let pi = DVector::from_element(n, 1.0 / n as f64);
        let mut b = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] = -pi[i] * pi[j];
            }
        }
        let optimum: f64 = -(0..n).map(|i| pi[i] * pi[i]).sum::<f64>();
        for seed in 0..5 {
            let (p, q) = louvain_optimize(&b, seed);
            assert_eq!(p.n_communities(), n, "seed {seed}");
            assert!((q - optimum).abs() < 1e-15);
        }
    }

    #[test]
    fn infinite_time_autocovariance_has_vanishing_quality() {
        let (_, b) = two_clique_autocov(1e6);
        for seed in 0..5 {
            let (_, q) = louvain_optimize(&b, seed);
            assert!(q.abs() < 1e-6, "seed {seed}: {q}");
        }
    }

    #[test]
    fn identical_seeds_give_identical_partitions() {
        let (_, b) = two_clique_autocov(0.3);
        let (p1, q1) = louvain_optimize(&b, 99);
        let (p2, q2) = louvain_optimize(&b, 99);
        assert_eq!(p1, p2);
        assert_eq!(q1, q2);
    }

    #[test]
    fn quality_matches_direct_evaluation() {
        let (_, b) = two_clique_autocov(0.5);
        let (p, q) = louvain_optimize(&b, 1);
        assert!((q - partition_quality(&b, &p)).abs() < 1e-15);
    }
}
