//! Multiscale community detection on the RMST network: continuous-time
//! diffusion transition matrices, the stability objective (trace of the
//! clustered autocovariance), Louvain optimization, Variation of Information
//! and the Markov-time scan.

mod louvain;
mod vi;

pub use louvain::louvain_optimize;
pub use vi::{mean_pairwise_vi, variation_of_information};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rmst::RmstNetwork;

/// A hard partition with canonical labels: communities are numbered by first
/// occurrence, so every label in [0, C) is used.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Partition {
    assignment: Vec<u32>,
    n_communities: usize,
}

impl Partition {
    /// Canonicalizes arbitrary labels into first-occurrence order.
    pub fn new(raw: &[u32]) -> Self {
        let mut map: Vec<Option<u32>> = Vec::new();
        let mut assignment = Vec::with_capacity(raw.len());
        let mut next = 0u32;
        let max = raw.iter().copied().max().map_or(0, |m| m as usize + 1);
        map.resize(max, None);
        for &label in raw {
            let slot = &mut map[label as usize];
            let compact = match slot {
                Some(c) => *c,
                None => {
                    let c = next;
                    *slot = Some(c);
                    next += 1;
                    c
                }
            };
            assignment.push(compact);
        }
        Partition {
            assignment,
            n_communities: next as usize,
        }
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            assignment: (0..n as u32).collect(),
            n_communities: n,
        }
    }

    pub fn all_in_one(n: usize) -> Self {
        Partition {
            assignment: vec![0; n],
            n_communities: if n == 0 { 0 } else { 1 },
        }
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn n_nodes(&self) -> usize {
        self.assignment.len()
    }

    pub fn n_communities(&self) -> usize {
        self.n_communities
    }
}

/// The diffusion process on the (possibly weighted) RMST network: degrees,
/// stationary distribution and the eigendecomposition of the symmetrically
/// normalized Laplacian, computed once and reused for every Markov time.
#[derive(Debug, Clone)]
pub struct MarkovProcess {
    n: usize,
    degree: DVector<f64>,
    pi: DVector<f64>,
    eigenvalues: DVector<f64>,
    /// Eigenvectors of L_sym, one per column, sorted by ascending eigenvalue.
    eigenvectors: DMatrix<f64>,
    d_sqrt: DVector<f64>,
    d_inv_sqrt: DVector<f64>,
}

fn check_connected(net: &RmstNetwork) -> bool {
    let n = net.n;
    if n == 0 {
        return false;
    }
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in &net.edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

impl MarkovProcess {
    pub fn new(net: &RmstNetwork, weighted: bool) -> Result<Self> {
        let n = net.n;
        if !check_connected(net) {
            return Err(Error::Numerical(
                "similarity network is disconnected; RMST construction should guarantee connectivity"
                    .to_string(),
            ));
        }
        let mut w = DMatrix::zeros(n, n);
        for (idx, &(i, j)) in net.edges.iter().enumerate() {
            let weight = if weighted { net.similarities[idx] } else { 1.0 };
            w[(i, j)] = weight;
            w[(j, i)] = weight;
        }
        let degree = DVector::from_iterator(n, (0..n).map(|i| w.row(i).sum()));
        if degree.iter().any(|&k| k <= 0.0) {
            return Err(Error::Numerical(
                "zero-degree node in the similarity network".to_string(),
            ));
        }
        let two_m: f64 = degree.sum();
        let pi = &degree / two_m;
        let d_sqrt = degree.map(f64::sqrt);
        let d_inv_sqrt = d_sqrt.map(|s| 1.0 / s);

        let mut l_sym = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let v = -d_inv_sqrt[i] * w[(i, j)] * d_inv_sqrt[j];
                l_sym[(i, j)] = if i == j { 1.0 + v } else { v };
            }
        }
        // enforce exact symmetry before the eigensolver
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (l_sym[(i, j)] + l_sym[(j, i)]);
                l_sym[(i, j)] = avg;
                l_sym[(j, i)] = avg;
            }
        }
        let eig = SymmetricEigen::new(l_sym);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
        let mut eigenvectors = DMatrix::zeros(n, n);
        for (col, &k) in order.iter().enumerate() {
            eigenvectors.set_column(col, &eig.eigenvectors.column(k));
        }
        Ok(MarkovProcess {
            n,
            degree,
            pi,
            eigenvalues,
            eigenvectors,
            d_sqrt,
            d_inv_sqrt,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> &DVector<f64> {
        &self.degree
    }

    pub fn stationary_distribution(&self) -> &DVector<f64> {
        &self.pi
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// P(t) = D^{-1/2} V e^{-t Lambda} V^T D^{1/2}.
    pub fn transition_matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        if t < 0.0 {
            return Err(Error::Config(format!("Markov time must be >= 0, got {t}")));
        }
        let n = self.n;
        let mut scaled = self.eigenvectors.clone();
        for k in 0..n {
            let decay = (-t * self.eigenvalues[k]).exp();
            scaled.column_mut(k).scale_mut(decay);
        }
        let core = &scaled * self.eigenvectors.transpose();
        let mut p = core;
        for i in 0..n {
            for j in 0..n {
                p[(i, j)] *= self.d_inv_sqrt[i] * self.d_sqrt[j];
            }
        }
        Ok(p)
    }

    /// B(t) = sym(Pi P(t)) - pi pi^T, the matrix whose clustered trace is the
    /// stability objective. Pi P(t) is symmetric analytically; the explicit
    /// symmetrization removes floating-point asymmetry so that Louvain gains
    /// do not depend on sweep direction.
    pub fn autocovariance(&self, t: f64) -> Result<DMatrix<f64>> {
        if t < 0.0 {
            return Err(Error::Config(format!("Markov time must be >= 0, got {t}")));
        }
        let n = self.n;
        let two_m: f64 = self.degree.sum();
        // U = D^{1/2} V, so Pi P(t) = U e^{-t Lambda} U^T / 2m
        let mut u = self.eigenvectors.clone();
        for i in 0..n {
            for k in 0..n {
                u[(i, k)] *= self.d_sqrt[i];
            }
        }
        let mut scaled = u.clone();
        for k in 0..n {
            let decay = (-t * self.eigenvalues[k]).exp() / two_m;
            scaled.column_mut(k).scale_mut(decay);
        }
        let mut b = &scaled * u.transpose();
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] -= self.pi[i] * self.pi[j];
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (b[(i, j)] + b[(j, i)]);
                b[(i, j)] = avg;
                b[(j, i)] = avg;
            }
        }
        Ok(b)
    }
}

/// r(t, H) = trace(H^T B(t) H).
pub fn stability_score(mp: &MarkovProcess, t: f64, p: &Partition) -> Result<f64> {
    let b = mp.autocovariance(t)?;
    Ok(partition_quality(&b, p))
}

/// Quality of a partition under a generalized block-sum objective.
pub fn partition_quality(b: &DMatrix<f64>, p: &Partition) -> f64 {
    let n = p.n_nodes();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if p.assignment[i] == p.assignment[j] {
                total += b[(i, j)];
            }
        }
    }
    total
}

/// Per-Markov-time record of the optimization ensemble.
#[derive(Debug, Clone)]
pub struct ScanResult {
    pub t: f64,
    pub best_partition: Partition,
    pub best_stability: f64,
    pub mean_vi: f64,
    pub n_communities: usize,
    pub run_stabilities: Vec<f64>,
}

/// Deterministic per-(time, run) seed derivation (splitmix64 finalizer over
/// a mix of the master seed and both indices), so results are independent of
/// execution order and parallelism.
pub fn derive_seed(master: u64, time_index: usize, run_index: usize) -> u64 {
    let mut z = master
        ^ (time_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (run_index as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn better(candidate: &(Partition, f64), incumbent: &(Partition, f64)) -> bool {
    if candidate.1 != incumbent.1 {
        return candidate.1 > incumbent.1;
    }
    if candidate.0.n_communities() != incumbent.0.n_communities() {
        return candidate.0.n_communities() < incumbent.0.n_communities();
    }
    candidate.0.assignment() < incumbent.0.assignment()
}

/// Optimizes the stability objective at every Markov time with `runs`
/// seeded Louvain restarts, recording the best partition, the per-run
/// qualities and the mean pairwise VI of the ensemble. Runs execute in
/// parallel; aggregation is deterministic.
pub fn time_scan(
    mp: &MarkovProcess,
    times: &[f64],
    runs: usize,
    seed: u64,
) -> Result<Vec<ScanResult>> {
    if runs < 2 {
        return Err(Error::Config(format!(
            "the scan needs at least 2 runs per time, got {runs}"
        )));
    }
    if times.is_empty() {
        return Err(Error::Config("empty Markov-time grid".to_string()));
    }
    if times.windows(2).any(|w| w[0] > w[1]) || times[0] < 0.0 {
        return Err(Error::Config(
            "Markov times must be sorted ascending and nonnegative".to_string(),
        ));
    }

    let mut results = Vec::with_capacity(times.len());
    for (t_idx, &t) in times.iter().enumerate() {
        let b = mp.autocovariance(t)?;
        let ensemble: Vec<(Partition, f64)> = (0..runs)
            .into_par_iter()
            .map(|run| louvain_optimize(&b, derive_seed(seed, t_idx, run)))
            .collect();

        let mut best = ensemble[0].clone();
        for cand in &ensemble[1..] {
            if better(cand, &best) {
                best = cand.clone();
            }
        }
        let partitions: Vec<Partition> = ensemble.iter().map(|(p, _)| p.clone()).collect();
        let mean_vi = mean_pairwise_vi(&partitions)?;
        let run_stabilities: Vec<f64> = ensemble.iter().map(|&(_, q)| q).collect();
        let n_communities = best.0.n_communities();
        results.push(ScanResult {
            t,
            best_partition: best.0,
            best_stability: best.1,
            mean_vi,
            n_communities,
            run_stabilities,
        });
    }
    Ok(results)
}

/// A robust scale selected from the scan: a representative grid point of a
/// community-count plateau or a VI dip.
#[derive(Debug, Clone)]
pub struct RobustScale {
    pub t: f64,
    pub partition: Partition,
    pub n_communities: usize,
    pub mean_vi: f64,
    pub stability: f64,
    pub plateau_len: usize,
}

/// Identifies candidate scales: community-count plateaus of at least
/// `min_plateau` grid points, plus local minima of mean VI below
/// `vi_threshold` that fall outside those plateaus. Candidates are ranked by
/// (plateau length, then lower mean VI); each yields one representative grid
/// point (lowest mean VI within the candidate).
pub fn select_robust(
    scan: &[ScanResult],
    vi_threshold: f64,
    min_plateau: usize,
) -> Vec<RobustScale> {
    if scan.is_empty() {
        return Vec::new();
    }
    let len = scan.len();
    // maximal runs of constant community count
    let mut runs: Vec<(usize, usize)> = Vec::new(); // (start, len)
    let mut start = 0;
    for i in 1..=len {
        if i == len || scan[i].n_communities != scan[start].n_communities {
            runs.push((start, i - start));
            start = i;
        }
    }
    let run_of = |idx: usize| -> (usize, usize) {
        *runs
            .iter()
            .find(|&&(s, l)| idx >= s && idx < s + l)
            .expect("index inside some run")
    };

    let mut covered = vec![false; len];
    let mut candidates: Vec<RobustScale> = Vec::new();
    let rep_in = |indices: &mut dyn Iterator<Item = usize>| -> Option<usize> {
        indices.min_by(|&a, &b| {
            scan[a]
                .mean_vi
                .partial_cmp(&scan[b].mean_vi)
                .unwrap()
                .then(a.cmp(&b))
        })
    };

    for &(s, l) in &runs {
        if l >= min_plateau.max(1) {
            let rep = rep_in(&mut (s..s + l)).unwrap();
            candidates.push(RobustScale {
                t: scan[rep].t,
                partition: scan[rep].best_partition.clone(),
                n_communities: scan[rep].n_communities,
                mean_vi: scan[rep].mean_vi,
                stability: scan[rep].best_stability,
                plateau_len: l,
            });
            for i in s..s + l {
                covered[i] = true;
            }
        }
    }

    // local minima of mean VI below the threshold, grouped into maximal
    // consecutive segments
    let is_dip = |i: usize| -> bool {
        scan[i].mean_vi < vi_threshold
            && (i == 0 || scan[i].mean_vi <= scan[i - 1].mean_vi)
            && (i + 1 == len || scan[i].mean_vi <= scan[i + 1].mean_vi)
    };
    let mut i = 0;
    while i < len {
        if !is_dip(i) {
            i += 1;
            continue;
        }
        let seg_start = i;
        while i < len && is_dip(i) {
            i += 1;
        }
        let mut uncovered = (seg_start..i).filter(|&k| !covered[k]);
        if let Some(rep) = rep_in(&mut uncovered) {
            let (_, run_len) = run_of(rep);
            candidates.push(RobustScale {
                t: scan[rep].t,
                partition: scan[rep].best_partition.clone(),
                n_communities: scan[rep].n_communities,
                mean_vi: scan[rep].mean_vi,
                stability: scan[rep].best_stability,
                plateau_len: run_len,
            });
        }
    }

    candidates.sort_by(|a, b| {
        b.plateau_len
            .cmp(&a.plateau_len)
            .then(a.mean_vi.partial_cmp(&b.mean_vi).unwrap())
            .then(a.t.partial_cmp(&b.t).unwrap())
    });
    candidates
}
