//! Role-Based Similarity: spectral radius of the adjacency matrix, the
//! scaled in/out path-count feature matrix, and the cosine-similarity matrix.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;

/// Requested feature depth: explicit or truncation-driven.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KMax {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone)]
pub struct RbsConfig {
    /// Path-length weighting parameter, in (0, 1).
    pub alpha: f64,
    pub k_max: KMax,
    /// Power-iteration convergence threshold.
    pub lambda_tolerance: f64,
    /// Column-norm cutoff used when `k_max` is auto.
    pub truncation_tolerance: f64,
}

impl Default for RbsConfig {
    fn default() -> Self {
        RbsConfig {
            alpha: 0.95,
            k_max: KMax::Auto,
            lambda_tolerance: 1e-10,
            truncation_tolerance: 1e-10,
        }
    }
}

impl RbsConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if let KMax::Fixed(k) = self.k_max {
            if k == 0 {
                return Err(Error::Config("k_max must be positive".to_string()));
            }
            if k >= n {
                return Err(Error::Config(format!(
                    "k_max must be smaller than the node count ({k} >= {n})"
                )));
            }
        }
        if self.lambda_tolerance <= 0.0 || self.truncation_tolerance <= 0.0 {
            return Err(Error::Config("tolerances must be positive".to_string()));
        }
        Ok(())
    }
}

/// Spectral radius of A and the derived path scaling factor.
#[derive(Debug, Clone, Copy)]
pub struct SpectralInfo {
    pub lambda_1: f64,
    pub beta: f64,
    pub iterations: usize,
}

/// N x 2K feature matrix: columns `0..k_max` hold (beta A^T)^k 1 for
/// k = 1..=k_max (in-paths), columns `k_max..2*k_max` hold (beta A)^k 1
/// (out-paths).
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub x: DMatrix<f64>,
    pub k_max: usize,
}

/// Symmetric N x N cosine-similarity matrix with entries in [0, 1].
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    pub y: DMatrix<f64>,
}

fn matvec_out(g: &DirectedGraph, v: &[f64]) -> Vec<f64> {
    // (A v)_i = sum over out-neighbors j of v_j
    (0..g.n())
        .map(|i| g.out_neighbors(i).iter().map(|&j| v[j as usize]).sum())
        .collect()
}

fn matvec_in(g: &DirectedGraph, v: &[f64]) -> Vec<f64> {
    // (A^T v)_j = sum over in-neighbors i of v_i
    (0..g.n())
        .map(|j| g.in_neighbors(j).iter().map(|&i| v[i as usize]).sum())
        .collect()
}

/// Exact nilpotency test: iterate w <- A w from all-ones, renormalizing by
/// the max entry; a nilpotent A drives w to exactly zero within N steps
/// (renormalization by a positive scalar preserves the zero pattern).
fn is_nilpotent(g: &DirectedGraph) -> bool {
    let n = g.n();
    let mut w = vec![1.0; n];
    for _ in 0..n {
        w = matvec_out(g, &w);
        let max = w.iter().cloned().fold(0.0_f64, f64::max);
        if max == 0.0 {
            return true;
        }
        for x in w.iter_mut() {
            *x /= max;
        }
    }
    false
}

/// Estimates the Perron root of A by power iteration from a strictly
/// positive (all-ones) start vector.
///
/// The iteration runs on the shifted matrix A + I: for a nonnegative A every
/// other eigenvalue mu satisfies |1 + mu| < 1 + lambda_1, so the shift makes
/// the dominant eigenvalue strictly separated in magnitude even for periodic
/// structures (where iterating on A itself oscillates and its Rayleigh
/// quotient can settle on a wrong value). lambda_1 is recovered as the
/// converged Rayleigh quotient minus one. Nilpotent A (a DAG) is detected
/// exactly beforehand and yields lambda_1 = 0 with beta = alpha.
pub fn spectral_radius(g: &DirectedGraph, cfg: &RbsConfig) -> Result<SpectralInfo> {
    cfg.validate(g.n())?;
    let n = g.n();
    if is_nilpotent(g) {
        return Ok(SpectralInfo {
            lambda_1: 0.0,
            beta: cfg.alpha,
            iterations: 0,
        });
    }

    let cap = 10 * n + 1000;
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut est_prev = f64::NAN;
    let mut last_estimate = 0.0;

    for it in 1..=cap {
        // w = (A + I) v
        let mut w = matvec_out(g, &v);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi += vi;
        }
        // v is unit-length, so the Rayleigh quotient of A + I is v . w
        let est: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.into_iter().map(|x| x / norm).collect();

        if est_prev.is_finite()
            && (est - est_prev).abs() < cfg.lambda_tolerance * est.abs().max(1.0)
        {
            let lambda_1 = (est - 1.0).max(0.0);
            let beta = if lambda_1 > cfg.lambda_tolerance {
                cfg.alpha / lambda_1
            } else {
                cfg.alpha
            };
            return Ok(SpectralInfo {
                lambda_1,
                beta,
                iterations: it,
            });
        }
        est_prev = est;
        last_estimate = est - 1.0;
    }

    // Slow convergence happens when the Perron root is defective (equal
    // spectral radii in chained strongly connected components); fall back to
    // a dense eigensolve, which handles every such case.
    if n <= 4096 {
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for &j in g.out_neighbors(i) {
                a[(i, j as usize)] = 1.0;
            }
        }
        let lambda_1 = a
            .complex_eigenvalues()
            .iter()
            .map(|e| e.norm())
            .fold(0.0_f64, f64::max);
        let beta = if lambda_1 > cfg.lambda_tolerance {
            cfg.alpha / lambda_1
        } else {
            cfg.alpha
        };
        return Ok(SpectralInfo {
            lambda_1,
            beta,
            iterations: cap,
        });
    }

    Err(Error::Numerical(format!(
        "power iteration did not converge after {cap} iterations (last estimate {last_estimate})"
    )))
}

/// Builds the feature matrix by iterated matrix-vector products
/// v <- beta A v and v <- beta A^T v starting from the all-ones vector;
/// A^k is never formed. Under `KMax::Auto` iteration stops at the first k
/// where both column infinity-norms fall below the truncation tolerance, or
/// at k = N - 1.
pub fn feature_matrix(
    g: &DirectedGraph,
    cfg: &RbsConfig,
    spec: &SpectralInfo,
) -> Result<FeatureMatrix> {
    cfg.validate(g.n())?;
    let n = g.n();
    let cap = match cfg.k_max {
        KMax::Fixed(k) => k,
        KMax::Auto => n.saturating_sub(1),
    };
    let beta = spec.beta;

    let mut v_in = vec![1.0; n];
    let mut v_out = vec![1.0; n];
    let mut in_cols: Vec<Vec<f64>> = Vec::new();
    let mut out_cols: Vec<Vec<f64>> = Vec::new();

    for _k in 1..=cap {
        v_in = matvec_in(g, &v_in).into_iter().map(|x| beta * x).collect();
        v_out = matvec_out(g, &v_out).into_iter().map(|x| beta * x).collect();
        in_cols.push(v_in.clone());
        out_cols.push(v_out.clone());
        if matches!(cfg.k_max, KMax::Auto) {
            let max_in = v_in.iter().cloned().fold(0.0_f64, f64::max);
            let max_out = v_out.iter().cloned().fold(0.0_f64, f64::max);
            if max_in < cfg.truncation_tolerance && max_out < cfg.truncation_tolerance {
                break;
            }
        }
    }

    let k_max = in_cols.len();
    let mut x = DMatrix::zeros(n, 2 * k_max);
    for (k, col) in in_cols.iter().enumerate() {
        for i in 0..n {
            x[(i, k)] = col[i];
        }
    }
    for (k, col) in out_cols.iter().enumerate() {
        for i in 0..n {
            x[(i, k_max + k)] = col[i];
        }
    }
    Ok(FeatureMatrix { x, k_max })
}

/// Cosine similarity between all feature rows. Rows with (machine-epsilon
/// scale) zero norm get similarity 0 to every other node and self-similarity
/// 1 by convention.
pub fn rbs_matrix(features: &FeatureMatrix) -> SimilarityMatrix {
    let x = &features.x;
    let n = x.nrows();
    let norms: Vec<f64> = (0..n).map(|i| x.row(i).norm()).collect();
    let mut y = DMatrix::zeros(n, n);
    for i in 0..n {
        y[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let value = if norms[i] <= f64::EPSILON || norms[j] <= f64::EPSILON {
                0.0
            } else {
                let dot: f64 = x.row(i).dot(&x.row(j));
                (dot / (norms[i] * norms[j])).clamp(0.0, 1.0)
            };
            y[(i, j)] = value;
            y[(j, i)] = value;
        }
    }
    SimilarityMatrix { y }
}
