//! Variation of Information between hard partitions, normalized by log N.

use super::Partition;
use crate::error::{Error, Result};

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// VI(H1, H2) = (2 H(H1, H2) - H(H1) - H(H2)) / log N, natural logarithms,
/// zero-probability terms contributing 0. A normalized metric in [0, 1].
pub fn variation_of_information(p1: &Partition, p2: &Partition) -> Result<f64> {
    let n = p1.n_nodes();
    if p2.n_nodes() != n {
        return Err(Error::Internal(format!(
            "partitions cover different node counts ({} vs {})",
            n,
            p2.n_nodes()
        )));
    }
    if n < 2 {
        return Err(Error::Config(
            "VI requires at least 2 nodes (log N = 0 otherwise)".to_string(),
        ));
    }
    // canonical argument order makes the summation order, and hence the
    // floating-point result, exactly symmetric in the two partitions
    let (p1, p2) = if (p1.n_communities(), p1.assignment()) <= (p2.n_communities(), p2.assignment())
    {
        (p1, p2)
    } else {
        (p2, p1)
    };
    let c1 = p1.n_communities();
    let c2 = p2.n_communities();
    let mut joint = vec![0usize; c1 * c2];
    let mut m1 = vec![0usize; c1];
    let mut m2 = vec![0usize; c2];
    for (&a, &b) in p1.assignment().iter().zip(p2.assignment()) {
        joint[a as usize * c2 + b as usize] += 1;
        m1[a as usize] += 1;
        m2[b as usize] += 1;
    }
    let nf = n as f64;
    let h_joint = entropy(joint.into_iter(), nf);
    let h1 = entropy(m1.into_iter(), nf);
    let h2 = entropy(m2.into_iter(), nf);
    let vi = (2.0 * h_joint - h1 - h2) / nf.ln();
    // exact-arithmetic value is nonnegative; clip floating-point dust
    Ok(vi.max(0.0))
}

/// Mean VI over all unordered pairs of the ensemble.
pub fn mean_pairwise_vi(partitions: &[Partition]) -> Result<f64> {
    if partitions.len() < 2 {
        return Err(Error::Config(format!(
            "mean pairwise VI needs at least 2 partitions, got {}",
            partitions.len()
        )));
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..partitions.len() {
        for j in (i + 1)..partitions.len() {
            total += variation_of_information(&partitions[i], &partitions[j])?;
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}
