//! Clustering evaluation against ground truth: accuracy under the optimal
//! one-to-one class matching, normalized mutual information, and the
//! adjusted Rand index.
//!
//! All three are invariant to relabeling of either partition. ARI is the
//! chance-corrected pair-counting index of Hubert & Arabie (1985) and can
//! go negative for anti-correlated partitions.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Cross-tabulation of predicted vs true class ids, both canonicalized to
/// contiguous ranges by first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    pub counts: Array2<usize>,
    pub row_sums: Vec<usize>,
    pub col_sums: Vec<usize>,
    pub total: usize,
}

fn canonicalize(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut mapping: Vec<usize> = Vec::new();
    let mut out = Vec::with_capacity(labels.len());
    for &l in labels {
        let id = match mapping.iter().position(|&m| m == l) {
            Some(id) => id,
            None => {
                mapping.push(l);
                mapping.len() - 1
            }
        };
        out.push(id);
    }
    (out, mapping.len())
}

/// Builds the contingency table; `counts[i][j]` is the number of samples
/// with predicted class i and true class j.
pub fn contingency(pred: &[usize], truth: &[usize]) -> Result<ContingencyTable> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch(pred.len(), truth.len()));
    }
    assert!(!pred.is_empty(), "need at least one sample");
    let (pred_ids, r) = canonicalize(pred);
    let (truth_ids, c) = canonicalize(truth);
    let mut counts = Array2::zeros((r, c));
    for (&p, &t) in pred_ids.iter().zip(truth_ids.iter()) {
        counts[[p, t]] += 1;
    }
    let row_sums = counts.rows().into_iter().map(|row| row.sum()).collect();
    let col_sums = counts.columns().into_iter().map(|col| col.sum()).collect();
    Ok(ContingencyTable {
        counts,
        row_sums,
        col_sums,
        total: pred.len(),
    })
}

impl ContingencyTable {
    /// True when the partitions coincide up to relabeling: exactly one
    /// nonzero cell per row and per column.
    fn identical_partitions(&self) -> bool {
        let one_per_row = self
            .counts
            .rows()
            .into_iter()
            .all(|row| row.iter().filter(|&&v| v > 0).count() == 1);
        let one_per_col = self
            .counts
            .columns()
            .into_iter()
            .all(|col| col.iter().filter(|&&v| v > 0).count() == 1);
        one_per_row && one_per_col
    }
}

/// Min-cost assignment on a square matrix (Kuhn–Munkres with potentials).
/// Returns the column chosen for each row.
fn min_cost_assignment(cost: &Array2<i64>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols());
    const INF: i64 = i64::MAX / 4;

    // 1-indexed potentials; p[j] = row matched to column j.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Clustering accuracy: the best fraction of samples matched under an
/// injective mapping of predicted classes to true classes. The benefit
/// matrix is the contingency table padded square with zeros.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let (r, c) = table.counts.dim();
    let m = r.max(c);
    let mut cost = Array2::zeros((m, m));
    for i in 0..r {
        for j in 0..c {
            cost[[i, j]] = -(table.counts[[i, j]] as i64);
        }
    }
    let assignment = min_cost_assignment(&cost);
    let matched: i64 = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| -cost[[i, j]])
        .sum();
    Ok(matched as f64 / table.total as f64)
}

/// Normalized mutual information `I(pred; truth)/sqrt(H(pred)·H(truth))`
/// with natural-log entropies. If either partition has zero entropy the
/// value is 1 for identical partitions and 0 otherwise.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let n = table.total as f64;

    let entropy = |sums: &[usize]| -> f64 {
        sums.iter()
            .filter(|&&s| s > 0)
            .map(|&s| {
                let p = s as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let h_pred = entropy(&table.row_sums);
    let h_truth = entropy(&table.col_sums);

    if h_pred == 0.0 || h_truth == 0.0 {
        return Ok(if table.identical_partitions() {
            1.0
        } else {
            0.0
        });
    }

    let mut mi = 0.0;
    for ((i, j), &count) in table.counts.indexed_iter() {
        if count == 0 {
            continue;
        }
        let p_joint = count as f64 / n;
        let p_i = table.row_sums[i] as f64 / n;
        let p_j = table.col_sums[j] as f64 / n;
        mi += p_joint * (p_joint / (p_i * p_j)).ln();
    }
    Ok((mi / (h_pred * h_truth).sqrt()).clamp(0.0, 1.0))
}

fn comb2(x: usize) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index: pair-counting agreement corrected for chance.
/// When the correction denominator vanishes (both partitions degenerate)
/// the value is 1 for identical partitions and 0 otherwise.
pub fn ari(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let comb_n = comb2(table.total);

    let sum_ij: f64 = table.counts.iter().map(|&c| comb2(c)).sum();
    let sum_a: f64 = table.row_sums.iter().map(|&a| comb2(a)).sum();
    let sum_b: f64 = table.col_sums.iter().map(|&b| comb2(b)).sum();

    if comb_n == 0.0 {
        // Single sample: both partitions are trivially identical.
        return Ok(1.0);
    }
    // Cleared of the /comb_n division so the arithmetic stays exact on
    // integer pair counts: (Σᵢⱼ − E)/(½(Σₐ+Σᵦ) − E) scaled by 2·comb_n.
    let numerator = 2.0 * (sum_ij * comb_n - sum_a * sum_b);
    let denominator = (sum_a + sum_b) * comb_n - 2.0 * sum_a * sum_b;
    if denominator == 0.0 {
        return Ok(if table.identical_partitions() {
            1.0
        } else {
            0.0
        });
    }
    Ok(numerator / denominator)
}
