//! Similarity graph construction: squared Euclidean distances, k-nearest
//! neighbor sets, and a self-tuning Gaussian affinity sparsified to the
//! symmetrized k-NN mask.
//!
//! The affinity between samples i and j is `exp(−d²(i,j)/(σ_i σ_j))` with
//! local scale `σ_i` = distance to the k-th neighbor of i, kept only when
//! j is among i's neighbors or vice versa. The diagonal is forced to zero:
//! self-similarity carries no clustering information.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Symmetric nonnegative affinity matrix with a zero diagonal.
///
/// Construction validates every invariant, so downstream code can rely on
/// them without re-checking.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    data: Array2<f64>,
}

impl SimilarityMatrix {
    /// Validates symmetry, nonnegativity, finiteness, and the zero diagonal.
    pub fn from_matrix(data: Array2<f64>) -> Result<Self> {
        let n = data.nrows();
        if data.ncols() != n {
            return Err(Error::ShapeMismatch {
                expected: format!("{n}x{n}"),
                got: format!("{}x{}", data.nrows(), data.ncols()),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let v = data[[i, j]];
                if !v.is_finite() {
                    return Err(Error::NonFinite(i, j));
                }
                if v < 0.0 {
                    return Err(Error::NegativeEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                if j > i && v != data[[j, i]] {
                    return Err(Error::NotSymmetric(i, j));
                }
            }
            if data[[i, i]] != 0.0 {
                return Err(Error::NonzeroDiagonal {
                    index: i,
                    value: data[[i, i]],
                });
            }
        }
        Ok(Self { data })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    /// Mean over all n² entries (used to scale factor initialization).
    pub fn mean(&self) -> f64 {
        let n = self.n();
        if n == 0 {
            return 0.0;
        }
        self.data.sum() / (n * n) as f64
    }
}

/// Feature matrix with ground-truth class ids (used only by evaluation).
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    /// n×d feature values.
    pub features: Array2<f64>,
    /// One class id per sample, contiguous from 0.
    pub labels: Vec<usize>,
    pub name: String,
}

#[derive(Debug, Clone, Copy)]
pub struct GraphConfig {
    /// Neighbor count; must satisfy 1 ≤ k_nn < n.
    pub k_nn: usize,
    /// Numerical floor for the local scale, guards duplicate points.
    pub sigma_floor: f64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            k_nn: 7,
            sigma_floor: 1e-12,
        }
    }
}

/// Squared Euclidean distances between all row pairs: symmetric, zero
/// diagonal, clamped at 0 against round-off.
pub fn pairwise_sq_dists(features: &ArrayView2<'_, f64>) -> Array2<f64> {
    let n = features.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let mut s = 0.0;
            for (a, b) in features.row(i).iter().zip(features.row(j).iter()) {
                let diff = a - b;
                s += diff * diff;
            }
            let s = s.max(0.0);
            d[[i, j]] = s;
            d[[j, i]] = s;
        }
    }
    d
}

/// For each sample, the `k_nn` indices j ≠ i with smallest distance.
/// Ties break toward the smaller index.
pub fn knn_sets(dists: &ArrayView2<'_, f64>, k_nn: usize) -> Result<Vec<Vec<usize>>> {
    let n = dists.nrows();
    if k_nn >= n || k_nn == 0 {
        return Err(Error::InvalidK { k: k_nn, n });
    }
    let mut sets = Vec::with_capacity(n);
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| {
            dists[[i, a]]
                .partial_cmp(&dists[[i, b]])
                .expect("distances are finite")
                .then(a.cmp(&b))
        });
        order.truncate(k_nn);
        sets.push(order);
    }
    Ok(sets)
}

/// Builds the self-tuning Gaussian affinity on the symmetrized k-NN mask.
///
/// `A[i][j] = exp(−D[i][j]/(σ_i σ_j))` when j ∈ knn(i) or i ∈ knn(j),
/// else 0, with `σ_i = max(sqrt(D[i][k-th neighbor]), sigma_floor)`.
pub fn build_similarity(
    features: &ArrayView2<'_, f64>,
    cfg: &GraphConfig,
) -> Result<SimilarityMatrix> {
    if cfg.sigma_floor <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "sigma_floor must be positive, got {}",
            cfg.sigma_floor
        )));
    }
    let n = features.nrows();
    let dists = pairwise_sq_dists(features);
    let neighbors = knn_sets(&dists.view(), cfg.k_nn)?;

    let scales: Vec<f64> = (0..n)
        .map(|i| {
            let kth = *neighbors[i].last().expect("k_nn >= 1");
            dists[[i, kth]].sqrt().max(cfg.sigma_floor)
        })
        .collect();

    let mut mask = Array2::from_elem((n, n), false);
    for (i, set) in neighbors.iter().enumerate() {
        for &j in set {
            mask[[i, j]] = true;
            mask[[j, i]] = true; // union rule
        }
    }

    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            if mask[[i, j]] {
                let w = (-dists[[i, j]] / (scales[i] * scales[j])).exp();
                a[[i, j]] = w;
                a[[j, i]] = w;
            }
        }
    }
    SimilarityMatrix::from_matrix(a)
}
