//! Shared test oracles and synthetic data builders. Everything here is
//! independent of the solver paths it checks: eigenvalues come from a
//! cyclic Jacobi sweep, minimizers from golden-section search, and labels
//! from graph connectivity.
#![allow(dead_code)]

use std::sync::{Mutex, MutexGuard};

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spsnmf::graph::SimilarityMatrix;
use spsnmf::solver::FactorPair;

static SERIAL: Mutex<()> = Mutex::new(());

/// Serializes tests within one binary so wall-clock measurements are not
/// skewed by sibling tests competing for the few available cores.
pub fn run_serially() -> MutexGuard<'static, ()> {
    SERIAL
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner())
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(m: &Array2<f64>) -> Vec<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    let mut a = m.clone();
    for _ in 0..200 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[[p, q]] * a[[p, q]])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * a[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = a[[i, p]];
                    let aiq = a[[i, q]];
                    a[[i, p]] = c * aip - s * aiq;
                    a[[i, q]] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let api = a[[p, i]];
                    let aqi = a[[q, i]];
                    a[[p, i]] = c * api - s * aqi;
                    a[[q, i]] = s * api + c * aqi;
                }
            }
        }
    }
    (0..n).map(|i| a[[i, i]]).collect()
}

/// Largest singular value via the Jacobi oracle on `MᵀM`.
pub fn largest_singular_value_oracle(m: &Array2<f64>) -> f64 {
    let gram = m.t().dot(m);
    jacobi_eigenvalues(&gram)
        .into_iter()
        .fold(0.0_f64, f64::max)
        .max(0.0)
        .sqrt()
}

/// Golden-section search for the minimizer of a unimodal function on
/// `[lo, hi]`, to interval width `tol`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Exact block-diagonal similarity: `blocks` blocks of `size` samples,
/// affinity 1 inside a block (zero diagonal), 0 across blocks.
pub fn block_similarity(blocks: usize, size: usize) -> SimilarityMatrix {
    let n = blocks * size;
    let mut m = Array2::zeros((n, n));
    for b in 0..blocks {
        for i in 0..size {
            for j in 0..size {
                if i != j {
                    m[[b * size + i, b * size + j]] = 1.0;
                }
            }
        }
    }
    SimilarityMatrix::from_matrix(m).expect("block matrix is a valid similarity")
}

/// Ground-truth labels for a block similarity: connected components of the
/// positive-affinity graph, numbered by first appearance.
pub fn connected_component_labels(x: &SimilarityMatrix) -> Vec<usize> {
    let n = x.n();
    let m = x.matrix();
    let mut labels = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if labels[start] != usize::MAX {
            continue;
        }
        let mut queue = vec![start];
        labels[start] = next;
        while let Some(i) = queue.pop() {
            for j in 0..n {
                if m[[i, j]] > 0.0 && labels[j] == usize::MAX {
                    labels[j] = next;
                    queue.push(j);
                }
            }
        }
        next += 1;
    }
    labels
}

/// Gaussian-ish blobs: `per_blob` samples around each of three 2-D centers
/// spaced `spread` apart, with uniform jitter of half-width `sigma`.
pub fn three_blob_features(
    per_blob: usize,
    sigma: f64,
    spread: f64,
    seed: u64,
) -> (Array2<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = [(0.0, 0.0), (spread, 0.0), (0.0, spread)];
    let n = 3 * per_blob;
    let mut features = Array2::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    for (b, &(cx, cy)) in centers.iter().enumerate() {
        for i in 0..per_blob {
            let row = b * per_blob + i;
            features[[row, 0]] = cx + sigma * (2.0 * rng.random::<f64>() - 1.0);
            features[[row, 1]] = cy + sigma * (2.0 * rng.random::<f64>() - 1.0);
            labels.push(b);
        }
    }
    (features, labels)
}

/// Overwrites the given rows and columns of a similarity matrix with
/// symmetric uniform noise in [0.5, 1), keeping the zero diagonal.
pub fn corrupt_rows(x: &SimilarityMatrix, rows: &[usize], seed: u64) -> SimilarityMatrix {
    let n = x.n();
    let mut m = x.matrix().to_owned();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &i in rows {
        for j in 0..n {
            if j != i {
                let v = 0.5 + 0.5 * rng.random::<f64>();
                m[[i, j]] = v;
                m[[j, i]] = v;
            }
        }
    }
    SimilarityMatrix::from_matrix(m).expect("corrupted matrix stays valid")
}

/// Random symmetric nonnegative zero-diagonal matrix with entries in [0, 1).
pub fn random_similarity(n: usize, rng: &mut ChaCha8Rng) -> SimilarityMatrix {
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.random::<f64>();
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
    SimilarityMatrix::from_matrix(m).expect("random similarity is valid")
}

/// Random nonnegative factor pair with entries in [0, scale).
pub fn random_factors(n: usize, k: usize, scale: f64, rng: &mut ChaCha8Rng) -> FactorPair {
    let u = Array2::from_shape_fn((n, k), |_| rng.random::<f64>() * scale);
    let v = Array2::from_shape_fn((n, k), |_| rng.random::<f64>() * scale);
    FactorPair::new(u, v).expect("random factors are valid")
}

/// Random weight vector mixing zeros, ones, and interior values.
pub fn random_weights(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n)
        .map(|_| match rng.random_range(0..4u8) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random::<f64>(),
        })
        .collect()
}

/// Uniform random vector with entries in [lo, hi).
pub fn random_vec(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n)
        .map(|_| lo + (hi - lo) * rng.random::<f64>())
        .collect()
}

/// Accuracy restricted to the samples listed in `keep`.
pub fn subset_accuracy(pred: &[usize], truth: &[usize], keep: &[usize]) -> f64 {
    let p: Vec<usize> = keep.iter().map(|&i| pred[i]).collect();
    let t: Vec<usize> = keep.iter().map(|&i| truth[i]).collect();
    spsnmf::metrics::accuracy(&p, &t).expect("subset labels are consistent")
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-sample losses as an `Array1`, for quick hand computations in tests.
pub fn losses_array(l: &spsnmf::solver::PerSampleLoss) -> Array1<f64> {
    Array1::from_vec(l.values().to_vec())
}
