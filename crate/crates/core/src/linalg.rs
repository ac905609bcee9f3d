//! Dense matrix primitives for the factorization solver: norms, a power-
//! iteration spectral norm, and rank-one residual targets.
//!
//! Matrices are `ndarray::Array2<f64>` in row-major order; all entries are
//! expected finite. Everything here is a pure function, safe to share
//! read-only across threads.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::solver::FactorPair;

/// Frobenius norm: sqrt of the sum of squared entries. Empty matrix gives 0.
pub fn frobenius_norm(m: &ArrayView2<'_, f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Largest-singular-value estimate with convergence diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct SpectralNorm {
    pub value: f64,
    /// False when `max_iter` ran out before the tolerance was met; `value`
    /// is then the best estimate so far.
    pub converged: bool,
    pub iterations: usize,
}

/// Largest singular value of a square matrix by power iteration on `MᵀM`.
///
/// The start vector is the normalized all-ones vector, so the estimate is
/// deterministic. Iteration stops once the eigenvalue residual
/// `‖(MᵀM)x − λx‖ ≤ tol·λ`, which certifies `sqrt(λ)` to relative accuracy
/// on the order of `tol`.
pub fn spectral_norm(m: &ArrayView2<'_, f64>, tol: f64, max_iter: usize) -> SpectralNorm {
    assert_eq!(m.nrows(), m.ncols(), "spectral_norm needs a square matrix");
    assert!(tol > 0.0, "tolerance must be positive");

    let n = m.nrows();
    if n == 0 {
        return SpectralNorm {
            value: 0.0,
            converged: true,
            iterations: 0,
        };
    }

    let mut x = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0_f64;

    for iter in 1..=max_iter {
        // y = MᵀM x without forming MᵀM.
        let mx = m.dot(&x);
        let y = m.t().dot(&mx);

        lambda = y.dot(&x); // Rayleigh quotient; x is unit length.
        let norm_y = y.dot(&y).sqrt();
        if norm_y == 0.0 {
            // x is in the null space of MᵀM; the estimate from this start
            // vector is 0.
            return SpectralNorm {
                value: 0.0,
                converged: true,
                iterations: iter,
            };
        }

        let residual = (&y - &(lambda * &x)).mapv(|v| v * v).sum().sqrt();
        x = y / norm_y;

        if residual <= tol * lambda.abs().max(f64::MIN_POSITIVE) {
            return SpectralNorm {
                value: lambda.max(0.0).sqrt(),
                converged: true,
                iterations: iter,
            };
        }
    }

    SpectralNorm {
        value: lambda.max(0.0).sqrt(),
        converged: false,
        iterations: max_iter,
    }
}

/// Rank-one residual target for column `c`: `X − Σ_{j≠c} u_j v_jᵀ`.
///
/// Computed directly from the factors; the solver keeps an incremental
/// version that must agree with this one to 1e-12 per entry.
pub fn rank_one_residual(
    x: &ArrayView2<'_, f64>,
    factors: &FactorPair,
    c: usize,
) -> Result<Array2<f64>> {
    let k = factors.rank();
    if c >= k {
        return Err(Error::IndexOutOfRange { index: c, k });
    }
    let mut out = x.to_owned();
    for j in 0..k {
        if j == c {
            continue;
        }
        let u = factors.u.column(j);
        let v = factors.v.column(j);
        for (p, mut row) in out.rows_mut().into_iter().enumerate() {
            let up = u[p];
            if up == 0.0 {
                continue;
            }
            for (q, entry) in row.iter_mut().enumerate() {
                *entry -= up * v[q];
            }
        }
    }
    Ok(out)
}
