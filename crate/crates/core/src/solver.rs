//! Sample-weighted asymmetric-penalty factorization solver.
//!
//! Minimizes `½·Σ_i w_i·‖(X − UVᵀ)_i‖² + (θ/2)·‖U − V‖_F²` over
//! nonnegative factors by cyclic rank-one column updates: for each column
//! the residual target `X_c = X − Σ_{j≠c} u_j v_jᵀ` is formed and the
//! column minimizers are closed-form clipped quadratics. Row weights `w`
//! scale per-sample losses; the penalty `θ` pulls `U` toward `V` so a
//! large enough `θ` recovers a symmetric factorization.
//!
//! Ops accept any square dense matrix; the clustering pipeline feeds them
//! a validated [`crate::graph::SimilarityMatrix`].

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm, spectral_norm};

/// Nonnegative factor matrices of identical shape n×k.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub u: Array2<f64>,
    pub v: Array2<f64>,
}

impl FactorPair {
    pub fn new(u: Array2<f64>, v: Array2<f64>) -> Result<Self> {
        if u.dim() != v.dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", u.dim()),
                got: format!("{:?}", v.dim()),
            });
        }
        for m in [&u, &v] {
            for ((i, j), &val) in m.indexed_iter() {
                if !val.is_finite() {
                    return Err(Error::NonFinite(i, j));
                }
                if val < 0.0 {
                    return Err(Error::NegativeEntry {
                        row: i,
                        col: j,
                        value: val,
                    });
                }
            }
        }
        Ok(Self { u, v })
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    /// Reconstruction `UVᵀ`.
    pub fn product(&self) -> Array2<f64> {
        self.u.dot(&self.v.t())
    }
}

/// Per-sample inclusion weights, each in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWeights(Array1<f64>);

impl SampleWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        for (i, &v) in w.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(i, 0));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!(
                    "weight {v} at index {i} outside [0, 1]"
                )));
            }
        }
        Ok(Self(Array1::from_vec(w)))
    }

    pub fn ones(n: usize) -> Self {
        Self(Array1::ones(n))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> ArrayView1<'_, f64> {
        self.0.view()
    }

    /// Number of samples with nonzero weight.
    pub fn active_count(&self) -> usize {
        self.0.iter().filter(|&&v| v > 0.0).count()
    }

    pub fn mean(&self) -> f64 {
        if self.0.is_empty() {
            0.0
        } else {
            self.0.sum() / self.0.len() as f64
        }
    }
}

/// Symmetry penalty coefficient, strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyTheta {
    value: f64,
}

impl PenaltyTheta {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "theta must be positive, got {value}"
            )));
        }
        Ok(Self { value })
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

/// Raw squared row residuals `l_i = ‖(X − UVᵀ)_i‖²` (no ½ factor); the
/// scale the inclusion thresholds are defined on.
#[derive(Debug, Clone, PartialEq)]
pub struct PerSampleLoss(Vec<f64>);

impl PerSampleLoss {
    pub fn new(l: Vec<f64>) -> Result<Self> {
        for (i, &v) in l.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "loss {v} at index {i} invalid"
                )));
            }
        }
        Ok(Self(l))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// One record per sweep: global sweep index, objective after the sweep,
/// and the weight profile the sweep ran with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub sweep: usize,
    pub objective: f64,
    pub active_samples: usize,
    pub mean_weight: f64,
}

/// Objective trace with strictly increasing sweep indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    records: Vec<TraceRecord>,
}

impl SolveTrace {
    pub fn push(&mut self, record: TraceRecord) {
        if let Some(last) = self.records.last() {
            assert!(
                record.sweep > last.sweep,
                "sweep indices must strictly increase"
            );
        }
        self.records.push(record);
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn last_objective(&self) -> Option<f64> {
        self.records.last().map(|r| r.objective)
    }
}

fn check_shapes(x: &ArrayView2<'_, f64>, factors: &FactorPair, w: &SampleWeights) -> Result<()> {
    let n = x.nrows();
    if x.ncols() != n || factors.n() != n || w.len() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("square X with n={n} factors and weights"),
            got: format!(
                "X {}x{}, factors n={}, weights n={}",
                x.nrows(),
                x.ncols(),
                factors.n(),
                w.len()
            ),
        });
    }
    Ok(())
}

/// Weighted data term plus symmetry penalty:
/// `½·Σ_i w_i·‖(X − UVᵀ)_i‖² + (θ/2)·‖U − V‖_F²`.
///
/// The self-paced regularizer is bookkept separately so this value stays
/// comparable across schedule rounds.
pub fn weighted_objective(
    x: &ArrayView2<'_, f64>,
    factors: &FactorPair,
    w: &SampleWeights,
    theta: PenaltyTheta,
) -> Result<f64> {
    check_shapes(x, factors, w)?;
    let resid = x - &factors.product();
    let mut data_term = 0.0;
    for (i, row) in resid.rows().into_iter().enumerate() {
        let wi = w.values()[i];
        if wi == 0.0 {
            continue;
        }
        data_term += wi * row.iter().map(|r| r * r).sum::<f64>();
    }
    let gap = &factors.u - &factors.v;
    let penalty = frobenius_norm(&gap.view());
    Ok(0.5 * data_term + 0.5 * theta.value() * penalty * penalty)
}

/// Squared row residuals `l_i = ‖(X − UVᵀ)_i‖²` without the ½ factor.
pub fn per_sample_loss(x: &ArrayView2<'_, f64>, factors: &FactorPair) -> Result<PerSampleLoss> {
    check_shapes(x, factors, &SampleWeights::ones(x.nrows()))?;
    let resid = x - &factors.product();
    let losses = resid
        .rows()
        .into_iter()
        .map(|row| row.iter().map(|r| r * r).sum::<f64>())
        .collect();
    PerSampleLoss::new(losses)
}

/// Analytic gradient of [`weighted_objective`] with respect to `U`:
/// `−diag(w)·(X − UVᵀ)·V + θ·(U − V)`. Exposed for derivative checks.
pub fn objective_grad_u(
    x: &ArrayView2<'_, f64>,
    factors: &FactorPair,
    w: &SampleWeights,
    theta: PenaltyTheta,
) -> Result<Array2<f64>> {
    check_shapes(x, factors, w)?;
    let resid = x - &factors.product();
    let mut grad = resid.dot(&factors.v);
    for (i, mut row) in grad.rows_mut().into_iter().enumerate() {
        let wi = w.values()[i];
        row.mapv_inplace(|g| -wi * g);
    }
    Ok(grad + &((&factors.u - &factors.v) * theta.value()))
}

/// Penalty from the spectral bound: `θ = max(1, ⌈½(‖X‖₂ + ‖X − U₀U₀ᵀ‖_F)⌉)`,
/// bumped by one if the ceiling lands exactly on the bound so the
/// inequality stays strict. Dropping the smallest-singular-value term only
/// enlarges the bound, so the result always dominates it.
pub fn theta_from_bound(x: &ArrayView2<'_, f64>, u0: &ArrayView2<'_, f64>) -> Result<PenaltyTheta> {
    if u0.nrows() != x.nrows() || x.nrows() != x.ncols() {
        return Err(Error::ShapeMismatch {
            expected: format!("square X and U0 with n={}", x.nrows()),
            got: format!(
                "X {}x{}, U0 {}x{}",
                x.nrows(),
                x.ncols(),
                u0.nrows(),
                u0.ncols()
            ),
        });
    }
    for ((i, j), &val) in u0.indexed_iter() {
        if val < 0.0 {
            return Err(Error::NegativeEntry {
                row: i,
                col: j,
                value: val,
            });
        }
    }
    let two_norm = spectral_norm(x, 1e-9, 2000).value;
    let approx = x - &u0.dot(&u0.t());
    let bound = 0.5 * (two_norm + frobenius_norm(&approx.view()));
    let mut theta = bound.ceil().max(1.0);
    if theta <= bound {
        theta += 1.0;
    }
    PenaltyTheta::new(theta)
}

/// Closed-form column minimizer for `u` at fixed `v`:
/// `u_p = max(0, (w_p·(X_c v)_p + θ·v_p)/(w_p·‖v‖² + θ))`.
///
/// The subproblem is coordinate-separable, so clipping the stationary
/// point at zero is the constrained minimizer. The denominator is at
/// least θ > 0, even for an all-zero `v`.
pub fn update_column_u(
    xc: &ArrayView2<'_, f64>,
    v: &ArrayView1<'_, f64>,
    w: &SampleWeights,
    theta: PenaltyTheta,
) -> Array1<f64> {
    let xv = xc.dot(v);
    let v_sq = v.dot(v);
    let th = theta.value();
    Array1::from_iter(
        xv.iter()
            .zip(v.iter())
            .zip(w.values().iter())
            .map(|((&xvp, &vp), &wp)| ((wp * xvp + th * vp) / (wp * v_sq + th)).max(0.0)),
    )
}

/// Closed-form column minimizer for `v` at fixed `u`:
/// `v_q = max(0, ((X_cᵀ·(w⊙u))_q + θ·u_q)/(uᵀ·(w⊙u) + θ))`.
///
/// Row weighting couples every sample weight into the shared denominator.
pub fn update_column_v(
    xc: &ArrayView2<'_, f64>,
    u: &ArrayView1<'_, f64>,
    w: &SampleWeights,
    theta: PenaltyTheta,
) -> Array1<f64> {
    let wu = u * &w.values();
    let xtwu = xc.t().dot(&wu);
    let uwu = u.dot(&wu);
    let th = theta.value();
    let denom = uwu + th;
    Array1::from_iter(
        xtwu.iter()
            .zip(u.iter())
            .map(|(&num, &uq)| ((num + th * uq) / denom).max(0.0)),
    )
}

/// Sweep budget between full residual rebuilds, capping incremental drift.
const RESYNC_SWEEPS: usize = 50;

/// Gauss–Seidel column solver carrying the full residual `R = X − UVᵀ`
/// across sweeps. Each column target is `X_c = R + u_c v_cᵀ`, updated
/// rank-one after every column change and rebuilt from scratch every
/// `RESYNC_SWEEPS` sweeps.
pub struct InnerSolver<'a> {
    x: ArrayView2<'a, f64>,
    u: Array2<f64>,
    v: Array2<f64>,
    residual: Array2<f64>,
    scratch: Array2<f64>,
    sweeps_since_sync: usize,
}

impl<'a> InnerSolver<'a> {
    pub fn new(x: ArrayView2<'a, f64>, factors: FactorPair) -> Result<Self> {
        check_shapes(&x, &factors, &SampleWeights::ones(x.nrows()))?;
        let residual = &x - &factors.product();
        let scratch = residual.clone();
        Ok(Self {
            x,
            u: factors.u,
            v: factors.v,
            residual,
            scratch,
            sweeps_since_sync: 0,
        })
    }

    pub fn factors(&self) -> FactorPair {
        FactorPair {
            u: self.u.clone(),
            v: self.v.clone(),
        }
    }

    /// Column target `X_c = R + u_c v_cᵀ` as the solver currently sees it.
    pub fn column_target(&self, c: usize) -> Array2<f64> {
        let mut xc = self.residual.clone();
        rank_one_add(&mut xc, &self.u.column(c), &self.v.column(c));
        xc
    }

    /// One full pass over columns: for each c form `X_c`, update `u_c`
    /// then `v_c` from the freshest values.
    pub fn sweep(&mut self, w: &SampleWeights, theta: PenaltyTheta) {
        let k = self.u.ncols();
        for c in 0..k {
            let u_old = self.u.column(c).to_owned();
            let v_old = self.v.column(c).to_owned();

            self.scratch.assign(&self.residual);
            rank_one_add(&mut self.scratch, &u_old.view(), &v_old.view());

            let u_new = update_column_u(&self.scratch.view(), &v_old.view(), w, theta);
            let du = &u_new - &u_old;
            rank_one_sub(&mut self.residual, &du.view(), &v_old.view());
            self.u.column_mut(c).assign(&u_new);

            let v_new = update_column_v(&self.scratch.view(), &u_new.view(), w, theta);
            let dv = &v_new - &v_old;
            rank_one_sub(&mut self.residual, &u_new.view(), &dv.view());
            self.v.column_mut(c).assign(&v_new);
        }
        self.sweeps_since_sync += 1;
        if self.sweeps_since_sync >= RESYNC_SWEEPS {
            self.resync();
        }
    }

    fn resync(&mut self) {
        self.residual = &self.x - &self.u.dot(&self.v.t());
        self.sweeps_since_sync = 0;
    }
}

fn rank_one_add(m: &mut Array2<f64>, u: &ArrayView1<'_, f64>, v: &ArrayView1<'_, f64>) {
    for (p, mut row) in m.rows_mut().into_iter().enumerate() {
        let up = u[p];
        if up == 0.0 {
            continue;
        }
        for (q, entry) in row.iter_mut().enumerate() {
            *entry += up * v[q];
        }
    }
}

fn rank_one_sub(m: &mut Array2<f64>, u: &ArrayView1<'_, f64>, v: &ArrayView1<'_, f64>) {
    for (p, mut row) in m.rows_mut().into_iter().enumerate() {
        let up = u[p];
        if up == 0.0 {
            continue;
        }
        for (q, entry) in row.iter_mut().enumerate() {
            *entry -= up * v[q];
        }
    }
}

/// One HALS sweep as a pure function of the factors.
pub fn hals_sweep(
    x: &ArrayView2<'_, f64>,
    factors: &FactorPair,
    w: &SampleWeights,
    theta: PenaltyTheta,
) -> Result<FactorPair> {
    let mut solver = InnerSolver::new(x.reborrow(), factors.clone())?;
    solver.sweep(w, theta);
    Ok(solver.factors())
}

/// Runs `n_sweeps` sweeps at fixed weights, recording the objective after
/// each. Trace sweep indices are local, starting at 1.
pub fn solve_inner(
    x: &ArrayView2<'_, f64>,
    factors: FactorPair,
    w: &SampleWeights,
    theta: PenaltyTheta,
    n_sweeps: usize,
) -> Result<(FactorPair, SolveTrace)> {
    assert!(n_sweeps >= 1, "n_sweeps must be at least 1");
    let mut solver = InnerSolver::new(x.reborrow(), factors)?;
    let mut trace = SolveTrace::default();
    let active = w.active_count();
    let mean_w = w.mean();
    for t in 1..=n_sweeps {
        solver.sweep(w, theta);
        let objective = weighted_objective(x, &solver.factors(), w, theta)?;
        trace.push(TraceRecord {
            sweep: t,
            objective,
            active_samples: active,
            mean_weight: mean_w,
        });
    }
    Ok((solver.factors(), trace))
}
