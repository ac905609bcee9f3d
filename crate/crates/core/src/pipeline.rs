//! End-to-end clustering runs: factor initialization, penalty selection,
//! alternating weight refresh and inner solves, convergence detection, and
//! label extraction.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::SimilarityMatrix;
use crate::selfpaced::{advance_schedule, schedule_weights, SpMode, SpScheduleState};
use crate::solver::{
    per_sample_loss, solve_inner, theta_from_bound, FactorPair, PenaltyTheta, SampleWeights,
    SolveTrace, TraceRecord,
};

/// Full run configuration.
#[derive(Debug, Clone)]
pub struct SpsConfig {
    pub k: usize,
    pub mode: SpMode,
    /// Starting inclusion fraction; 0.5 engages the median rule.
    pub init_fraction: f64,
    pub fraction_step: f64,
    /// Sweeps between weight refreshes.
    pub sweeps_per_round: usize,
    /// Relative-decrease threshold for convergence.
    pub conv_tol: f64,
    pub max_sweeps: usize,
    pub seed: u64,
}

impl SpsConfig {
    pub fn new(k: usize, mode: SpMode, seed: u64) -> Self {
        Self {
            k,
            mode,
            init_fraction: 0.5,
            fraction_step: 0.1,
            sweeps_per_round: 10,
            conv_tol: 1e-6,
            max_sweeps: 1000,
            seed,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.k < 2 || self.k > n {
            return Err(Error::InvalidK { k: self.k, n });
        }
        if !(self.init_fraction > 0.0 && self.init_fraction <= 1.0) {
            return Err(Error::InvalidFraction(self.init_fraction));
        }
        if !(self.fraction_step > 0.0 && self.fraction_step <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "fraction_step {} outside (0, 1]",
                self.fraction_step
            )));
        }
        if self.conv_tol <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "conv_tol {} must be positive",
                self.conv_tol
            )));
        }
        if self.sweeps_per_round == 0 || self.max_sweeps == 0 {
            return Err(Error::InvalidConfig(
                "sweeps_per_round and max_sweeps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct ClusteringResult {
    pub labels: Vec<usize>,
    pub factors: FactorPair,
    pub weights_final: SampleWeights,
    pub trace: SolveTrace,
    pub theta: PenaltyTheta,
    pub sweeps_used: usize,
    pub converged: bool,
}

/// Random nonnegative factors, identical `U₀` and `V₀`, deterministic per
/// seed. Entries are uniform on `[0, s)` with `s = sqrt(mean(X)/k)`, so the
/// initial reconstruction matches the affinity scale; an all-zero `X`
/// falls back to `s = 1e-3`.
pub fn init_factors(x: &SimilarityMatrix, k: usize, seed: u64) -> Result<FactorPair> {
    let n = x.n();
    if k > n {
        return Err(Error::InvalidK { k, n });
    }
    let mean = x.mean();
    let scale = if mean == 0.0 {
        1e-3
    } else {
        (mean / k as f64).sqrt()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = Array2::zeros((n, k));
    for p in 0..n {
        for c in 0..k {
            u[[p, c]] = rng.random::<f64>() * scale;
        }
    }
    FactorPair::new(u.clone(), u)
}

/// Row-wise argmax labels; ties break toward the smaller column, so an
/// all-zero row gets label 0.
pub fn extract_labels(u: &ArrayView2<'_, f64>) -> Vec<usize> {
    u.rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            let mut best_val = row[0];
            for (c, &val) in row.iter().enumerate().skip(1) {
                if val > best_val {
                    best = c;
                    best_val = val;
                }
            }
            best
        })
        .collect()
}

/// Runs the full self-paced factorization.
///
/// Each round refreshes the sample weights from the current losses, runs
/// `sweeps_per_round` column sweeps, and advances the schedule. The
/// relative-decrease convergence test applies only once every sample is
/// included, because the objective legitimately rises whenever new
/// (harder) samples enter the fit.
pub fn run_spsnmf(x: &SimilarityMatrix, cfg: &SpsConfig) -> Result<ClusteringResult> {
    cfg.validate(x.n())?;

    let mut factors = init_factors(x, cfg.k, cfg.seed)?;
    let theta = theta_from_bound(&x.matrix(), &factors.u.view())?;
    let mut losses = per_sample_loss(&x.matrix(), &factors)?;
    let mut schedule =
        SpScheduleState::init(cfg.mode, &losses, cfg.init_fraction, cfg.fraction_step)?;

    let mut trace = SolveTrace::default();
    let mut weights = schedule_weights(&schedule, &losses)?;
    let mut sweeps_used = 0;
    let mut converged = false;
    let mut prev_round_objective: Option<f64> = None;

    while sweeps_used < cfg.max_sweeps && !converged {
        weights = schedule_weights(&schedule, &losses)?;
        let round_sweeps = cfg.sweeps_per_round.min(cfg.max_sweeps - sweeps_used);
        let was_included = schedule.all_included;

        let (next, round_trace) = solve_inner(&x.matrix(), factors, &weights, theta, round_sweeps)?;
        factors = next;

        for record in round_trace.records() {
            trace.push(TraceRecord {
                sweep: sweeps_used + record.sweep,
                ..*record
            });
        }
        sweeps_used += round_sweeps;

        // One outer iteration = one round at the configured weight cadence:
        // compare end-of-round objectives, and only once both ends were
        // computed with every sample included. A momentary sub-tolerance
        // dip inside a round (e.g. while escaping a flat region) does not
        // terminate the run.
        let objective = round_trace
            .last_objective()
            .expect("round ran at least one sweep");
        if was_included {
            if let Some(prev) = prev_round_objective {
                let rel = if prev > 0.0 {
                    (prev - objective).abs() / prev
                } else {
                    0.0
                };
                if rel < cfg.conv_tol {
                    converged = true;
                }
            }
            prev_round_objective = Some(objective);
        } else {
            prev_round_objective = None;
        }

        losses = per_sample_loss(&x.matrix(), &factors)?;
        schedule = advance_schedule(&schedule, &losses)?;
    }

    let labels = extract_labels(&factors.u.view());
    Ok(ClusteringResult {
        labels,
        factors,
        weights_final: weights,
        trace,
        theta,
        sweeps_used,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn block_similarity(blocks: usize, size: usize) -> SimilarityMatrix {
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
        SimilarityMatrix::from_matrix(m).unwrap()
    }

    #[test]
    fn init_factors_deterministic_per_seed() {
        let x = block_similarity(2, 4);
        let a = init_factors(&x, 2, 7).unwrap();
        let b = init_factors(&x, 2, 7).unwrap();
        assert_eq!(a, b);
        let c = init_factors(&x, 2, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_factors_zero_matrix_uses_floor_scale() {
        let x = SimilarityMatrix::from_matrix(Array2::zeros((4, 4))).unwrap();
        let f = init_factors(&x, 2, 1).unwrap();
        assert!(f.u.iter().all(|&v| (0.0..1e-3).contains(&v)));
        assert_eq!(f.u, f.v);
    }

    #[test]
    fn init_factors_scale_matches_mean() {
        let mut m = Array2::from_elem((5, 5), 4.0 * 25.0 / 20.0);
        for i in 0..5 {
            m[[i, i]] = 0.0;
        }
        // mean = 4 over n² entries; with k = 4 entries live in [0, 1).
        let x = SimilarityMatrix::from_matrix(m).unwrap();
        assert!((x.mean() - 4.0).abs() < 1e-12);
        let f = init_factors(&x, 4, 3).unwrap();
        assert!(f.u.iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn init_factors_rejects_oversized_k() {
        let x = SimilarityMatrix::from_matrix(Array2::zeros((3, 3))).unwrap();
        assert!(matches!(
            init_factors(&x, 4, 0),
            Err(Error::InvalidK { k: 4, n: 3 })
        ));
    }

    #[test]
    fn labels_argmax_with_tie_and_zero_rules() {
        let u = array![[0.9, 0.1], [0.2, 0.8]];
        assert_eq!(extract_labels(&u.view()), vec![0, 1]);
        let u = array![[0.5, 0.5]];
        assert_eq!(extract_labels(&u.view()), vec![0]);
        let u = array![[0.0, 0.0]];
        assert_eq!(extract_labels(&u.view()), vec![0]);
    }

    #[test]
    fn run_is_deterministic() {
        let x = block_similarity(3, 5);
        let cfg = SpsConfig::new(3, SpMode::Hard, 11);
        let a = run_spsnmf(&x, &cfg).unwrap();
        let b = run_spsnmf(&x, &cfg).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.factors, b.factors);
        assert_eq!(a.trace.records(), b.trace.records());
        assert_eq!(a.sweeps_used, b.sweeps_used);
    }

    #[test]
    fn degenerate_n_equals_k_smoke() {
        let x = SimilarityMatrix::from_matrix(Array2::zeros((3, 3))).unwrap();
        let cfg = SpsConfig::new(3, SpMode::Baseline, 0);
        let result = run_spsnmf(&x, &cfg).unwrap();
        assert_eq!(result.labels.len(), 3);
        assert!(result.labels.iter().all(|&l| l < 3));
    }

    #[test]
    fn objective_trace_non_increasing_after_full_inclusion() {
        let x = block_similarity(3, 4);
        let cfg = SpsConfig::new(3, SpMode::Hard, 5);
        let result = run_spsnmf(&x, &cfg).unwrap();
        // Weights refresh at round boundaries; within the fully-included
        // phase the objective must not increase beyond slack.
        let records = result.trace.records();
        let full = records
            .iter()
            .position(|r| r.active_samples == 12 && r.mean_weight == 1.0)
            .unwrap();
        for pair in records[full..].windows(2) {
            assert!(pair[1].objective <= pair[0].objective + 1e-12 * (1.0 + pair[0].objective));
        }
    }

    #[test]
    fn baseline_matches_hand_rolled_inner_solve_bitwise() {
        let x = block_similarity(2, 5);
        let cfg = SpsConfig::new(2, SpMode::Baseline, 4);
        let result = run_spsnmf(&x, &cfg).unwrap();

        let mut factors = init_factors(&x, cfg.k, cfg.seed).unwrap();
        let theta = theta_from_bound(&x.matrix(), &factors.u.view()).unwrap();
        let w = SampleWeights::ones(x.n());
        let mut objectives = Vec::new();
        while objectives.len() < result.sweeps_used {
            let budget = cfg
                .sweeps_per_round
                .min(result.sweeps_used - objectives.len());
            let (next, trace) = solve_inner(&x.matrix(), factors, &w, theta, budget).unwrap();
            factors = next;
            objectives.extend(trace.records().iter().map(|r| r.objective));
        }

        let pipeline_objectives: Vec<f64> =
            result.trace.records().iter().map(|r| r.objective).collect();
        assert_eq!(pipeline_objectives, objectives);
        assert_eq!(
            result.factors,
            FactorPair::new(factors.u, factors.v).unwrap()
        );
        assert!(result
            .trace
            .records()
            .iter()
            .all(|r| r.active_samples == 10));
    }

    #[test]
    fn hard_mode_with_full_initial_fraction_matches_baseline() {
        let x = block_similarity(2, 6);
        let mut hard_cfg = SpsConfig::new(2, SpMode::Hard, 9);
        hard_cfg.init_fraction = 1.0;
        let baseline_cfg = SpsConfig {
            mode: SpMode::Baseline,
            ..hard_cfg.clone()
        };

        let hard = run_spsnmf(&x, &hard_cfg).unwrap();
        let baseline = run_spsnmf(&x, &baseline_cfg).unwrap();
        assert_eq!(hard.trace.records(), baseline.trace.records());
        assert_eq!(hard.labels, baseline.labels);
    }

    #[test]
    fn corrupted_rows_excluded_at_first_refresh() {
        // Clean 3-block instance with 5 rows/cols overwritten by uniform
        // noise; their initial losses must rank in the top half.
        let clean = block_similarity(3, 20);
        let n = clean.n();
        let mut m = clean.matrix().to_owned();
        let corrupted = [3usize, 17, 29, 41, 55];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for &i in &corrupted {
            for j in 0..n {
                if j != i {
                    let v = 0.5 + 0.5 * rng.random::<f64>();
                    m[[i, j]] = v;
                    m[[j, i]] = v;
                }
            }
        }
        let x = SimilarityMatrix::from_matrix(m).unwrap();

        for seed in 0..10 {
            let factors = init_factors(&x, 3, seed).unwrap();
            let losses = per_sample_loss(&x.matrix(), &factors).unwrap();
            let schedule = SpScheduleState::init(SpMode::Hard, &losses, 0.5, 0.1).unwrap();
            let weights = schedule_weights(&schedule, &losses).unwrap();
            for &i in &corrupted {
                assert_eq!(weights.values()[i], 0.0, "seed {seed}, sample {i}");
            }
        }
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let x = block_similarity(2, 3);
        let mut cfg = SpsConfig::new(1, SpMode::Hard, 0);
        assert!(run_spsnmf(&x, &cfg).is_err());
        cfg.k = 2;
        cfg.conv_tol = 0.0;
        assert!(run_spsnmf(&x, &cfg).is_err());
        cfg.conv_tol = 1e-6;
        cfg.init_fraction = 0.0;
        assert!(run_spsnmf(&x, &cfg).is_err());
    }
}
