//! Self-paced sample weighting: closed-form weight minimizers for the hard
//! (binary) and soft (mixture) regularizers, plus the schedule that admits
//! 10% more samples per round until everything is included.
//!
//! Thresholds are reciprocal: a sample with loss `l_i` is easy when
//! `l_i ≤ 1/λ`. The schedule picks `λ` as the reciprocal of a loss
//! quantile so a target fraction of samples qualifies; the soft variant
//! keeps a second threshold `λ′ > λ` and interpolates weights on the band
//! between them.

use crate::error::{Error, Result};
use crate::solver::{PerSampleLoss, SampleWeights};

/// Weighting strategy for a run. `Baseline` disables self-pacing (w ≡ 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpMode {
    Hard,
    Soft,
    Baseline,
}

impl SpMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpMode::Hard => "hard",
            SpMode::Soft => "soft",
            SpMode::Baseline => "baseline",
        }
    }
}

impl std::str::FromStr for SpMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" => Ok(SpMode::Hard),
            "soft" => Ok(SpMode::Soft),
            "baseline" => Ok(SpMode::Baseline),
            other => Err(Error::InvalidConfig(format!(
                "unknown mode '{other}' (expected hard, soft, or baseline)"
            ))),
        }
    }
}

/// Substitute threshold reciprocal when a loss quantile is exactly zero.
const LAMBDA_CEILING: f64 = 1e12;

/// Inclusion-schedule state carried across rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct SpScheduleState {
    pub mode: SpMode,
    pub lambda: f64,
    /// Upper threshold of the soft band; `None` outside soft mode.
    pub lambda_prime: Option<f64>,
    /// Target inclusion fraction, non-decreasing across rounds.
    pub fraction: f64,
    /// Fraction added per round.
    pub step: f64,
    pub round: usize,
    pub all_included: bool,
}

impl SpScheduleState {
    /// Initial state from the first per-sample losses. At the default
    /// starting fraction 0.5 the threshold comes from the loss median;
    /// other fractions use the matching loss quantile.
    pub fn init(
        mode: SpMode,
        losses: &PerSampleLoss,
        init_fraction: f64,
        step: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&step) || step == 0.0 {
            return Err(Error::InvalidConfig(format!(
                "fraction step {step} outside (0, 1]"
            )));
        }
        if mode == SpMode::Baseline {
            return Ok(Self {
                mode,
                lambda: LAMBDA_CEILING,
                lambda_prime: None,
                fraction: 1.0,
                step,
                round: 0,
                all_included: true,
            });
        }
        if !(init_fraction > 0.0 && init_fraction <= 1.0) {
            return Err(Error::InvalidFraction(init_fraction));
        }
        let fraction = snap_fraction(init_fraction);
        let lambda = if (fraction - 0.5).abs() < 1e-12 {
            init_lambda_median(losses)
        } else {
            lambda_for_fraction(losses, fraction)?
        };
        let (lambda, lambda_prime) = match mode {
            SpMode::Soft => soft_pair(losses, lambda, fraction, step)?,
            _ => (lambda, None),
        };
        Ok(Self {
            mode,
            lambda,
            lambda_prime,
            fraction,
            step,
            round: 0,
            all_included: fraction >= 1.0,
        })
    }
}

/// Initial threshold from the loss median (even n: mean of the two middle
/// order statistics). A zero median falls back to a huge λ so that only
/// zero-loss samples qualify.
pub fn init_lambda_median(losses: &PerSampleLoss) -> f64 {
    assert!(!losses.is_empty(), "need at least one loss");
    let mut sorted: Vec<f64> = losses.values().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("losses are finite"));
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    if median == 0.0 {
        LAMBDA_CEILING
    } else {
        1.0 / median
    }
}

/// Threshold admitting at least `⌈p·n⌉` samples: `λ = 1/τ` with `τ` the
/// `⌈p·n⌉`-th smallest loss. Ties at `τ` admit every equal-valued sample.
pub fn lambda_for_fraction(losses: &PerSampleLoss, p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidFraction(p));
    }
    let n = losses.len();
    assert!(n >= 1, "need at least one loss");
    // The 1e-9 guard keeps exact-integer products (e.g. 0.5·4) from being
    // pushed up a rank by float noise.
    let rank = ((p * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let mut sorted: Vec<f64> = losses.values().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("losses are finite"));
    let tau = sorted[rank - 1];
    Ok(if tau == 0.0 {
        LAMBDA_CEILING
    } else {
        1.0 / tau
    })
}

/// Binary weights: `w_i = 1` iff `l_i ≤ 1/λ` (boundary inclusive).
pub fn hard_weights(losses: &PerSampleLoss, lambda: f64) -> SampleWeights {
    assert!(lambda > 0.0, "lambda must be positive");
    let threshold = 1.0 / lambda;
    let w = losses
        .values()
        .iter()
        .map(|&l| if l <= threshold { 1.0 } else { 0.0 })
        .collect();
    SampleWeights::new(w).expect("binary weights are valid")
}

/// Mixture weights: 1 below `1/λ′`, 0 at or above `1/λ`, and the
/// continuous interpolation `ζ/l − λζ` with `ζ = 1/(λ′ − λ)` in between.
pub fn soft_weights(
    losses: &PerSampleLoss,
    lambda: f64,
    lambda_prime: f64,
) -> Result<SampleWeights> {
    if !(lambda_prime > lambda && lambda > 0.0) {
        return Err(Error::InvalidLambdaPair {
            lambda,
            lambda_prime,
        });
    }
    let zeta = 1.0 / (lambda_prime - lambda);
    let full_below = 1.0 / lambda_prime;
    let zero_above = 1.0 / lambda;
    let w = losses
        .values()
        .iter()
        .map(|&l| {
            if l <= full_below {
                1.0
            } else if l >= zero_above {
                0.0
            } else {
                (zeta / l - lambda * zeta).clamp(0.0, 1.0)
            }
        })
        .collect();
    SampleWeights::new(w)
}

/// Weights for the current round. Hard mode forces full inclusion once the
/// fraction reaches 1, so the terminal state never depends on reciprocal
/// rounding at the largest loss.
pub fn schedule_weights(state: &SpScheduleState, losses: &PerSampleLoss) -> Result<SampleWeights> {
    match state.mode {
        SpMode::Baseline => Ok(SampleWeights::ones(losses.len())),
        SpMode::Hard => {
            if state.all_included {
                Ok(SampleWeights::ones(losses.len()))
            } else {
                Ok(hard_weights(losses, state.lambda))
            }
        }
        SpMode::Soft => {
            let lambda_prime = state
                .lambda_prime
                .expect("soft schedule state carries lambda_prime");
            soft_weights(losses, state.lambda, lambda_prime)
        }
    }
}

/// Advances the schedule one round: grow the fraction by `step` (clamped
/// to 1), recompute `λ` (and `λ′` in soft mode) from the current losses,
/// and mark full inclusion once the fraction reaches 1.
pub fn advance_schedule(
    state: &SpScheduleState,
    losses: &PerSampleLoss,
) -> Result<SpScheduleState> {
    let mut next = state.clone();
    next.round = state.round + 1;
    if state.mode == SpMode::Baseline {
        return Ok(next);
    }
    next.fraction = snap_fraction((state.fraction + state.step).min(1.0));
    next.lambda = lambda_for_fraction(losses, next.fraction)?;
    if state.mode == SpMode::Soft {
        let (lambda, lambda_prime) = soft_pair(losses, next.lambda, next.fraction, state.step)?;
        next.lambda = lambda;
        next.lambda_prime = lambda_prime;
    }
    next.all_included = next.fraction >= 1.0;
    Ok(next)
}

/// `λ′` from the quantile one step below the current fraction, so exactly
/// the newest slice of samples gets fractional weights. When the two
/// quantiles tie, `λ` is nudged down to keep `λ′ > λ` strict while the
/// tied samples stay fully included.
fn soft_pair(
    losses: &PerSampleLoss,
    lambda: f64,
    fraction: f64,
    step: f64,
) -> Result<(f64, Option<f64>)> {
    let prev = (fraction - step).max(f64::MIN_POSITIVE);
    let lambda_prime = lambda_for_fraction(losses, prev.min(1.0))?;
    let lambda = if lambda_prime > lambda {
        lambda
    } else {
        lambda_prime / (1.0 + 1e-9)
    };
    Ok((lambda, Some(lambda_prime)))
}

/// Float-safe clamp: repeated `+0.1` steps land within 1e-9 of 1 rather
/// than exactly on it.
fn snap_fraction(f: f64) -> f64 {
    if f >= 1.0 - 1e-9 {
        1.0
    } else {
        f
    }
}
