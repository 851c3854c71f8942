//! Closed-form regret guarantee for the sliding-window policy.
//!
//! For a concrete environment and window length this evaluates, arm by arm,
//! an upper bound on the expected number of pulls of each suboptimal arm and
//! sums those into a regret bound (per-pull regret is at most 1 because
//! reward means live in `[0, 1]`). Each additive term is reported separately
//! so experiments can see what dominates.

use thiserror::Error;

use crate::env::EnvironmentSpec;
use crate::kl::{bern_kl, bern_kl_deriv, exploration_fn};
use crate::policy::argmax;

/// Errors from evaluating the regret bound.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("window must be at least 2 for the exploration term, got {window}")]
    WindowTooSmall { window: u64 },
    #[error(
        "arm {arm} is suboptimal in segment {segment} but its mean feedback \
         equals the corrupted optimal mean ({value}); the bound diverges"
    )]
    DegenerateGap {
        arm: usize,
        segment: usize,
        value: f64,
    },
    #[error(
        "arm {arm} has boundary mean feedback {value} in segment {segment}; \
         the bound needs means strictly inside (0, 1)"
    )]
    BoundaryFeedback {
        arm: usize,
        segment: usize,
        value: f64,
    },
    #[error("corruption scheme for arm {arm} failed on mean {mean}: {message}")]
    SchemeFailure {
        arm: usize,
        mean: f64,
        message: String,
    },
}

/// The additive pieces of one arm's pull-count bound. `total` is their sum.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BoundTerms {
    /// `(L + 4) * w`: pulls written off around change points and window
    /// boundary effects, `L` being the segment count and `w` the window.
    pub window: f64,
    /// `4 e T / (w ln w)`: re-exploration forced by the sliding window.
    pub exploration: f64,
    /// Sum over segments where the arm is suboptimal of `f(w) / d`, the
    /// classic KL-UCB cost of ruling the arm out at feedback distance `d`.
    pub kl: f64,
    /// Sum over the same segments of `sqrt(2 pi) sqrt(d'^2 / d^3) sqrt(f(w))`.
    pub sqrt: f64,
    /// Sum over the same segments of `2 (d' / d)^2`.
    pub deriv_ratio: f64,
    /// Constant slack, 5 per arm.
    pub constant: f64,
}

impl BoundTerms {
    /// Sum of all terms: the bound on the arm's expected pull count.
    pub fn total(&self) -> f64 {
        self.window + self.exploration + self.kl + self.sqrt + self.deriv_ratio + self.constant
    }
}

/// Pull-count bound for one arm that is suboptimal in at least one segment.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ArmBound {
    /// The arm.
    pub arm: usize,
    /// Segments (0-based indices) in which the arm is suboptimal.
    pub suboptimal_segments: Vec<usize>,
    /// The itemized terms of the pull-count bound.
    pub terms: BoundTerms,
}

/// The evaluated regret guarantee for one environment and window length.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BoundReport {
    /// Horizon the bound was evaluated at.
    pub horizon: u64,
    /// Window length the bound was evaluated at.
    pub window: u64,
    /// Number of stationary segments.
    pub segments: usize,
    /// One entry per arm that is suboptimal somewhere; arms that are optimal
    /// in every segment never accrue regret and are omitted.
    pub arms: Vec<ArmBound>,
}

impl BoundReport {
    /// The regret bound at the full horizon: the summed pull-count bounds,
    /// one unit of regret per pull.
    pub fn regret_bound(&self) -> f64 {
        self.arms.iter().map(|a| a.terms.total()).sum()
    }

    /// The bound as a curve in `t`: every term is horizon-free except the
    /// window-driven exploration term, which grows linearly, so the curve
    /// swaps `4 e T / (w ln w)` for `4 e t / (w ln w)`. At `t = horizon`
    /// this equals [`regret_bound`](BoundReport::regret_bound), and for
    /// `t < horizon` it still dominates the regret at `t` because dropping
    /// later segments only shrinks the per-segment sums.
    pub fn regret_bound_at(&self, t: u64) -> f64 {
        let full: f64 = self.regret_bound();
        let swap: f64 = self
            .arms
            .iter()
            .map(|a| a.terms.exploration * (1.0 - t as f64 / self.horizon as f64))
            .sum();
        full - swap
    }
}

/// Evaluates the per-arm pull-count bounds for running the sliding-window
/// policy with window `window` on `env`.
///
/// Per suboptimal (arm, segment) pair the terms need the Bernoulli KL
/// divergence `d` and its derivative `d'` between the arm's mean feedback
/// `g_a(mu_a)` and the corrupted optimal mean `g_a(mu*)`; both means must be
/// strictly inside `(0, 1)` and distinct, otherwise the corresponding error
/// is returned. The exploration schedule `f` is the same clamped
/// `ln x + 3 ln ln x` the policy uses.
pub fn regret_bound(env: &EnvironmentSpec, window: u64) -> Result<BoundReport, BoundError> {
    if window < 2 {
        return Err(BoundError::WindowTooSmall { window });
    }
    let w = window as f64;
    let t = env.horizon() as f64;
    let segments = env.num_segments() as f64;
    let f_w = exploration_fn(w).expect("window is at least 2");
    let four_e = 4.0 * std::f64::consts::E;

    let mut arms = Vec::new();
    for arm in 0..env.arms() {
        let scheme = &env.schemes()[arm];
        let mut suboptimal_segments = Vec::new();
        let mut kl = 0.0;
        let mut sqrt = 0.0;
        let mut deriv_ratio = 0.0;
        for (index, segment) in env.segments().iter().enumerate() {
            let best = argmax(&segment.means);
            if best == arm {
                continue;
            }
            let apply = |mean: f64| {
                scheme.apply(mean).map_err(|e| BoundError::SchemeFailure {
                    arm,
                    mean,
                    message: e.to_string(),
                })
            };
            let lambda = apply(segment.means[arm])?;
            let lambda_star = apply(segment.means[best])?;
            if !(lambda > 0.0 && lambda < 1.0) || !(lambda_star > 0.0 && lambda_star < 1.0) {
                let value = if lambda <= 0.0 || lambda >= 1.0 {
                    lambda
                } else {
                    lambda_star
                };
                return Err(BoundError::BoundaryFeedback {
                    arm,
                    segment: index,
                    value,
                });
            }
            if lambda == lambda_star {
                return Err(BoundError::DegenerateGap {
                    arm,
                    segment: index,
                    value: lambda,
                });
            }
            let d = bern_kl(lambda, lambda_star).expect("means validated above");
            let dp = bern_kl_deriv(lambda, lambda_star).expect("means validated above");
            kl += f_w / d;
            sqrt += (2.0 * std::f64::consts::PI).sqrt() * (dp * dp / d.powi(3)).sqrt() * f_w.sqrt();
            deriv_ratio += 2.0 * (dp / d).powi(2);
            suboptimal_segments.push(index);
        }
        if suboptimal_segments.is_empty() {
            continue;
        }
        arms.push(ArmBound {
            arm,
            suboptimal_segments,
            terms: BoundTerms {
                window: (segments + 4.0) * w,
                exploration: four_e * t / (w * w.ln()),
                kl,
                sqrt,
                deriv_ratio,
                constant: 5.0,
            },
        });
    }
    Ok(BoundReport {
        horizon: env.horizon(),
        window,
        segments: env.num_segments(),
        arms,
    })
}
