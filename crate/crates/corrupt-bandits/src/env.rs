//! Piecewise-stationary Bernoulli environments with per-arm corruption.
//!
//! An [`EnvironmentSpec`] describes a bandit instance: a horizon, a list of
//! segments each carrying per-arm reward means, and a per-arm
//! [`CorruptionScheme`] that maps rewards to feedback. Sampling draws a hidden
//! Bernoulli reward and a corrupted feedback bit; the environment never hands
//! the reward to a policy.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corruption::CorruptionScheme;
use crate::policy::argmax;

/// Cap on mean-vector resampling attempts in [`generate_instance`].
const MAX_RESAMPLE_ATTEMPTS: u32 = 100_000;

/// Errors from environment construction, lookup, and generation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvironmentError {
    #[error("environment needs at least one segment")]
    NoSegments,
    #[error("environment needs at least one arm")]
    NoArms,
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("first segment must start at step 1, got {start}")]
    FirstSegmentStart { start: u64 },
    #[error("segment {index} starts at {start}, not after the previous start {previous}")]
    SegmentOrder {
        index: usize,
        start: u64,
        previous: u64,
    },
    #[error("segment start {start} exceeds horizon {horizon}")]
    StartBeyondHorizon { start: u64, horizon: u64 },
    #[error("segment {segment} has {found} means, expected {expected}")]
    ArityMismatch {
        segment: usize,
        expected: usize,
        found: usize,
    },
    #[error("mean for arm {arm} in segment {segment} is {value}, outside [0, 1]")]
    MeanOutOfRange {
        segment: usize,
        arm: usize,
        value: f64,
    },
    #[error("got {found} corruption schemes for {expected} arms")]
    SchemeCountMismatch { expected: usize, found: usize },
    #[error("channel feedback requires a randomized-response matrix for arm {arm}")]
    ChannelNeedsMatrix { arm: usize },
    #[error("time step {t} outside 1..={horizon}")]
    TimeOutOfRange { t: u64, horizon: u64 },
    #[error("arm {arm} outside 0..{arms}")]
    ArmOutOfRange { arm: usize, arms: usize },
    #[error("cannot place {changes} segments with spacing {spacing} in horizon {horizon}")]
    InfeasibleGeneration {
        changes: u64,
        spacing: u64,
        horizon: u64,
    },
    #[error("generator needs at least 2 arms, got {arms}")]
    TooFewArms { arms: usize },
    #[error("generator needs at least 1 segment, got {changes}")]
    ZeroChanges { changes: u64 },
    #[error("minimum gap must lie strictly between 0 and 1, got {value}")]
    InvalidGap { value: f64 },
    #[error("gave up drawing segment means after {attempts} attempts")]
    ResampleBudgetExhausted { attempts: u32 },
}

/// How feedback is produced from a pulled arm's reward distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackMode {
    /// Draw the reward, then pass the realized bit through the arm's
    /// randomized-response matrix. This is the mode the privacy guarantee
    /// speaks about, and the default.
    #[default]
    Channel,
    /// Draw the feedback as an independent Bernoulli with success probability
    /// `g(mu)`. Same marginal law as `Channel`, but reward and feedback are
    /// independent. Works with any corruption scheme, matrix-backed or not.
    Parametric,
}

/// One stationary stretch of the environment: per-arm reward means that apply
/// from `start` (inclusive, 1-based) until the next segment begins.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    /// First time step (1-based) at which `means` applies.
    pub start: u64,
    /// Per-arm Bernoulli reward means, each in `[0, 1]`.
    pub means: Vec<f64>,
}

/// A complete bandit instance: horizon, piecewise-constant reward means, and
/// per-arm corruption schemes. Immutable once constructed; sampling state
/// lives in caller-owned rng streams so replications can run in parallel.
#[derive(Debug, Clone)]
pub struct EnvironmentSpec {
    arms: usize,
    horizon: u64,
    segments: Vec<SegmentSpec>,
    schemes: Vec<CorruptionScheme>,
    feedback_mode: FeedbackMode,
}

impl EnvironmentSpec {
    /// Validates and assembles an environment.
    ///
    /// Requirements: at least one segment, the first starting at step 1,
    /// starts strictly increasing and within the horizon, every segment
    /// listing one mean in `[0, 1]` per arm, one scheme per arm, and — in
    /// channel mode — every scheme backed by a randomized-response matrix.
    pub fn new(
        horizon: u64,
        segments: Vec<SegmentSpec>,
        schemes: Vec<CorruptionScheme>,
        feedback_mode: FeedbackMode,
    ) -> Result<Self, EnvironmentError> {
        if horizon == 0 {
            return Err(EnvironmentError::ZeroHorizon);
        }
        let first = segments.first().ok_or(EnvironmentError::NoSegments)?;
        if first.start != 1 {
            return Err(EnvironmentError::FirstSegmentStart { start: first.start });
        }
        let arms = first.means.len();
        if arms == 0 {
            return Err(EnvironmentError::NoArms);
        }
        for (index, segment) in segments.iter().enumerate() {
            if index > 0 {
                let previous = segments[index - 1].start;
                if segment.start <= previous {
                    return Err(EnvironmentError::SegmentOrder {
                        index,
                        start: segment.start,
                        previous,
                    });
                }
            }
            if segment.start > horizon {
                return Err(EnvironmentError::StartBeyondHorizon {
                    start: segment.start,
                    horizon,
                });
            }
            if segment.means.len() != arms {
                return Err(EnvironmentError::ArityMismatch {
                    segment: index,
                    expected: arms,
                    found: segment.means.len(),
                });
            }
            for (arm, &mean) in segment.means.iter().enumerate() {
                if !(0.0..=1.0).contains(&mean) {
                    return Err(EnvironmentError::MeanOutOfRange {
                        segment: index,
                        arm,
                        value: mean,
                    });
                }
            }
        }
        if schemes.len() != arms {
            return Err(EnvironmentError::SchemeCountMismatch {
                expected: arms,
                found: schemes.len(),
            });
        }
        if feedback_mode == FeedbackMode::Channel {
            if let Some(arm) = schemes.iter().position(|s| s.matrix().is_none()) {
                return Err(EnvironmentError::ChannelNeedsMatrix { arm });
            }
        }
        Ok(EnvironmentSpec {
            arms,
            horizon,
            segments,
            schemes,
            feedback_mode,
        })
    }

    /// Replaces the per-arm corruption schemes, revalidating counts and the
    /// channel-mode matrix requirement.
    pub fn with_schemes(self, schemes: Vec<CorruptionScheme>) -> Result<Self, EnvironmentError> {
        EnvironmentSpec::new(self.horizon, self.segments, schemes, self.feedback_mode)
    }

    /// Number of arms.
    pub fn arms(&self) -> usize {
        self.arms
    }

    /// Horizon (number of time steps).
    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// The ordered stationary segments.
    pub fn segments(&self) -> &[SegmentSpec] {
        &self.segments
    }

    /// Number of stationary segments (the change count, counting the start).
    pub fn num_segments(&self) -> usize {
        self.segments.len()
    }

    /// Per-arm corruption schemes.
    pub fn schemes(&self) -> &[CorruptionScheme] {
        &self.schemes
    }

    /// How feedback is produced.
    pub fn feedback_mode(&self) -> FeedbackMode {
        self.feedback_mode
    }

    fn check_time(&self, t: u64) -> Result<(), EnvironmentError> {
        if t == 0 || t > self.horizon {
            return Err(EnvironmentError::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// Per-arm reward means in force at step `t` (1-based).
    pub fn means_at(&self, t: u64) -> Result<&[f64], EnvironmentError> {
        self.check_time(t)?;
        let idx = self.segments.partition_point(|s| s.start <= t) - 1;
        Ok(&self.segments[idx].means)
    }

    /// Best arm at step `t` and its mean; ties go to the lowest arm id.
    pub fn oracle_best(&self, t: u64) -> Result<(usize, f64), EnvironmentError> {
        let means = self.means_at(t)?;
        let best = argmax(means);
        Ok((best, means[best]))
    }

    /// Draws one interaction: the hidden reward bit and the observed
    /// feedback bit for pulling `arm` at step `t`.
    ///
    /// Always consumes exactly two uniform draws from `rng`, regardless of
    /// feedback mode, so interleaved runs stay reproducible.
    pub fn sample_step<R: Rng + ?Sized>(
        &self,
        arm: usize,
        t: u64,
        rng: &mut R,
    ) -> Result<(bool, bool), EnvironmentError> {
        if arm >= self.arms {
            return Err(EnvironmentError::ArmOutOfRange {
                arm,
                arms: self.arms,
            });
        }
        let mu = self.means_at(t)?[arm];
        let reward = rng.gen::<f64>() < mu;
        let feedback = match self.feedback_mode {
            FeedbackMode::Channel => {
                let matrix = self.schemes[arm]
                    .matrix()
                    .expect("channel mode validated at construction");
                matrix.corrupt(reward, rng)
            }
            FeedbackMode::Parametric => {
                let lambda = self.schemes[arm]
                    .apply(mu)
                    .expect("means validated at construction");
                rng.gen::<f64>() < lambda
            }
        };
        Ok((reward, feedback))
    }
}

/// Draws a random piecewise-stationary instance: `changes` segments over
/// horizon `horizon`, consecutive segment starts at least `ceil(horizon / (2 *
/// changes))` apart, per-segment means uniform in `[0, 1]` resampled until the
/// best-vs-second-best gap is at least `min_gap` and the best arm moves at
/// every breakpoint. Identity schemes, channel feedback. Deterministic in
/// `seed`.
pub fn generate_instance(
    arms: usize,
    horizon: u64,
    changes: u64,
    min_gap: f64,
    seed: u64,
) -> Result<EnvironmentSpec, EnvironmentError> {
    if arms < 2 {
        return Err(EnvironmentError::TooFewArms { arms });
    }
    if changes == 0 {
        return Err(EnvironmentError::ZeroChanges { changes });
    }
    if !(min_gap > 0.0 && min_gap < 1.0) {
        return Err(EnvironmentError::InvalidGap { value: min_gap });
    }
    let spacing = horizon.div_ceil(2 * changes);
    // Starts are 1, then one draw per remaining segment from
    // [prev + spacing, horizon - (changes - i) * spacing]; the interval is
    // nonempty for every segment exactly when 2 * changes <= horizon.
    if 2 * changes > horizon {
        return Err(EnvironmentError::InfeasibleGeneration {
            changes,
            spacing,
            horizon,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = Vec::with_capacity(changes as usize);
    starts.push(1u64);
    for i in 2..=changes {
        let lo = starts.last().unwrap() + spacing;
        let hi = horizon - (changes - i) * spacing;
        debug_assert!(lo <= hi);
        starts.push(rng.gen_range(lo..=hi));
    }

    let mut segments: Vec<SegmentSpec> = Vec::with_capacity(starts.len());
    let mut previous_best: Option<usize> = None;
    for &start in &starts {
        let mut attempts = 0u32;
        let means = loop {
            attempts += 1;
            if attempts > MAX_RESAMPLE_ATTEMPTS {
                return Err(EnvironmentError::ResampleBudgetExhausted {
                    attempts: MAX_RESAMPLE_ATTEMPTS,
                });
            }
            let candidate: Vec<f64> = (0..arms).map(|_| rng.gen::<f64>()).collect();
            let best = argmax(&candidate);
            let second = candidate
                .iter()
                .enumerate()
                .filter(|&(a, _)| a != best)
                .map(|(_, &m)| m)
                .fold(f64::NEG_INFINITY, f64::max);
            if candidate[best] - second < min_gap {
                continue;
            }
            if previous_best == Some(best) {
                continue;
            }
            previous_best = Some(best);
            break candidate;
        };
        segments.push(SegmentSpec { start, means });
    }

    let schemes = vec![CorruptionScheme::identity(); arms];
    EnvironmentSpec::new(horizon, segments, schemes, FeedbackMode::Channel)
}
