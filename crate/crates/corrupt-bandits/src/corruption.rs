//! Binary corruption channels and general strictly monotone corruption maps.
//!
//! A randomized-response matrix flips each Bernoulli reward bit with known
//! probabilities before the learner sees it; the induced map from reward mean
//! to feedback mean is affine. Schemes generalize this to any strictly
//! monotone continuous map `[0, 1] -> [0, 1]` with a computable inverse, which
//! is all the index policies need.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

/// Number of grid points used to certify strict monotonicity of custom maps.
const MONOTONE_GRID: usize = 1025;

/// Bisection tolerance for inverting custom corruption maps.
const INVERT_TOL: f64 = 1e-12;

/// Slack allowed when checking that a value lies inside a scheme's image,
/// absorbing round-off from upstream clamping.
const IMAGE_SLACK: f64 = 1e-9;

/// Errors for channel and scheme construction and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorruptionError {
    /// A matrix entry left `[0, 1]`.
    #[error("{name} must be a probability in [0, 1], got {value}")]
    InvalidProbability { name: &'static str, value: f64 },
    /// With `p00 + p11 = 1` feedback is independent of the reward and the
    /// affine map collapses to a constant, so means cannot be recovered.
    #[error("channel must satisfy p00 + p11 != 1, got p00={p00} and p11={p11}")]
    NonIdentifiable { p00: f64, p11: f64 },
    /// Privacy levels are positive finite reals.
    #[error("privacy level must be positive and finite, got {epsilon}")]
    InvalidEpsilon { epsilon: f64 },
    /// Scheme arguments live in `[0, 1]`.
    #[error("corruption map input must lie in [0, 1], got {value}")]
    OutOfDomain { value: f64 },
    /// Inversion target outside the scheme's image.
    #[error("value {value} lies outside the corruption image [{lo}, {hi}]")]
    OutOfImage { value: f64, lo: f64, hi: f64 },
    /// Custom maps must be strictly increasing or strictly decreasing.
    #[error("corruption map must be strictly monotone on [0, 1]")]
    NotStrictlyMonotone,
    /// Custom maps must stay inside `[0, 1]`.
    #[error("corruption map must take values in [0, 1], got {value} at x={x}")]
    OutOfRange { x: f64, value: f64 },
}

/// A binary randomized-response channel.
///
/// `p00` is the probability that a 0 reward is reported as 0, `p11` the
/// probability that a 1 reward is reported as 1. The complements are stored
/// explicitly so privacy levels of extreme channels (entries very close to 1)
/// are computed without cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomizedResponseMatrix {
    p00: f64,
    p11: f64,
    comp00: f64,
    comp11: f64,
}

impl RandomizedResponseMatrix {
    /// Builds a channel from its diagonal entries.
    ///
    /// Requires both entries in `[0, 1]` and `p00 + p11 != 1` (otherwise the
    /// feedback distribution does not depend on the reward).
    pub fn new(p00: f64, p11: f64) -> Result<Self, CorruptionError> {
        for (name, value) in [("p00", p00), ("p11", p11)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(CorruptionError::InvalidProbability { name, value });
            }
        }
        if p00 + p11 == 1.0 {
            return Err(CorruptionError::NonIdentifiable { p00, p11 });
        }
        Ok(Self {
            p00,
            p11,
            comp00: 1.0 - p00,
            comp11: 1.0 - p11,
        })
    }

    /// The channel that maximizes `p00 + p11` among all channels with privacy
    /// level `epsilon`: the symmetric design `p00 = p11 = e^eps / (1 + e^eps)`.
    pub fn staircase(epsilon: f64) -> Result<Self, CorruptionError> {
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(CorruptionError::InvalidEpsilon { epsilon });
        }
        // 1/(1+e^-eps) and 1/(1+e^eps) are each computed directly so neither
        // suffers cancellation for large eps.
        let p = 1.0 / (1.0 + (-epsilon).exp());
        let q = 1.0 / (1.0 + epsilon.exp());
        Ok(Self {
            p00: p,
            p11: p,
            comp00: q,
            comp11: q,
        })
    }

    /// The channel that reports every reward faithfully.
    #[must_use]
    pub fn identity() -> Self {
        Self {
            p00: 1.0,
            p11: 1.0,
            comp00: 0.0,
            comp11: 0.0,
        }
    }

    /// Probability that a 0 reward is reported as 0.
    #[must_use]
    pub fn p00(&self) -> f64 {
        self.p00
    }

    /// Probability that a 1 reward is reported as 1.
    #[must_use]
    pub fn p11(&self) -> f64 {
        self.p11
    }

    /// Slope `p00 + p11 - 1` of the induced affine mean map; nonzero by
    /// construction, negative for mean-reversing channels.
    #[must_use]
    pub fn slope(&self) -> f64 {
        self.p00 + self.p11 - 1.0
    }

    /// Feedback mean induced by reward mean `x`: `(1 - p00) + slope * x`.
    #[must_use]
    pub fn feedback_mean(&self, x: f64) -> f64 {
        self.comp00 + self.slope() * x
    }

    /// Passes one reward bit through the channel, consuming exactly one
    /// uniform draw from `rng`.
    pub fn corrupt<R: Rng + ?Sized>(&self, reward: bool, rng: &mut R) -> bool {
        let u: f64 = rng.gen();
        if reward {
            u < self.p11
        } else {
            // report 1 with probability 1 - p00
            u >= self.p00
        }
    }

    /// Smallest `eps` such that the channel is `eps`-locally-private: the log
    /// of the largest likelihood ratio between the two conditional feedback
    /// distributions, over both outputs and both orderings of the inputs.
    ///
    /// Deterministic outputs (`p00 = 1`, `p11 = 1`, or a zero diagonal entry)
    /// reveal one input with certainty, giving `+inf`.
    #[must_use]
    pub fn ldp_epsilon(&self) -> f64 {
        let ratios = [
            self.p00 / self.comp11,
            self.comp11 / self.p00,
            self.p11 / self.comp00,
            self.comp00 / self.p11,
        ];
        // 0/0 cannot occur: it would force p00 + p11 = 1, which is rejected
        // at construction.
        let max = ratios.iter().fold(0.0f64, |acc, &r| acc.max(r));
        max.ln()
    }

    /// Whether the channel satisfies `eps`-local privacy, with a 1e-12
    /// tolerance on the comparison.
    #[must_use]
    pub fn satisfies_ldp(&self, epsilon: f64) -> bool {
        self.ldp_epsilon() <= epsilon + 1e-12
    }
}

#[derive(Clone)]
enum SchemeKind {
    Affine {
        matrix: RandomizedResponseMatrix,
        intercept: f64,
        slope: f64,
    },
    Custom {
        forward: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

/// A strictly monotone continuous corruption map `[0, 1] -> [0, 1]` together
/// with its inverse, as known to both the environment and the learner.
#[derive(Clone)]
pub struct CorruptionScheme {
    kind: SchemeKind,
    /// Image endpoints with `lo <= hi`.
    lo: f64,
    hi: f64,
    increasing: bool,
}

impl fmt::Debug for CorruptionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("CorruptionScheme");
        match &self.kind {
            SchemeKind::Affine { matrix, .. } => s.field("matrix", matrix),
            SchemeKind::Custom { .. } => s.field("custom", &"<fn>"),
        };
        s.field("image", &(self.lo, self.hi))
            .field("increasing", &self.increasing)
            .finish()
    }
}

impl CorruptionScheme {
    /// The affine mean map induced by a randomized-response channel.
    #[must_use]
    pub fn from_matrix(matrix: RandomizedResponseMatrix) -> Self {
        let intercept = matrix.comp00;
        let slope = matrix.slope();
        let (g0, g1) = (intercept, intercept + slope);
        let increasing = slope > 0.0;
        let (lo, hi) = if increasing { (g0, g1) } else { (g1, g0) };
        Self {
            kind: SchemeKind::Affine {
                matrix,
                intercept,
                slope,
            },
            lo,
            hi,
            increasing,
        }
    }

    /// The identity map (uncorrupted feedback).
    #[must_use]
    pub fn identity() -> Self {
        Self::from_matrix(RandomizedResponseMatrix::identity())
    }

    /// Wraps an arbitrary strictly monotone continuous map.
    ///
    /// Monotonicity and range are certified on a 1,025-point grid; the
    /// inverse is computed by bisection at 1e-12. Maps that are flat between
    /// adjacent grid points, change direction, or leave `[0, 1]` are rejected.
    pub fn custom<F>(forward: F) -> Result<Self, CorruptionError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let n = MONOTONE_GRID;
        let mut prev = f64::NAN;
        let mut increasing = true;
        let mut decreasing = true;
        for i in 0..n {
            let x = i as f64 / (n - 1) as f64;
            let v = forward(x);
            if !(0.0..=1.0).contains(&v) {
                return Err(CorruptionError::OutOfRange { x, value: v });
            }
            if i > 0 {
                if v <= prev {
                    increasing = false;
                }
                if v >= prev {
                    decreasing = false;
                }
            }
            prev = v;
        }
        if !(increasing || decreasing) {
            return Err(CorruptionError::NotStrictlyMonotone);
        }
        let g0 = forward(0.0);
        let g1 = forward(1.0);
        let (lo, hi) = if increasing { (g0, g1) } else { (g1, g0) };
        Ok(Self {
            kind: SchemeKind::Custom {
                forward: Arc::new(forward),
            },
            lo,
            hi,
            increasing,
        })
    }

    /// Whether the map is strictly increasing (else strictly decreasing).
    #[must_use]
    pub fn is_increasing(&self) -> bool {
        self.increasing
    }

    /// Image endpoints `(lo, hi)` with `lo <= hi`.
    #[must_use]
    pub fn image(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// The underlying channel for matrix-backed schemes.
    #[must_use]
    pub fn matrix(&self) -> Option<&RandomizedResponseMatrix> {
        match &self.kind {
            SchemeKind::Affine { matrix, .. } => Some(matrix),
            SchemeKind::Custom { .. } => None,
        }
    }

    /// Applies the forward map to a reward mean in `[0, 1]`.
    pub fn apply(&self, x: f64) -> Result<f64, CorruptionError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(CorruptionError::OutOfDomain { value: x });
        }
        Ok(self.apply_unchecked(x))
    }

    fn apply_unchecked(&self, x: f64) -> f64 {
        match &self.kind {
            SchemeKind::Affine {
                intercept, slope, ..
            } => intercept + slope * x,
            SchemeKind::Custom { forward } => forward(x),
        }
    }

    /// Inverts the map: returns the `x` in `[0, 1]` with `apply(x) = y`.
    ///
    /// `y` must lie in the image (up to 1e-9 slack, absorbed by clamping).
    /// Affine schemes invert in closed form; custom schemes bisect to 1e-12.
    /// For custom maps the achievable accuracy degrades where the derivative
    /// is tiny relative to the spacing of floats around `y`.
    pub fn invert(&self, y: f64) -> Result<f64, CorruptionError> {
        if !(self.lo - IMAGE_SLACK..=self.hi + IMAGE_SLACK).contains(&y) {
            return Err(CorruptionError::OutOfImage {
                value: y,
                lo: self.lo,
                hi: self.hi,
            });
        }
        let y = y.clamp(self.lo, self.hi);
        match &self.kind {
            SchemeKind::Affine {
                intercept, slope, ..
            } => Ok(((y - intercept) / slope).clamp(0.0, 1.0)),
            SchemeKind::Custom { forward } => {
                let mut lo_x = 0.0f64;
                let mut hi_x = 1.0f64;
                // invariant: the preimage of y lies in [lo_x, hi_x]
                while hi_x - lo_x > INVERT_TOL {
                    let mid = 0.5 * (lo_x + hi_x);
                    let v = forward(mid);
                    let go_right = if self.increasing { v < y } else { v > y };
                    if go_right {
                        lo_x = mid;
                    } else {
                        hi_x = mid;
                    }
                }
                Ok(0.5 * (lo_x + hi_x))
            }
        }
    }
}
