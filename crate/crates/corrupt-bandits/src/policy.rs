//! Bandit policies: the sliding-window KL-UCB policy for corrupt feedback,
//! its stationary variant, oracle and uniform baselines, and a doubling
//! wrapper for unknown horizons.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corruption::CorruptionScheme;
use crate::env::EnvironmentSpec;
use crate::kl::{exploration_fn, kl_lower_bound, kl_upper_bound, KlBudget, KlError};
use crate::window::WindowStats;

/// First guessed horizon of [`DoublingPolicy`]; each exhausted guess doubles.
pub const DOUBLING_INITIAL_HORIZON: u64 = 128;

/// Errors from policy construction.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("policy needs at least one arm")]
    NoArms,
    #[error("window must be at least 1")]
    ZeroWindow,
}

/// A sequential arm-selection rule.
///
/// The driving loop alternates strictly: call [`select_arm`], pull that arm,
/// then call [`update`] with the pulled arm and the observed feedback (a
/// value in `[0, 1]`). Policies see only feedback, never rewards.
///
/// [`select_arm`]: Policy::select_arm
/// [`update`]: Policy::update
pub trait Policy {
    /// Chooses the arm to pull at the next time step.
    fn select_arm(&mut self) -> usize;

    /// Records the feedback observed for the arm just pulled.
    fn update(&mut self, arm: usize, feedback: f64);
}

/// Index of the largest value, ties broken by the lowest index. `+inf`
/// entries beat every finite value.
pub fn argmax(values: &[f64]) -> usize {
    assert!(!values.is_empty(), "argmax of an empty slice");
    let mut best = 0;
    for (i, &value) in values.iter().enumerate().skip(1) {
        if value > values[best] {
            best = i;
        }
    }
    best
}

/// Window length balancing reaction speed against estimation noise for a
/// horizon of `horizon` steps and `changes` stationary segments:
/// `max(1, round(sqrt(4 e horizon / (changes + 4))))`, rounding half-up.
pub fn default_window(horizon: u64, changes: u64) -> u64 {
    let raw = (4.0 * std::f64::consts::E * horizon as f64 / (changes as f64 + 4.0)).sqrt();
    (raw.round() as u64).max(1)
}

/// Optimistic estimate of an arm's *reward* mean from feedback observed
/// through `scheme`: the largest `q` in `[0, 1]` such that
/// `n * d(lambda_hat, g(q)) <= budget`, where `d` is the Bernoulli KL
/// divergence and `g` the scheme's mean map.
///
/// Computed by inverting a KL confidence bound on the feedback mean: the
/// upper bound when `g` is increasing, the lower bound when it is decreasing
/// — clamped into the image of `g` so the result is always a valid reward
/// mean (0 or 1 when the confidence range exits the image).
///
/// Errors if `lambda_hat` is outside `[0, 1]` or `n` is zero.
pub fn corrupted_index(
    scheme: &CorruptionScheme,
    lambda_hat: f64,
    n: u64,
    budget: KlBudget,
) -> Result<f64, KlError> {
    let bound = if scheme.is_increasing() {
        kl_upper_bound(lambda_hat, n, budget)?
    } else {
        kl_lower_bound(lambda_hat, n, budget)?
    };
    let (lo, hi) = scheme.image();
    let clamped = bound.clamp(lo, hi);
    Ok(scheme
        .invert(clamped)
        .expect("bound clamped into the scheme image"))
}

/// Sliding-window KL-UCB policy for corrupt feedback.
///
/// Pulls every arm once in order, then repeatedly pulls the arm with the
/// highest [`corrupted_index`] computed from feedback statistics over the
/// trailing `window` steps, with exploration budget `f(min(t, window))`.
/// Arms with no observation left in the window get a `+inf` index, which
/// forces a re-pull.
#[derive(Debug, Clone)]
pub struct SwKlUcbCf {
    schemes: Vec<CorruptionScheme>,
    window: u64,
    stats: WindowStats,
    t: u64,
}

impl SwKlUcbCf {
    /// Creates the policy with one corruption scheme per arm and feedback
    /// statistics restricted to the trailing `window` steps.
    pub fn new(schemes: Vec<CorruptionScheme>, window: u64) -> Result<Self, PolicyError> {
        if schemes.is_empty() {
            return Err(PolicyError::NoArms);
        }
        if window == 0 {
            return Err(PolicyError::ZeroWindow);
        }
        let stats = WindowStats::new(schemes.len(), window);
        Ok(SwKlUcbCf {
            schemes,
            window,
            stats,
            t: 0,
        })
    }

    /// The stationary variant: a window spanning the whole horizon, so
    /// nothing is ever evicted and the budget grows as `f(t)`.
    pub fn stationary(schemes: Vec<CorruptionScheme>, horizon: u64) -> Result<Self, PolicyError> {
        if horizon == 0 {
            return Err(PolicyError::ZeroWindow);
        }
        SwKlUcbCf::new(schemes, horizon)
    }

    /// Number of arms.
    pub fn arms(&self) -> usize {
        self.schemes.len()
    }

    /// Window length.
    pub fn window(&self) -> u64 {
        self.window
    }

    /// Completed time steps (number of updates so far).
    pub fn t(&self) -> u64 {
        self.t
    }

    /// Windowed feedback statistics (counts and means per arm).
    pub fn stats(&self) -> &WindowStats {
        &self.stats
    }

    /// The arm's current index: `+inf` if the arm has no observation in the
    /// window, otherwise [`corrupted_index`] at budget
    /// `f(min(t, window))`.
    pub fn index(&self, arm: usize) -> f64 {
        let n = self.stats.count(arm);
        if n == 0 {
            return f64::INFINITY;
        }
        let lambda_hat = self
            .stats
            .mean(arm)
            .expect("nonzero count implies nonempty window");
        let budget_arg = self.t.min(self.window) as f64;
        let budget = exploration_fn(budget_arg)
            .expect("at least one update has happened, so the argument is >= 1");
        let budget = KlBudget::new(budget).expect("exploration budget is finite and nonnegative");
        corrupted_index(&self.schemes[arm], lambda_hat, n, budget)
            .expect("window means lie in [0, 1] and the count is nonzero")
    }
}

impl Policy for SwKlUcbCf {
    fn select_arm(&mut self) -> usize {
        let arms = self.arms() as u64;
        if self.t < arms {
            return self.t as usize;
        }
        let indices: Vec<f64> = (0..self.arms()).map(|arm| self.index(arm)).collect();
        argmax(&indices)
    }

    fn update(&mut self, arm: usize, feedback: f64) {
        self.stats.push(arm, feedback);
        self.t += 1;
    }
}

/// Omniscient baseline: pulls the arm with the highest true reward mean at
/// each step. Exists to anchor regret at zero; real policies cannot read the
/// environment.
#[derive(Debug, Clone)]
pub struct OraclePolicy {
    env: Arc<EnvironmentSpec>,
    t: u64,
}

impl OraclePolicy {
    /// Creates the oracle over a shared environment description.
    pub fn new(env: Arc<EnvironmentSpec>) -> Self {
        OraclePolicy { env, t: 0 }
    }
}

impl Policy for OraclePolicy {
    fn select_arm(&mut self) -> usize {
        let step = (self.t + 1).min(self.env.horizon());
        self.env
            .oracle_best(step)
            .expect("step clamped into 1..=horizon")
            .0
    }

    fn update(&mut self, _arm: usize, _feedback: f64) {
        self.t += 1;
    }
}

/// Baseline that pulls arms uniformly at random from its own seeded stream.
#[derive(Debug, Clone)]
pub struct UniformPolicy {
    arms: usize,
    rng: ChaCha8Rng,
}

impl UniformPolicy {
    /// Creates the policy over `arms` arms with a deterministic stream.
    pub fn new(arms: usize, seed: u64) -> Result<Self, PolicyError> {
        if arms == 0 {
            return Err(PolicyError::NoArms);
        }
        Ok(UniformPolicy {
            arms,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

impl Policy for UniformPolicy {
    fn select_arm(&mut self) -> usize {
        self.rng.gen_range(0..self.arms)
    }

    fn update(&mut self, _arm: usize, _feedback: f64) {}
}

/// Builds a fresh policy for a doubling epoch, given the epoch's guessed
/// horizon and the epoch number (0-based).
pub type EpochPolicyFactory = Box<dyn Fn(u64, u32) -> Box<dyn Policy>>;

/// Horizon-doubling wrapper for running a horizon-dependent policy when the
/// true horizon is unknown.
///
/// Guesses a horizon of [`DOUBLING_INITIAL_HORIZON`] steps, runs a freshly
/// built inner policy until the guess is exhausted, then doubles the guess
/// and rebuilds the inner policy from scratch (all statistics dropped).
pub struct DoublingPolicy {
    factory: EpochPolicyFactory,
    inner: Box<dyn Policy>,
    epoch: u32,
    epoch_horizon: u64,
    steps_in_epoch: u64,
}

impl DoublingPolicy {
    /// Creates the wrapper and builds the epoch-0 inner policy.
    pub fn new(factory: impl Fn(u64, u32) -> Box<dyn Policy> + 'static) -> Self {
        let factory: EpochPolicyFactory = Box::new(factory);
        let inner = factory(DOUBLING_INITIAL_HORIZON, 0);
        DoublingPolicy {
            factory,
            inner,
            epoch: 0,
            epoch_horizon: DOUBLING_INITIAL_HORIZON,
            steps_in_epoch: 0,
        }
    }

    /// Current epoch number (0-based).
    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    /// Guessed horizon of the current epoch.
    pub fn epoch_horizon(&self) -> u64 {
        self.epoch_horizon
    }
}

impl fmt::Debug for DoublingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DoublingPolicy")
            .field("epoch", &self.epoch)
            .field("epoch_horizon", &self.epoch_horizon)
            .field("steps_in_epoch", &self.steps_in_epoch)
            .finish_non_exhaustive()
    }
}

impl Policy for DoublingPolicy {
    fn select_arm(&mut self) -> usize {
        if self.steps_in_epoch == self.epoch_horizon {
            self.epoch += 1;
            self.epoch_horizon *= 2;
            self.steps_in_epoch = 0;
            self.inner = (self.factory)(self.epoch_horizon, self.epoch);
        }
        self.inner.select_arm()
    }

    fn update(&mut self, arm: usize, feedback: f64) {
        self.inner.update(arm, feedback);
        self.steps_in_epoch += 1;
    }
}
