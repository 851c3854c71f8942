//! Sliding-window KL-UCB policies for stochastic bandits with corrupt feedback.
//!
//! The learner never observes rewards directly: each arm passes its Bernoulli
//! reward through a known corruption scheme (e.g. a randomized-response channel
//! used for local differential privacy) and only the corrupted feedback comes
//! back. Reward means may also shift at unknown breakpoints. The policies here
//! invert the corruption and window the statistics so the index concentrates on
//! the current segment.
//!
//! Crate layout:
//! - [`kl`]: Bernoulli KL divergence, its derivative, and the confidence-bound
//!   solvers used by every index computation.
//! - [`corruption`]: randomized-response matrices, local-privacy levels, and
//!   general strictly monotone corruption schemes.
//! - [`window`]: sliding-window pull statistics.
//! - [`policy`]: the windowed index policy, its stationary variant, oracle and
//!   uniform baselines, and a horizon-doubling wrapper.
//! - [`env`]: piecewise-stationary corrupt-bandit environments and a random
//!   instance generator.
//! - [`config`]: serializable experiment configuration and validation.
//! - [`run`]: the simulation harness (seed derivation, replication, recording,
//!   aggregation).
//! - [`bound`]: the closed-form expected-regret bound calculator.
//! - [`output`]: CSV/JSON result emission.

pub mod bound;
pub mod config;
pub mod corruption;
pub mod env;
pub mod kl;
pub mod output;
pub mod policy;
pub mod run;
pub mod seed;
pub mod window;

pub use bound::{regret_bound, BoundReport};
pub use config::ExperimentConfig;
pub use corruption::{CorruptionScheme, RandomizedResponseMatrix};
pub use env::{EnvironmentSpec, FeedbackMode, SegmentSpec};
pub use kl::{bern_kl, bern_kl_deriv, exploration_fn, kl_lower_bound, kl_upper_bound, KlBudget};
pub use policy::{default_window, DoublingPolicy, OraclePolicy, Policy, SwKlUcbCf, UniformPolicy};
pub use run::{run_experiment, ExperimentResults};
pub use window::WindowStats;
