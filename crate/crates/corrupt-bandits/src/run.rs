//! Experiment execution: seeded replications, the interaction loop, regret
//! accounting, and aggregation across seeds.
//!
//! Every (policy, replication) cell runs independently on its own derived
//! seed, so cells can be scheduled on parallel workers; results come back in
//! a canonical order that does not depend on scheduling, and identical
//! configurations produce identical results down to the last bit.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{
    policy_labels, ConfigError, ExperimentConfig, PolicyConfig, RecordGranularity, WindowChoice,
    WindowKeyword,
};
use crate::env::EnvironmentSpec;
use crate::policy::{
    argmax, default_window, DoublingPolicy, OraclePolicy, Policy, SwKlUcbCf, UniformPolicy,
};
use crate::seed::{env_stream_seed, policy_stream_seed, run_seed};

/// Number of recording points of the log-spaced granularity (before
/// deduplication at small horizons).
pub const LOG_SPACED_POINTS: usize = 512;

/// Environment variable consulted for the worker count when no explicit jobs
/// value is given.
pub const JOBS_ENV_VAR: &str = "CORRUPT_BANDITS_JOBS";

/// One recorded point of a single run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunPoint {
    /// Time step (1-based).
    pub t: u64,
    /// Cumulative pseudo-regret up to and including `t`: the summed gaps
    /// between the best and the pulled arm's true means.
    pub regret: f64,
    /// Cumulative realized reward up to and including `t`, kept for audit;
    /// regret accounting never uses it.
    pub reward_sum: f64,
}

/// The recorded curve of one (policy, replication) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Output label of the policy (its name, disambiguated if repeated).
    pub policy: String,
    /// Index of the policy in the configuration.
    pub policy_index: usize,
    /// Replication index, 0-based.
    pub replication: u64,
    /// The derived seed this run used.
    pub seed: u64,
    /// Recorded points, ascending in `t`.
    pub points: Vec<RunPoint>,
}

/// Mean and standard deviation of regret across replications at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatePoint {
    /// Time step (1-based).
    pub t: u64,
    /// Mean regret across replications.
    pub mean: f64,
    /// Population standard deviation across replications (0 for one seed).
    pub std: f64,
}

/// Aggregated regret curve of one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCurve {
    /// Output label of the policy.
    pub policy: String,
    /// Aggregated points, ascending in `t`.
    pub points: Vec<AggregatePoint>,
}

/// Everything an experiment produced: the effective configuration, the built
/// environment, raw per-run records, and per-policy aggregates.
#[derive(Debug, Clone)]
pub struct ExperimentResults {
    /// The configuration the results were produced from.
    pub config: ExperimentConfig,
    /// The concrete environment that was simulated.
    pub environment: Arc<EnvironmentSpec>,
    /// Per-run records: policies in configuration order, replications
    /// ascending within each policy.
    pub records: Vec<RunRecord>,
    /// Per-policy mean/std curves, in configuration order.
    pub aggregates: Vec<AggregateCurve>,
}

/// The time steps recorded for a horizon under a granularity: every step, or
/// up to [`LOG_SPACED_POINTS`] log-spaced unique steps always containing 1
/// and the horizon. Sorted, duplicate-free, within `1..=horizon`.
pub fn recording_steps(horizon: u64, granularity: RecordGranularity) -> Vec<u64> {
    match granularity {
        RecordGranularity::EveryStep => (1..=horizon).collect(),
        RecordGranularity::LogSpaced => {
            let mut steps: Vec<u64> = (0..LOG_SPACED_POINTS)
                .map(|k| {
                    let frac = k as f64 / (LOG_SPACED_POINTS - 1) as f64;
                    (horizon as f64).powf(frac).round() as u64
                })
                .map(|t| t.clamp(1, horizon))
                .collect();
            steps.sort_unstable();
            steps.dedup();
            steps
        }
    }
}

/// Builds the runtime policy for one configured entry. `policy_seed` feeds
/// policies with internal randomness (the uniform baseline); deterministic
/// policies ignore it.
pub fn build_policy(
    config: &PolicyConfig,
    env: &Arc<EnvironmentSpec>,
    policy_seed: u64,
) -> Box<dyn Policy> {
    let changes = env.num_segments() as u64;
    match config {
        PolicyConfig::SwKlucbCf { window } => {
            let window = match window {
                WindowChoice::Fixed(w) => *w,
                WindowChoice::Named(WindowKeyword::Auto) => default_window(env.horizon(), changes),
            };
            Box::new(
                SwKlUcbCf::new(env.schemes().to_vec(), window)
                    .expect("validated: at least one arm and a positive window"),
            )
        }
        PolicyConfig::KlucbCf => Box::new(
            SwKlUcbCf::stationary(env.schemes().to_vec(), env.horizon())
                .expect("validated: at least one arm and a positive horizon"),
        ),
        PolicyConfig::Oracle => Box::new(OraclePolicy::new(Arc::clone(env))),
        PolicyConfig::Uniform => Box::new(
            UniformPolicy::new(env.arms(), policy_seed).expect("validated: at least one arm"),
        ),
        PolicyConfig::SwKlucbCfDoubling => {
            let schemes = env.schemes().to_vec();
            Box::new(DoublingPolicy::new(move |epoch_horizon, _epoch| {
                Box::new(
                    SwKlUcbCf::new(schemes.clone(), default_window(epoch_horizon, changes))
                        .expect("doubling windows are at least 1"),
                )
            }))
        }
    }
}

/// Drives one full interaction loop: for each step the policy selects an
/// arm, the environment draws a hidden reward and the observed feedback, the
/// policy is updated on the feedback alone, and pseudo-regret accrues from
/// the true means. Returns the curve at `record_steps` (which must be
/// sorted, duplicate-free, and within `1..=horizon`).
pub fn simulate_run(
    env: &EnvironmentSpec,
    policy: &mut dyn Policy,
    env_seed: u64,
    record_steps: &[u64],
) -> Vec<RunPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(env_seed);
    let mut points = Vec::with_capacity(record_steps.len());
    let mut next_record = record_steps.iter().copied().peekable();
    let mut regret = 0.0;
    let mut reward_sum = 0.0;
    for t in 1..=env.horizon() {
        let arm = policy.select_arm();
        let (reward, feedback) = env
            .sample_step(arm, t, &mut rng)
            .expect("policy selected a valid arm for a valid step");
        policy.update(arm, f64::from(u8::from(feedback)));
        let means = env.means_at(t).expect("step within horizon");
        regret += means[argmax(means)] - means[arm];
        reward_sum += f64::from(u8::from(reward));
        if next_record.peek() == Some(&t) {
            points.push(RunPoint {
                t,
                regret,
                reward_sum,
            });
            next_record.next();
        }
    }
    points
}

/// Pointwise mean/std aggregation over each policy's replications. `records`
/// must be in canonical order (replications contiguous per policy) and all
/// runs must share the same recording grid.
pub fn aggregate(
    records: &[RunRecord],
    policies: usize,
    replications: u64,
    labels: &[String],
) -> Vec<AggregateCurve> {
    let group_size = replications as usize;
    (0..policies)
        .map(|policy_index| {
            let group = &records[policy_index * group_size..(policy_index + 1) * group_size];
            let points = (0..group[0].points.len())
                .map(|i| {
                    let t = group[0].points[i].t;
                    let mean =
                        group.iter().map(|r| r.points[i].regret).sum::<f64>() / group_size as f64;
                    let variance = group
                        .iter()
                        .map(|r| (r.points[i].regret - mean).powi(2))
                        .sum::<f64>()
                        / group_size as f64;
                    AggregatePoint {
                        t,
                        mean,
                        std: variance.sqrt(),
                    }
                })
                .collect();
            AggregateCurve {
                policy: labels[policy_index].clone(),
                points,
            }
        })
        .collect()
}

/// Resolves the worker count: an explicit value wins, otherwise the
/// [`JOBS_ENV_VAR`] environment variable is consulted, otherwise `None`
/// (letting the scheduler pick its default).
pub fn resolve_jobs(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var(JOBS_ENV_VAR)
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

/// Runs every (policy, replication) cell of a validated configuration and
/// aggregates the curves.
///
/// `jobs` caps the number of parallel workers; `None` or `Some(0)` uses the
/// scheduler default. The worker count never affects the results, only how
/// fast they arrive. The only error source is configuration validation,
/// which runs first and reports all problems with field paths.
pub fn run_experiment(
    config: &ExperimentConfig,
    jobs: Option<usize>,
) -> Result<ExperimentResults, ConfigError> {
    config.validate()?;
    let env = Arc::new(config.build_environment()?);
    let record_steps = recording_steps(env.horizon(), config.record_granularity);
    let labels = policy_labels(&config.policies);

    let cells: Vec<(usize, u64)> = (0..config.policies.len())
        .flat_map(|p| (0..config.replications).map(move |r| (p, r)))
        .collect();
    let simulate_cell = |&(policy_index, replication): &(usize, u64)| -> RunRecord {
        let seed = run_seed(config.base_seed, policy_index as u64, replication);
        let mut policy = build_policy(
            &config.policies[policy_index],
            &env,
            policy_stream_seed(seed),
        );
        let points = simulate_run(&env, policy.as_mut(), env_stream_seed(seed), &record_steps);
        RunRecord {
            policy: labels[policy_index].clone(),
            policy_index,
            replication,
            seed,
            points,
        }
    };
    let records: Vec<RunRecord> = match jobs {
        Some(workers) if workers > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("worker pool construction")
            .install(|| cells.par_iter().map(simulate_cell).collect()),
        _ => cells.par_iter().map(simulate_cell).collect(),
    };

    let aggregates = aggregate(
        &records,
        config.policies.len(),
        config.replications,
        &labels,
    );
    Ok(ExperimentResults {
        config: config.clone(),
        environment: env,
        records,
        aggregates,
    })
}
