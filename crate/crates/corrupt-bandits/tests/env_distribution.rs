//! Monte-Carlo checks that sampled rewards and feedback match the configured
//! marginals, plus structural properties of the random instance generator.

use corrupt_bandits::env::{generate_instance, EnvironmentError, FeedbackMode, SegmentSpec};
use corrupt_bandits::{CorruptionScheme, EnvironmentSpec, RandomizedResponseMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SAMPLES: u64 = 100_000;
// Frequencies over 1e5 draws have a standard error below 0.0016, so a 0.01
// tolerance sits beyond six sigma.
const TOL: f64 = 0.01;

fn two_arm_env(mode: FeedbackMode) -> EnvironmentSpec {
    let staircase = RandomizedResponseMatrix::staircase(1.0).unwrap();
    EnvironmentSpec::new(
        1_000,
        vec![SegmentSpec {
            start: 1,
            means: vec![0.3, 0.8],
        }],
        vec![
            CorruptionScheme::from_matrix(staircase),
            CorruptionScheme::from_matrix(staircase),
        ],
        mode,
    )
    .unwrap()
}

fn empirical_means(env: &EnvironmentSpec, arm: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut rewards, mut feedbacks) = (0u64, 0u64);
    for _ in 0..SAMPLES {
        let (reward, feedback) = env.sample_step(arm, 1, &mut rng).unwrap();
        rewards += u64::from(reward);
        feedbacks += u64::from(feedback);
    }
    (
        rewards as f64 / SAMPLES as f64,
        feedbacks as f64 / SAMPLES as f64,
    )
}

#[test]
fn channel_marginals_match_configured_means() {
    let env = two_arm_env(FeedbackMode::Channel);
    for (arm, mu) in [(0usize, 0.3f64), (1, 0.8)] {
        let lambda = env.schemes()[arm].apply(mu).unwrap();
        let (reward_freq, feedback_freq) = empirical_means(&env, arm, 42 + arm as u64);
        assert!(
            (reward_freq - mu).abs() < TOL,
            "arm {arm}: reward frequency {reward_freq} vs mean {mu}"
        );
        assert!(
            (feedback_freq - lambda).abs() < TOL,
            "arm {arm}: feedback frequency {feedback_freq} vs corrupted mean {lambda}"
        );
    }
}

/// Parametric mode draws the feedback from an independent Bernoulli with the
/// corrupted mean; its marginal must agree with channel mode even though the
/// joint distribution differs.
#[test]
fn parametric_feedback_marginal_matches_channel() {
    let channel = two_arm_env(FeedbackMode::Channel);
    let parametric = two_arm_env(FeedbackMode::Parametric);
    for arm in 0..2 {
        let (_, channel_freq) = empirical_means(&channel, arm, 7);
        let (_, parametric_freq) = empirical_means(&parametric, arm, 8);
        assert!(
            (channel_freq - parametric_freq).abs() < 1.5 * TOL,
            "arm {arm}: channel {channel_freq} vs parametric {parametric_freq}"
        );
    }
}

/// Both feedback modes must consume the same fixed amount of randomness per
/// step — two 64-bit draws — so seeds stay aligned across modes and arms.
#[test]
fn sample_step_consumes_fixed_randomness() {
    for mode in [FeedbackMode::Channel, FeedbackMode::Parametric] {
        let env = two_arm_env(mode);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut previous = rng.get_word_pos();
        for arm in [0usize, 1, 0] {
            env.sample_step(arm, 5, &mut rng).unwrap();
            let pos = rng.get_word_pos();
            assert_eq!(
                pos - previous,
                4,
                "expected two u64 draws (four 32-bit words) per step"
            );
            previous = pos;
        }
    }
}

#[test]
fn means_switch_exactly_at_breakpoints() {
    let env = EnvironmentSpec::new(
        100,
        vec![
            SegmentSpec {
                start: 1,
                means: vec![0.9, 0.1],
            },
            SegmentSpec {
                start: 41,
                means: vec![0.2, 0.6],
            },
        ],
        vec![CorruptionScheme::identity(), CorruptionScheme::identity()],
        FeedbackMode::Channel,
    )
    .unwrap();
    assert_eq!(env.means_at(1).unwrap(), &[0.9, 0.1]);
    assert_eq!(env.means_at(40).unwrap(), &[0.9, 0.1]);
    assert_eq!(env.means_at(41).unwrap(), &[0.2, 0.6]);
    assert_eq!(env.means_at(100).unwrap(), &[0.2, 0.6]);
    assert!(env.means_at(0).is_err());
    assert!(env.means_at(101).is_err());
    assert_eq!(env.oracle_best(1).unwrap(), (0, 0.9));
    assert_eq!(env.oracle_best(41).unwrap(), (1, 0.6));
}

#[test]
fn oracle_breaks_ties_toward_lowest_arm() {
    let env = EnvironmentSpec::new(
        10,
        vec![SegmentSpec {
            start: 1,
            means: vec![0.4, 0.7, 0.7],
        }],
        vec![CorruptionScheme::identity(); 3],
        FeedbackMode::Channel,
    )
    .unwrap();
    assert_eq!(env.oracle_best(3).unwrap(), (1, 0.7));
}

#[test]
fn generator_produces_valid_spaced_instances() {
    let horizon = 10_000;
    let changes = 4;
    let min_gap = 0.1;
    let env = generate_instance(5, horizon, changes, min_gap, 2024).unwrap();
    assert_eq!(env.arms(), 5);
    assert_eq!(env.horizon(), horizon);
    assert_eq!(env.num_segments(), changes as usize);

    let spacing = horizon.div_ceil(2 * changes);
    let mut previous_start = 0;
    let mut previous_best = None;
    for segment in env.segments() {
        if previous_start == 0 {
            assert_eq!(segment.start, 1, "first segment must start at t=1");
        } else {
            assert!(
                segment.start >= previous_start + spacing,
                "segments closer than the guaranteed spacing"
            );
        }
        assert!(segment.start <= horizon);
        previous_start = segment.start;

        let best = corrupt_bandits::policy::argmax(&segment.means);
        let second = segment
            .means
            .iter()
            .enumerate()
            .filter(|&(a, _)| a != best)
            .map(|(_, &m)| m)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            segment.means[best] - second >= min_gap,
            "best-vs-second gap below the requested minimum"
        );
        assert_ne!(previous_best, Some(best), "best arm failed to move");
        previous_best = Some(best);
    }
}

#[test]
fn generator_is_deterministic_in_seed() {
    let a = generate_instance(3, 5_000, 3, 0.2, 99).unwrap();
    let b = generate_instance(3, 5_000, 3, 0.2, 99).unwrap();
    assert_eq!(a.segments(), b.segments());
    let c = generate_instance(3, 5_000, 3, 0.2, 100).unwrap();
    assert_ne!(a.segments(), c.segments());
}

#[test]
fn generator_rejects_degenerate_requests() {
    assert!(matches!(
        generate_instance(1, 100, 2, 0.1, 0),
        Err(EnvironmentError::TooFewArms { .. })
    ));
    assert!(matches!(
        generate_instance(3, 100, 0, 0.1, 0),
        Err(EnvironmentError::ZeroChanges { .. })
    ));
    assert!(matches!(
        generate_instance(3, 100, 2, 1.0, 0),
        Err(EnvironmentError::InvalidGap { .. })
    ));
    // More change points than the horizon can space out.
    assert!(matches!(
        generate_instance(3, 10, 6, 0.1, 0),
        Err(EnvironmentError::InfeasibleGeneration { .. })
    ));
}
