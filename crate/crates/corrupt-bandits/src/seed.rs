//! Deterministic seed derivation for replicated experiments.
//!
//! Every (policy, replication) cell of an experiment gets its own seed,
//! derived from the experiment's base seed by a fixed 64-bit mixing chain.
//! Each cell then splits into two decorrelated streams: one drives the
//! environment's reward and corruption draws, the other any randomness inside
//! the policy. No global RNG exists, so parallel cells never contend and the
//! outputs do not depend on scheduling.

/// SplitMix64 finalizer: a bijective 64-bit mix with strong avalanche.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one (policy, replication) cell, derived from the experiment base
/// seed by absorbing the two indices through successive mixes.
pub fn run_seed(base_seed: u64, policy_index: u64, replication: u64) -> u64 {
    let mut state = splitmix64(base_seed);
    state = splitmix64(state ^ policy_index);
    splitmix64(state ^ replication)
}

/// Seed of the environment stream (reward and corruption draws) for a run.
pub fn env_stream_seed(run_seed: u64) -> u64 {
    splitmix64(run_seed ^ 0x454E_5649_524F_4E01)
}

/// Seed of the policy stream (e.g. the uniform baseline's choices) for a run.
pub fn policy_stream_seed(run_seed: u64) -> u64 {
    splitmix64(run_seed ^ 0x504F_4C49_4359_5F02)
}
