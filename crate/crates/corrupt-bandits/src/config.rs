//! Experiment configuration: the JSON schema, validation with field paths,
//! and assembly of the concrete environment.
//!
//! A configuration names an environment (inline, or via generator
//! parameters), a list of policies, a replication count, a base seed, and an
//! output destination. Configurations round-trip losslessly through JSON, and
//! [`ExperimentConfig::validate`] reports *all* problems at once, each tagged
//! with the path of the offending field.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::corruption::{CorruptionScheme, RandomizedResponseMatrix};
use crate::env::{generate_instance, EnvironmentError, EnvironmentSpec, FeedbackMode, SegmentSpec};

/// One problem found in a configuration, tagged with the field that caused it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    /// Dotted path of the offending field, e.g. `environment.segments[0].start`.
    pub path: String,
    /// What is wrong with the value.
    pub message: String,
}

impl ConfigIssue {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigIssue {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// All problems found in a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// Every issue found, in field order.
    pub issues: Vec<ConfigIssue>,
}

impl ConfigError {
    fn single(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            issues: vec![ConfigIssue::new(path, message)],
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for issue in &self.issues {
            writeln!(f, "  - {issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// A corruption scheme as written in a configuration file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SchemeConfig {
    /// Explicit randomized-response matrix entries.
    Rr { p00: f64, p11: f64 },
    /// The symmetric matrix with the largest feedback-mean slope among all
    /// matrices private at level `epsilon`.
    Staircase { epsilon: f64 },
}

impl SchemeConfig {
    /// Builds the runtime corruption scheme.
    pub fn build(&self) -> Result<CorruptionScheme, crate::corruption::CorruptionError> {
        let matrix = match self {
            SchemeConfig::Rr { p00, p11 } => RandomizedResponseMatrix::new(*p00, *p11)?,
            SchemeConfig::Staircase { epsilon } => RandomizedResponseMatrix::staircase(*epsilon)?,
        };
        Ok(CorruptionScheme::from_matrix(matrix))
    }
}

/// Parameters for drawing a random piecewise-stationary instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    /// Number of arms (at least 2).
    pub arms: usize,
    /// Horizon.
    pub horizon: u64,
    /// Number of stationary segments (at least 1).
    pub changes: u64,
    /// Smallest allowed best-vs-second-best reward gap per segment.
    pub min_gap: f64,
    /// Seed of the generator's own random stream.
    pub seed: u64,
    /// If set, put a staircase channel at this privacy level on every arm
    /// instead of the identity channel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

/// The environment section: either `generator` parameters or an inline
/// description (`K`, `T`, `segments`, `schemes`, optional `feedback_mode`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    /// Generator parameters; mutually exclusive with the inline fields.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorConfig>,
    /// Number of arms of an inline environment.
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub arms: Option<usize>,
    /// Horizon of an inline environment.
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    /// Stationary segments of an inline environment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<SegmentSpec>>,
    /// Per-arm corruption schemes of an inline environment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schemes: Option<Vec<SchemeConfig>>,
    /// Feedback mode; defaults to `channel`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback_mode: Option<FeedbackMode>,
}

/// Window length selection for the sliding-window policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowChoice {
    /// An explicit window length.
    Fixed(u64),
    /// A named rule.
    Named(WindowKeyword),
}

/// Named window rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKeyword {
    /// `default_window(T, L)` from the environment's horizon and segment count.
    Auto,
}

impl Default for WindowChoice {
    fn default() -> Self {
        WindowChoice::Named(WindowKeyword::Auto)
    }
}

/// One policy to run, as written in a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum PolicyConfig {
    /// The sliding-window KL-UCB policy for corrupt feedback.
    SwKlucbCf {
        /// Window length, or `"auto"` for the default rule.
        #[serde(default)]
        window: WindowChoice,
    },
    /// The stationary variant (window spanning the whole horizon).
    KlucbCf,
    /// Omniscient baseline pulling the true best arm.
    Oracle,
    /// Uniformly random baseline.
    Uniform,
    /// The sliding-window policy under the horizon-doubling wrapper.
    SwKlucbCfDoubling,
}

impl PolicyConfig {
    /// The policy's configuration name.
    pub fn name(&self) -> &'static str {
        match self {
            PolicyConfig::SwKlucbCf { .. } => "sw-klucb-cf",
            PolicyConfig::KlucbCf => "klucb-cf",
            PolicyConfig::Oracle => "oracle",
            PolicyConfig::Uniform => "uniform",
            PolicyConfig::SwKlucbCfDoubling => "sw-klucb-cf-doubling",
        }
    }
}

/// Output labels for a policy list: the policy names, with `#2`, `#3`, …
/// appended to repeated names so every configured policy stays identifiable.
pub fn policy_labels(policies: &[PolicyConfig]) -> Vec<String> {
    let mut labels = Vec::with_capacity(policies.len());
    for (index, policy) in policies.iter().enumerate() {
        let name = policy.name();
        let occurrence = policies[..index]
            .iter()
            .filter(|p| p.name() == name)
            .count();
        if occurrence == 0 {
            labels.push(name.to_string());
        } else {
            labels.push(format!("{name}#{}", occurrence + 1));
        }
    }
    labels
}

/// Output file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Where and how results are written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output file path.
    pub path: PathBuf,
    /// Output file format.
    pub format: OutputFormat,
}

/// Which time steps get a recorded regret value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordGranularity {
    /// Record every step from 1 to the horizon.
    EveryStep,
    /// Record 512 logarithmically spaced steps (deduplicated), always
    /// including 1 and the horizon. The default.
    #[default]
    LogSpaced,
}

/// A complete experiment description. See the crate README for the schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Schema version; this build reads version 1.
    pub version: u32,
    /// The environment to run on.
    pub environment: EnvironmentConfig,
    /// The policies to compare.
    pub policies: Vec<PolicyConfig>,
    /// Independent replications per policy.
    pub replications: u64,
    /// Base seed; every (policy, replication) seed derives from it.
    pub base_seed: u64,
    /// Output destination.
    pub output: OutputConfig,
    /// Recording granularity; defaults to `log-spaced`.
    #[serde(default)]
    pub record_granularity: RecordGranularity,
}

impl ExperimentConfig {
    /// Parses a configuration from JSON text.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text)
            .map_err(|e| ConfigError::single("$", format!("not a valid configuration: {e}")))
    }

    /// Serializes the configuration to one line of JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("configurations always serialize")
    }

    /// Checks every schema invariant, collecting all problems. Includes
    /// building the environment, so generator infeasibility and malformed
    /// segments are caught here before any simulation starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut issues = Vec::new();
        if self.version != 1 {
            issues.push(ConfigIssue::new(
                "version",
                format!(
                    "unsupported schema version {}, this build reads 1",
                    self.version
                ),
            ));
        }
        if self.replications == 0 {
            issues.push(ConfigIssue::new("replications", "must be at least 1"));
        }
        if self.policies.is_empty() {
            issues.push(ConfigIssue::new(
                "policies",
                "at least one policy is required",
            ));
        }
        for (index, policy) in self.policies.iter().enumerate() {
            if let PolicyConfig::SwKlucbCf {
                window: WindowChoice::Fixed(0),
            } = policy
            {
                issues.push(ConfigIssue::new(
                    format!("policies[{index}].window"),
                    "must be at least 1",
                ));
            }
        }
        if self.output.path.as_os_str().is_empty() {
            issues.push(ConfigIssue::new("output.path", "must not be empty"));
        }
        if let Err(mut e) = self.build_environment() {
            issues.append(&mut e.issues);
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { issues })
        }
    }

    /// Builds the concrete environment this configuration describes.
    pub fn build_environment(&self) -> Result<EnvironmentSpec, ConfigError> {
        let env = &self.environment;
        let inline_fields = [
            ("K", env.arms.is_some()),
            ("T", env.horizon.is_some()),
            ("segments", env.segments.is_some()),
            ("schemes", env.schemes.is_some()),
            ("feedback_mode", env.feedback_mode.is_some()),
        ];
        let any_inline = inline_fields.iter().any(|&(_, present)| present);
        match (&env.generator, any_inline) {
            (Some(_), true) => Err(ConfigError::single(
                "environment",
                "give either generator parameters or an inline environment, not both",
            )),
            (Some(generator), false) => build_generated(generator),
            (None, _) => build_inline(env),
        }
    }
}

fn build_generated(generator: &GeneratorConfig) -> Result<EnvironmentSpec, ConfigError> {
    let env = generate_instance(
        generator.arms,
        generator.horizon,
        generator.changes,
        generator.min_gap,
        generator.seed,
    )
    .map_err(|e| {
        let path = match e {
            EnvironmentError::TooFewArms { .. } => "environment.generator.arms",
            EnvironmentError::ZeroChanges { .. } => "environment.generator.changes",
            EnvironmentError::InvalidGap { .. } => "environment.generator.min_gap",
            _ => "environment.generator",
        };
        ConfigError::single(path, e.to_string())
    })?;
    if let Some(epsilon) = generator.epsilon {
        let matrix = RandomizedResponseMatrix::staircase(epsilon)
            .map_err(|e| ConfigError::single("environment.generator.epsilon", e.to_string()))?;
        let schemes = vec![CorruptionScheme::from_matrix(matrix); env.arms()];
        return env
            .with_schemes(schemes)
            .map_err(|e| ConfigError::single("environment.generator", e.to_string()));
    }
    Ok(env)
}

fn build_inline(env: &EnvironmentConfig) -> Result<EnvironmentSpec, ConfigError> {
    let mut issues = Vec::new();
    let missing = |field: &str| {
        ConfigIssue::new(
            format!("environment.{field}"),
            "required for an inline environment",
        )
    };
    if env.arms.is_none() {
        issues.push(missing("K"));
    }
    if env.horizon.is_none() {
        issues.push(missing("T"));
    }
    if env.segments.is_none() {
        issues.push(missing("segments"));
    }
    if env.schemes.is_none() {
        issues.push(missing("schemes"));
    }
    if !issues.is_empty() {
        return Err(ConfigError { issues });
    }

    let mut schemes = Vec::new();
    for (index, scheme) in env.schemes.as_ref().unwrap().iter().enumerate() {
        match scheme.build() {
            Ok(s) => schemes.push(s),
            Err(e) => issues.push(ConfigIssue::new(
                format!("environment.schemes[{index}]"),
                e.to_string(),
            )),
        }
    }

    // Check every structural invariant up front so one pass reports all of
    // them; the constructor below would stop at the first violation.
    let declared = env.arms.unwrap();
    let horizon = env.horizon.unwrap();
    let segments = env.segments.as_ref().unwrap();
    if declared == 0 {
        issues.push(ConfigIssue::new("environment.K", "must be at least 1"));
    }
    if horizon == 0 {
        issues.push(ConfigIssue::new("environment.T", "must be at least 1"));
    }
    if segments.is_empty() {
        issues.push(ConfigIssue::new(
            "environment.segments",
            "at least one segment is required",
        ));
    }
    let mut previous_start = None;
    for (index, segment) in segments.iter().enumerate() {
        if index == 0 && segment.start != 1 {
            issues.push(ConfigIssue::new(
                "environment.segments[0].start",
                format!("first segment must start at step 1, got {}", segment.start),
            ));
        }
        if let Some(previous) = previous_start {
            if segment.start <= previous {
                issues.push(ConfigIssue::new(
                    format!("environment.segments[{index}].start"),
                    format!(
                        "segment starts must strictly increase, got {} after {previous}",
                        segment.start
                    ),
                ));
            }
        }
        previous_start = Some(segment.start);
        if horizon > 0 && segment.start > horizon {
            issues.push(ConfigIssue::new(
                format!("environment.segments[{index}].start"),
                format!("start {} exceeds the horizon {horizon}", segment.start),
            ));
        }
        if declared > 0 && segment.means.len() != declared {
            issues.push(ConfigIssue::new(
                format!("environment.segments[{index}].means"),
                format!(
                    "carries {} means but the environment declares K={declared}",
                    segment.means.len()
                ),
            ));
        }
        for (arm, &mean) in segment.means.iter().enumerate() {
            if !(0.0..=1.0).contains(&mean) {
                issues.push(ConfigIssue::new(
                    format!("environment.segments[{index}].means[{arm}]"),
                    format!("mean {mean} outside [0, 1]"),
                ));
            }
        }
    }
    if declared > 0 && env.schemes.as_ref().unwrap().len() != declared {
        issues.push(ConfigIssue::new(
            "environment.schemes",
            format!(
                "{} schemes for K={declared} arms",
                env.schemes.as_ref().unwrap().len()
            ),
        ));
    }
    if !issues.is_empty() {
        return Err(ConfigError { issues });
    }

    // The pre-checks above mirror the constructor's invariants, so any
    // residual error here still gets a field path.
    EnvironmentSpec::new(
        horizon,
        segments.clone(),
        schemes,
        env.feedback_mode.unwrap_or_default(),
    )
    .map_err(|e| ConfigError {
        issues: vec![environment_issue(&e)],
    })
}

fn environment_issue(error: &EnvironmentError) -> ConfigIssue {
    use EnvironmentError::*;
    let path = match error {
        NoSegments => "environment.segments".to_string(),
        NoArms => "environment.segments[0].means".to_string(),
        ZeroHorizon => "environment.T".to_string(),
        FirstSegmentStart { .. } => "environment.segments[0].start".to_string(),
        SegmentOrder { index, .. } => format!("environment.segments[{index}].start"),
        StartBeyondHorizon { .. } => "environment.segments".to_string(),
        ArityMismatch { segment, .. } => format!("environment.segments[{segment}].means"),
        MeanOutOfRange { segment, arm, .. } => {
            format!("environment.segments[{segment}].means[{arm}]")
        }
        SchemeCountMismatch { .. } => "environment.schemes".to_string(),
        ChannelNeedsMatrix { arm } => format!("environment.schemes[{arm}]"),
        _ => "environment".to_string(),
    };
    ConfigIssue::new(path, error.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_json() -> String {
        r#"{
            "version": 1,
            "environment": {
                "K": 2,
                "T": 1000,
                "segments": [
                    {"start": 1, "means": [0.9, 0.4]},
                    {"start": 500, "means": [0.2, 0.7]}
                ],
                "schemes": [
                    {"type": "rr", "p00": 0.8, "p11": 0.9},
                    {"type": "staircase", "epsilon": 2.0}
                ],
                "feedback_mode": "channel"
            },
            "policies": [
                {"policy": "sw-klucb-cf", "window": "auto"},
                {"policy": "sw-klucb-cf", "window": 250},
                {"policy": "klucb-cf"},
                {"policy": "oracle"},
                {"policy": "uniform"},
                {"policy": "sw-klucb-cf-doubling"}
            ],
            "replications": 4,
            "base_seed": 7,
            "output": {"path": "out/results.csv", "format": "csv"}
        }"#
        .to_string()
    }

    #[test]
    fn parses_and_round_trips_losslessly() {
        let config = ExperimentConfig::from_json(&sample_json()).unwrap();
        config.validate().unwrap();
        assert_eq!(config.record_granularity, RecordGranularity::LogSpaced);
        assert_eq!(
            config.policies[0],
            PolicyConfig::SwKlucbCf {
                window: WindowChoice::Named(WindowKeyword::Auto)
            }
        );
        assert_eq!(
            config.policies[1],
            PolicyConfig::SwKlucbCf {
                window: WindowChoice::Fixed(250)
            }
        );
        let json = config.to_json();
        let reparsed = ExperimentConfig::from_json(&json).unwrap();
        assert_eq!(config, reparsed);
        assert_eq!(json, reparsed.to_json());
    }

    #[test]
    fn builds_the_inline_environment() {
        let config = ExperimentConfig::from_json(&sample_json()).unwrap();
        let env = config.build_environment().unwrap();
        assert_eq!(env.arms(), 2);
        assert_eq!(env.horizon(), 1000);
        assert_eq!(env.num_segments(), 2);
        assert_eq!(env.schemes()[0].matrix().unwrap().p00(), 0.8);
    }

    #[test]
    fn window_default_is_auto() {
        let parsed: PolicyConfig = serde_json::from_str(r#"{"policy": "sw-klucb-cf"}"#).unwrap();
        assert_eq!(
            parsed,
            PolicyConfig::SwKlucbCf {
                window: WindowChoice::default()
            }
        );
    }

    #[test]
    fn validation_collects_issues_with_field_paths() {
        let mut config = ExperimentConfig::from_json(&sample_json()).unwrap();
        config.version = 3;
        config.replications = 0;
        config.policies.push(PolicyConfig::SwKlucbCf {
            window: WindowChoice::Fixed(0),
        });
        config.environment.segments.as_mut().unwrap()[0].start = 5;
        let error = config.validate().unwrap_err();
        let paths: Vec<&str> = error.issues.iter().map(|i| i.path.as_str()).collect();
        assert_eq!(
            paths,
            vec![
                "version",
                "replications",
                "policies[6].window",
                "environment.segments[0].start"
            ]
        );
        assert!(error.issues[3].message.contains("must start at step 1"));
    }

    #[test]
    fn inline_and_generator_are_mutually_exclusive() {
        let mut config = ExperimentConfig::from_json(&sample_json()).unwrap();
        config.environment.generator = Some(GeneratorConfig {
            arms: 3,
            horizon: 1000,
            changes: 2,
            min_gap: 0.1,
            seed: 1,
            epsilon: None,
        });
        let error = config.validate().unwrap_err();
        assert_eq!(error.issues[0].path, "environment");
        assert!(error.issues[0].message.contains("not both"));
    }

    #[test]
    fn generator_config_builds_and_validates() {
        let json = r#"{
            "version": 1,
            "environment": {"generator": {"arms": 3, "horizon": 5000, "changes": 3, "min_gap": 0.1, "seed": 11, "epsilon": 2.0}},
            "policies": [{"policy": "sw-klucb-cf"}],
            "replications": 2,
            "base_seed": 1,
            "output": {"path": "r.json", "format": "json"},
            "record_granularity": "every-step"
        }"#;
        let config = ExperimentConfig::from_json(json).unwrap();
        config.validate().unwrap();
        assert_eq!(config.record_granularity, RecordGranularity::EveryStep);
        let env = config.build_environment().unwrap();
        assert_eq!(env.num_segments(), 3);
        let matrix = env.schemes()[0].matrix().unwrap();
        assert!((matrix.ldp_epsilon() - 2.0).abs() < 1e-12);

        // Determinism: building twice gives identical segments.
        let again = config.build_environment().unwrap();
        assert_eq!(env.segments(), again.segments());
    }

    #[test]
    fn generator_errors_carry_their_field_path() {
        let json = r#"{
            "version": 1,
            "environment": {"generator": {"arms": 1, "horizon": 5000, "changes": 3, "min_gap": 0.1, "seed": 11}},
            "policies": [{"policy": "oracle"}],
            "replications": 2,
            "base_seed": 1,
            "output": {"path": "r.json", "format": "json"}
        }"#;
        let config = ExperimentConfig::from_json(json).unwrap();
        let error = config.validate().unwrap_err();
        assert_eq!(error.issues[0].path, "environment.generator.arms");
    }

    #[test]
    fn missing_inline_fields_are_each_reported() {
        let json = r#"{
            "version": 1,
            "environment": {"K": 2, "T": 100},
            "policies": [{"policy": "oracle"}],
            "replications": 1,
            "base_seed": 0,
            "output": {"path": "r.csv", "format": "csv"}
        }"#;
        let config = ExperimentConfig::from_json(json).unwrap();
        let error = config.validate().unwrap_err();
        let paths: Vec<&str> = error.issues.iter().map(|i| i.path.as_str()).collect();
        assert_eq!(paths, vec!["environment.segments", "environment.schemes"]);
    }

    #[test]
    fn labels_disambiguate_repeated_policies() {
        let config = ExperimentConfig::from_json(&sample_json()).unwrap();
        assert_eq!(
            policy_labels(&config.policies),
            vec![
                "sw-klucb-cf",
                "sw-klucb-cf#2",
                "klucb-cf",
                "oracle",
                "uniform",
                "sw-klucb-cf-doubling"
            ]
        );
    }

    #[test]
    fn bad_scheme_probabilities_point_at_the_scheme() {
        let mut config = ExperimentConfig::from_json(&sample_json()).unwrap();
        config.environment.schemes.as_mut().unwrap()[1] = SchemeConfig::Rr { p00: 0.3, p11: 0.7 };
        let error = config.validate().unwrap_err();
        assert_eq!(error.issues[0].path, "environment.schemes[1]");
        config.environment.schemes.as_mut().unwrap()[1] = SchemeConfig::Rr { p00: 1.2, p11: 0.7 };
        let error = config.validate().unwrap_err();
        assert_eq!(error.issues[0].path, "environment.schemes[1]");
    }
}
