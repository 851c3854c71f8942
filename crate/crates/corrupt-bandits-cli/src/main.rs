//! Command-line frontend for corrupt-bandit experiments.
//!
//! Subcommands: `run` executes a configured experiment and writes result
//! files; `validate` checks a configuration; `bound` evaluates the
//! closed-form regret bound; `ldp-design` prints the feedback channel for a
//! privacy level; `gen` draws a random environment. Data goes to stdout or
//! the configured files, diagnostics to stderr. Exit codes: 0 success, 1
//! invalid input, 2 runtime failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use corrupt_bandits::config::{
    EnvironmentConfig, ExperimentConfig, PolicyConfig, SchemeConfig, WindowChoice, WindowKeyword,
};
use corrupt_bandits::corruption::RandomizedResponseMatrix;
use corrupt_bandits::env::generate_instance;
use corrupt_bandits::output::emit;
use corrupt_bandits::policy::default_window;
use corrupt_bandits::run::{resolve_jobs, run_experiment};
use corrupt_bandits::{regret_bound, CorruptionScheme};

#[derive(Parser)]
#[command(
    name = "corrupt-bandits",
    version,
    about = "Sliding-window KL-UCB experiments on corrupt-feedback bandits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Run {
        /// Path of the JSON configuration file.
        config: PathBuf,
        /// Directory for the output file (replaces the directory part of the
        /// configured output path).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Override the configured number of replications.
        #[arg(long, value_name = "N")]
        seeds: Option<u64>,
        /// Number of parallel workers. Falls back to the
        /// CORRUPT_BANDITS_JOBS environment variable, then to all cores.
        #[arg(long, value_name = "J")]
        jobs: Option<usize>,
    },
    /// Print the randomized-response channel for a privacy level.
    LdpDesign {
        /// Privacy level (must be positive).
        #[arg(long, allow_negative_numbers = true)]
        epsilon: f64,
    },
    /// Print the itemized regret bound for a configuration's environment.
    Bound {
        /// Path of the JSON configuration file.
        config: PathBuf,
    },
    /// Check a configuration file and report every problem.
    Validate {
        /// Path of the JSON configuration file.
        config: PathBuf,
    },
    /// Generate a random piecewise-stationary environment section.
    Gen {
        /// Number of arms (at least 2).
        #[arg(long)]
        arms: usize,
        /// Horizon.
        #[arg(long)]
        horizon: u64,
        /// Number of stationary segments (at least 1).
        #[arg(long)]
        changes: u64,
        /// Smallest allowed best-vs-second-best reward gap per segment.
        #[arg(long, allow_negative_numbers = true)]
        gap: f64,
        /// Generator seed.
        #[arg(long)]
        seed: u64,
        /// Put a staircase channel at this privacy level on every arm
        /// instead of the identity channel.
        #[arg(long, allow_negative_numbers = true)]
        epsilon: Option<f64>,
    },
}

/// A failure, classified for the exit code: 1 for invalid input, 2 for
/// runtime problems such as I/O.
enum CliError {
    Invalid(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Invalid(m) | CliError::Runtime(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message().trim_end());
            ExitCode::from(e.code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run {
            config,
            out,
            seeds,
            jobs,
        } => cmd_run(&config, out.as_deref(), seeds, jobs),
        Command::LdpDesign { epsilon } => cmd_ldp_design(epsilon),
        Command::Bound { config } => cmd_bound(&config),
        Command::Validate { config } => cmd_validate(&config),
        Command::Gen {
            arms,
            horizon,
            changes,
            gap,
            seed,
            epsilon,
        } => cmd_gen(arms, horizon, changes, gap, seed, epsilon),
    }
}

/// Writes one line of data to stdout. A closed pipe (e.g. piping into
/// `head`) is not an error.
fn print_data(text: &str) -> Result<(), CliError> {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    match writeln!(stdout, "{text}") {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(CliError::Runtime(format!("cannot write to stdout: {e}"))),
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text).map_err(|e| CliError::Invalid(e.to_string()))
}

fn cmd_run(
    config_path: &Path,
    out: Option<&Path>,
    seeds: Option<u64>,
    jobs: Option<usize>,
) -> Result<(), CliError> {
    let mut config = load_config(config_path)?;
    if let Some(n) = seeds {
        config.replications = n;
    }
    let results = run_experiment(&config, resolve_jobs(jobs))
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let configured = &config.output.path;
    let path = match out {
        Some(dir) => {
            let name = configured.file_name().ok_or_else(|| {
                CliError::Invalid(format!(
                    "output.path: {} has no file name to place under --out",
                    configured.display()
                ))
            })?;
            dir.join(name)
        }
        None => configured.clone(),
    };
    emit(&results, &path, config.output.format).map_err(|e| CliError::Runtime(e.to_string()))?;
    eprintln!(
        "wrote {} ({} policies x {} replications, horizon {})",
        path.display(),
        config.policies.len(),
        config.replications,
        results.environment.horizon()
    );
    Ok(())
}

fn cmd_ldp_design(epsilon: f64) -> Result<(), CliError> {
    let matrix = RandomizedResponseMatrix::staircase(epsilon)
        .map_err(|e| CliError::Invalid(format!("--epsilon: {e}")))?;
    let design = serde_json::json!({
        "epsilon": epsilon,
        "p00": matrix.p00(),
        "p11": matrix.p11(),
        "verified_epsilon": matrix.ldp_epsilon(),
    });
    print_data(&serde_json::to_string_pretty(&design).expect("serializable"))
}

/// The window the bound is evaluated at: the first sliding-window policy's
/// resolved window if the configuration names one, otherwise the default
/// window rule for the environment.
fn bound_window(config: &ExperimentConfig, horizon: u64, changes: u64) -> u64 {
    for policy in &config.policies {
        if let PolicyConfig::SwKlucbCf { window } = policy {
            return match window {
                WindowChoice::Fixed(w) => *w,
                WindowChoice::Named(WindowKeyword::Auto) => default_window(horizon, changes),
            };
        }
    }
    default_window(horizon, changes)
}

fn cmd_bound(config_path: &Path) -> Result<(), CliError> {
    let config = load_config(config_path)?;
    config
        .validate()
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let env = config
        .build_environment()
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let window = bound_window(&config, env.horizon(), env.num_segments() as u64);
    let report = regret_bound(&env, window).map_err(|e| CliError::Invalid(e.to_string()))?;
    let mut value = serde_json::to_value(&report).expect("serializable");
    value["regret_bound"] = serde_json::json!(report.regret_bound());
    print_data(&serde_json::to_string_pretty(&value).expect("serializable"))
}

fn cmd_validate(config_path: &Path) -> Result<(), CliError> {
    let config = load_config(config_path)?;
    config
        .validate()
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    print_data("configuration valid")
}

fn cmd_gen(
    arms: usize,
    horizon: u64,
    changes: u64,
    gap: f64,
    seed: u64,
    epsilon: Option<f64>,
) -> Result<(), CliError> {
    let mut env = generate_instance(arms, horizon, changes, gap, seed)
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let schemes = match epsilon {
        Some(eps) => {
            let matrix = RandomizedResponseMatrix::staircase(eps)
                .map_err(|e| CliError::Invalid(format!("--epsilon: {e}")))?;
            env = env
                .with_schemes(vec![CorruptionScheme::from_matrix(matrix); arms])
                .map_err(|e| CliError::Invalid(e.to_string()))?;
            vec![SchemeConfig::Staircase { epsilon: eps }; arms]
        }
        None => vec![SchemeConfig::Rr { p00: 1.0, p11: 1.0 }; arms],
    };
    let section = EnvironmentConfig {
        generator: None,
        arms: Some(env.arms()),
        horizon: Some(env.horizon()),
        segments: Some(env.segments().to_vec()),
        schemes: Some(schemes),
        feedback_mode: Some(env.feedback_mode()),
    };
    print_data(&serde_json::to_string_pretty(&section).expect("serializable"))
}
