//! Result emission: CSV and JSON renderings of experiment results.
//!
//! Both formats carry a format-version tag and echo the full effective
//! configuration, so a result file is self-describing and reproducible.
//! Rendering is fully deterministic: identical results yield identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::config::{ExperimentConfig, OutputFormat};
use crate::run::ExperimentResults;

/// Version tag written into every output file.
pub const FORMAT_VERSION: u32 = 1;

/// An output file could not be written.
#[derive(Debug, Error)]
#[error("failed writing {path}: {source}")]
pub struct OutputError {
    /// The path that failed.
    pub path: PathBuf,
    /// The underlying I/O error.
    #[source]
    pub source: std::io::Error,
}

/// Renders results as CSV: a `#`-commented header with the format version
/// and the configuration, a column header, per-run rows (`policy, seed, t,
/// regret`), then per-policy aggregate rows with `mean`/`std` in the seed
/// column. Reals carry 17 significant digits, lines end in LF.
pub fn render_csv(results: &ExperimentResults) -> String {
    let mut out = String::new();
    writeln!(out, "# format-version: {FORMAT_VERSION}").unwrap();
    writeln!(out, "# config: {}", results.config.to_json()).unwrap();
    writeln!(out, "policy,seed,t,regret").unwrap();
    for record in &results.records {
        for point in &record.points {
            writeln!(
                out,
                "{},{},{},{:.16e}",
                record.policy, record.seed, point.t, point.regret
            )
            .unwrap();
        }
    }
    for curve in &results.aggregates {
        for point in &curve.points {
            writeln!(out, "{},mean,{},{:.16e}", curve.policy, point.t, point.mean).unwrap();
        }
        for point in &curve.points {
            writeln!(out, "{},std,{},{:.16e}", curve.policy, point.t, point.std).unwrap();
        }
    }
    out
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    policy: &'a str,
    seed: String,
    t: u64,
    regret: f64,
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    format_version: u32,
    config: &'a ExperimentConfig,
    records: Vec<JsonRecord<'a>>,
}

/// Renders results as JSON mirroring the CSV records: the same rows, in the
/// same order, with the seed column holding the seed as a string or
/// `"mean"`/`"std"` for aggregates.
pub fn render_json(results: &ExperimentResults) -> String {
    let mut records = Vec::new();
    for record in &results.records {
        for point in &record.points {
            records.push(JsonRecord {
                policy: &record.policy,
                seed: record.seed.to_string(),
                t: point.t,
                regret: point.regret,
            });
        }
    }
    for curve in &results.aggregates {
        for point in &curve.points {
            records.push(JsonRecord {
                policy: &curve.policy,
                seed: "mean".to_string(),
                t: point.t,
                regret: point.mean,
            });
        }
        for point in &curve.points {
            records.push(JsonRecord {
                policy: &curve.policy,
                seed: "std".to_string(),
                t: point.t,
                regret: point.std,
            });
        }
    }
    let document = JsonDocument {
        format_version: FORMAT_VERSION,
        config: &results.config,
        records,
    };
    let mut rendered = serde_json::to_string_pretty(&document).expect("results always serialize");
    rendered.push('\n');
    rendered
}

/// Writes results to `path` in the requested format, creating parent
/// directories as needed.
pub fn emit(
    results: &ExperimentResults,
    path: &Path,
    format: OutputFormat,
) -> Result<(), OutputError> {
    let rendered = match format {
        OutputFormat::Csv => render_csv(results),
        OutputFormat::Json => render_json(results),
    };
    let failed = |source: std::io::Error| OutputError {
        path: path.to_owned(),
        source,
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(failed)?;
        }
    }
    fs::write(path, rendered).map_err(failed)
}
