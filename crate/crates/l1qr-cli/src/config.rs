//! Command-line / config-file / default merging, and the small parsers
//! shared by the commands (quantile specs, delimiters, estimator lists).
//!
//! Every flag can also be supplied through a JSON config file passed via
//! `--config`; a flag given on the command line wins over the file, and
//! built-in defaults apply last. The fully merged ("effective")
//! configuration is embedded in each output artifact.

use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use clap::ValueEnum;
use l1qr::{EstimatorKind, QuantileGrid};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::output::CliError;

/// Output serialization format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Sparse-eigenvalue search mode (mirrors the library's enum, with a
/// clap-friendly surface).
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenModeArg {
    Exact,
    Greedy,
    Auto,
}

impl From<EigenModeArg> for l1qr::diagnostics::EigenMode {
    fn from(m: EigenModeArg) -> Self {
        match m {
            EigenModeArg::Exact => l1qr::diagnostics::EigenMode::Exact,
            EigenModeArg::Greedy => l1qr::diagnostics::EigenMode::Greedy,
            EigenModeArg::Auto => l1qr::diagnostics::EigenMode::Auto,
        }
    }
}

/// Penalty rule selector for `simulate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyRuleArg {
    /// Recalibrate the pivotal penalty on each replication's design.
    Pivotal,
    /// Calibrate once on the first replication's design and reuse it.
    SharedPivotal,
    /// A fixed penalty level.
    Fixed,
}

/// Loads a JSON config file into the per-command partial-config type.
/// Unknown keys are rejected so typos fail loudly instead of silently
/// falling back to defaults.
pub fn load_config_file<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| {
                CliError::usage(format!("cannot read config file {}: {e}", p.display()))
            })?;
            serde_json::from_str(&text).map_err(|e| {
                CliError::usage(format!("invalid config file {}: {e}", p.display()))
            })
        }
    }
}

/// CLI flag > config file > default.
pub fn merge<T>(cli: Option<T>, file: Option<T>, default: T) -> T {
    cli.or(file).unwrap_or(default)
}

/// CLI flag > config file, for fields with no default (stays optional).
pub fn merge_opt<T>(cli: Option<T>, file: Option<T>) -> Option<T> {
    cli.or(file)
}

/// Like [`merge_opt`] but the field is required; `what` names the flag
/// in the error message.
pub fn merge_required<T>(cli: Option<T>, file: Option<T>, what: &str) -> Result<T, CliError> {
    cli.or(file)
        .ok_or_else(|| CliError::usage(format!("missing required option --{what}")))
}

/// Parses a quantile specification: either a comma list `0.25,0.5,0.75`
/// or a range `lo:hi:step` with inclusive endpoints.
pub fn parse_quantiles(spec: &str) -> Result<QuantileGrid, CliError> {
    let bad = |detail: &dyn Display| {
        CliError::usage(format!(
            "invalid quantile spec {spec:?}: {detail} \
             (expected a comma list like \"0.25,0.5,0.75\" or a range like \"0.1:0.9:0.05\")"
        ))
    };
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(&"a range needs exactly lo:hi:step"));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|s| f64::from_str(s.trim()).map_err(|e| bad(&format!("{s:?}: {e}"))))
            .collect::<Result<_, _>>()?;
        QuantileGrid::from_range(nums[0], nums[1], nums[2]).map_err(|e| bad(&e))
    } else {
        let nums: Vec<f64> = spec
            .split(',')
            .map(|s| f64::from_str(s.trim()).map_err(|e| bad(&format!("{s:?}: {e}"))))
            .collect::<Result<_, _>>()?;
        QuantileGrid::new(nums).map_err(|e| bad(&e))
    }
}

/// Parses the delimiter flag: a single ASCII character, or the escapes
/// `\t` / the word `tab` for tab-separated files.
pub fn parse_delimiter(spec: &str) -> Result<u8, CliError> {
    match spec {
        "\\t" | "tab" | "\t" => Ok(b'\t'),
        s if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        s => Err(CliError::usage(format!(
            "invalid delimiter {s:?}: expected one ASCII character or \"tab\""
        ))),
    }
}

/// Parses a comma list of estimator names (`canonical`, `penalized`,
/// `post`, `oracle`).
pub fn parse_estimators(spec: &str) -> Result<Vec<EstimatorKind>, CliError> {
    spec.split(',')
        .map(|s| match s.trim() {
            "canonical" => Ok(EstimatorKind::Canonical),
            "penalized" => Ok(EstimatorKind::Penalized),
            "post" => Ok(EstimatorKind::Post),
            "oracle" => Ok(EstimatorKind::Oracle),
            other => Err(CliError::usage(format!(
                "unknown estimator {other:?}: expected canonical, penalized, post, or oracle"
            ))),
        })
        .collect()
}

/// Resolves the worker-thread count: `--threads` flag, then the
/// `L1QR_THREADS` environment variable, then the library default.
pub fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(t) = flag {
        return Ok(Some(t));
    }
    match std::env::var("L1QR_THREADS") {
        Ok(v) => {
            let t: usize = v.trim().parse().map_err(|e| {
                CliError::usage(format!("invalid L1QR_THREADS value {v:?}: {e}"))
            })?;
            Ok(Some(t))
        }
        Err(_) => Ok(None),
    }
}
