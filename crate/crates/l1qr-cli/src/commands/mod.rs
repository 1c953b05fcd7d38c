//! The five subcommands. Each one follows the same shape: merge CLI
//! flags over an optional JSON config file over defaults, run the
//! library calls, and emit one artifact (JSON or CSV) atomically with
//! the effective configuration echoed inside.

mod calibrate;
mod diagnose;
mod fit;
mod path;
mod simulate;

use std::path::PathBuf;

use clap::{Args, Subcommand};

use crate::csv_input::{parse_csv_dataset, CsvOptions, LoadedData};
use crate::output::CliError;
use crate::{config, output};

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit penalized quantile regressions on a CSV dataset, with
    /// post-selection refits and optional hard thresholding.
    Fit(fit::FitArgs),
    /// Calibrate the pivotal penalty level on a CSV design (the
    /// response is never read).
    Calibrate(calibrate::CalibrateArgs),
    /// Trace a penalty relaxation path λ0/1, λ0/2, …, λ0/K with a
    /// post refit at each step.
    Path(path::PathArgs),
    /// Run the Monte Carlo study on synthetic AR(1) location models.
    Simulate(simulate::SimulateArgs),
    /// Sparse-eigenvalue diagnostics of a design's second-moment matrix
    /// or of a population AR(1) matrix.
    Diagnose(diagnose::DiagnoseArgs),
}

pub fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Fit(a) => fit::run(a),
        Command::Calibrate(a) => calibrate::run(a),
        Command::Path(a) => path::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Diagnose(a) => diagnose::run(a),
    }
}

/// CSV-input flags shared by the dataset-reading commands. Boolean
/// flags take an optional explicit value (`--add-intercept` or
/// `--add-intercept false`) so a config-file setting can be overridden
/// in both directions.
#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input CSV file; a header row is required.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,

    /// Response column, by header name or 0-based index.
    #[arg(long, value_name = "NAME|INDEX")]
    pub response: Option<String>,

    /// Prepend an all-ones intercept column.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub add_intercept: Option<bool>,

    /// Penalize an added intercept like any other column (by default it
    /// is exempt).
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub penalize_intercept: Option<bool>,

    /// Cell delimiter: one ASCII character, or "tab".
    #[arg(long, value_name = "CHAR")]
    pub delimiter: Option<String>,
}

/// Resolved CSV-input settings after the config-file merge.
#[derive(Debug, serde::Serialize)]
pub struct InputEffective {
    pub input: PathBuf,
    pub response: Option<String>,
    pub add_intercept: bool,
    pub penalize_intercept: bool,
    pub delimiter: String,
}

/// File-config counterpart of [`InputArgs`].
#[derive(Debug, Default, serde::Deserialize)]
pub struct InputFileConfig {
    pub input: Option<PathBuf>,
    pub response: Option<String>,
    pub add_intercept: Option<bool>,
    pub penalize_intercept: Option<bool>,
    pub delimiter: Option<String>,
}

impl InputArgs {
    /// Merges with the file config; `response_required` distinguishes
    /// fit/path (which need a response) from calibrate/diagnose (which
    /// do not read one).
    pub fn resolve(
        self,
        file: InputFileConfig,
        response_required: bool,
    ) -> Result<InputEffective, CliError> {
        let response = config::merge_opt(self.response, file.response);
        if response_required && response.is_none() {
            return Err(CliError::usage("missing required option --response"));
        }
        Ok(InputEffective {
            input: config::merge_required(self.input, file.input, "input")?,
            response,
            add_intercept: config::merge(self.add_intercept, file.add_intercept, false),
            penalize_intercept: config::merge(
                self.penalize_intercept,
                file.penalize_intercept,
                false,
            ),
            delimiter: config::merge(self.delimiter, file.delimiter, ",".to_string()),
        })
    }
}

impl InputEffective {
    pub fn load(&self) -> Result<LoadedData, CliError> {
        let opts = CsvOptions {
            response: self.response.as_deref(),
            add_intercept: self.add_intercept,
            penalize_intercept: self.penalize_intercept,
            delimiter: config::parse_delimiter(&self.delimiter)?,
        };
        parse_csv_dataset(&self.input, &opts)
    }
}

/// Names for a support set, used in JSON artifacts.
pub fn support_names(support: &[usize], names: &[String]) -> Vec<String> {
    support.iter().map(|&j| names[j].clone()).collect()
}

/// Renders a CSV table from a header and stringified rows.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Joins indices with ';' so a support set stays a single CSV cell.
pub fn join_support(support: &[usize]) -> String {
    support
        .iter()
        .map(|j| j.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// Emits the artifact and logs nothing else to stdout.
pub fn emit_artifact(path: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    output::emit(path, content)
}
