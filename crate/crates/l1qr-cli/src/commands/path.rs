//! `l1qr path`: the relaxation sequence λ0/1, λ0/2, …, λ0/K at one
//! quantile, with the selected support and a post refit at every step.

use std::collections::BTreeMap;
use std::path::PathBuf;

use l1qr::{lambda_path, selection_path, PenaltyCalibration, QuantileGrid, QuantileIndex};
use serde::{Deserialize, Serialize};

use super::{join_support, support_names, InputArgs, InputEffective, InputFileConfig};
use crate::config::{self, OutputFormat};
use crate::output::{classify, to_json_artifact, CliError};

#[derive(Debug, clap::Args)]
pub struct PathArgs {
    #[command(flatten)]
    input: InputArgs,

    /// JSON config file; command-line flags override its values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// The quantile index u.
    #[arg(long, value_name = "U")]
    quantile: Option<f64>,

    /// Starting penalty level λ0; omit to calibrate it from the design.
    #[arg(long)]
    lambda0: Option<f64>,

    /// Calibration miscoverage level α.
    #[arg(long)]
    alpha: Option<f64>,

    /// Calibration multiplier c.
    #[arg(long)]
    c: Option<f64>,

    /// Number of calibration draws R.
    #[arg(long, value_name = "R")]
    r: Option<usize>,

    /// Seed for the calibration draws.
    #[arg(long)]
    seed: Option<u64>,

    /// Path length K: steps λ0/1 through λ0/K.
    #[arg(long, value_name = "K")]
    k: Option<usize>,

    /// Output file (stdout when omitted); written atomically.
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,

    /// Artifact format.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathFileConfig {
    #[serde(flatten)]
    input: InputFileConfig,
    quantile: Option<f64>,
    lambda0: Option<f64>,
    alpha: Option<f64>,
    c: Option<f64>,
    r: Option<usize>,
    seed: Option<u64>,
    k: Option<usize>,
    output: Option<PathBuf>,
    format: Option<OutputFormat>,
}

#[derive(Debug, Serialize)]
struct PathEffective {
    command: &'static str,
    #[serde(flatten)]
    input: InputEffective,
    quantile: f64,
    lambda0: Option<f64>,
    alpha: f64,
    c: f64,
    r: usize,
    seed: u64,
    k: usize,
    output: Option<PathBuf>,
    format: OutputFormat,
}

#[derive(Debug, Serialize)]
struct StepEntry {
    step: usize,
    lambda: f64,
    n_selected: usize,
    support: Vec<usize>,
    support_names: Vec<String>,
    coefficients: BTreeMap<usize, f64>,
    objective: f64,
    post_selected: Vec<usize>,
    post_coefficients: BTreeMap<usize, f64>,
    post_objective: f64,
}

#[derive(Debug, Serialize)]
struct PathArtifact {
    config: PathEffective,
    n: usize,
    p: usize,
    /// Resolved header name of the response column.
    response: Option<String>,
    columns: Vec<String>,
    lambda0: f64,
    lambda0_source: &'static str,
    steps: Vec<StepEntry>,
}

pub fn run(args: PathArgs) -> Result<(), CliError> {
    let file: PathFileConfig = config::load_config_file(args.config.as_deref())?;
    let cfg = PathEffective {
        command: "path",
        input: args.input.resolve(file.input, true)?,
        quantile: config::merge(args.quantile, file.quantile, 0.5),
        lambda0: config::merge_opt(args.lambda0, file.lambda0),
        alpha: config::merge(args.alpha, file.alpha, 0.1),
        c: config::merge(args.c, file.c, 2.0),
        r: config::merge(args.r, file.r, 1000),
        seed: config::merge(args.seed, file.seed, 0),
        k: config::merge(args.k, file.k, 5),
        output: config::merge_opt(args.output, file.output),
        format: config::merge(args.format, file.format, OutputFormat::Json),
    };

    let u = QuantileIndex::new(cfg.quantile)
        .map_err(|e| CliError::usage(format!("invalid --quantile: {e}")))?;
    let loaded = cfg.input.load()?;
    let d = &loaded.dataset;

    let (lambda0, lambda0_source) = match cfg.lambda0 {
        Some(l) => (l, "fixed"),
        None => {
            let grid = QuantileGrid::single(cfg.quantile)
                .map_err(|e| CliError::usage(format!("invalid --quantile: {e}")))?;
            let cal = PenaltyCalibration::run(d, &grid, cfg.r, cfg.alpha, cfg.c, cfg.seed)
                .map_err(|e| classify("calibrate", e))?;
            (cal.lambda0, "calibrated")
        }
    };

    let lambdas = lambda_path(lambda0, cfg.k).map_err(|e| classify("path", e))?;
    let steps = selection_path(d, u, &lambdas).map_err(|e| classify("path", e))?;

    let steps: Vec<StepEntry> = steps
        .iter()
        .enumerate()
        .map(|(i, s)| StepEntry {
            step: i + 1,
            lambda: s.lambda,
            n_selected: s.support.len(),
            support: s.support.clone(),
            support_names: support_names(&s.support, &loaded.column_names),
            coefficients: s
                .support
                .iter()
                .map(|&j| (j, s.fit.beta.as_slice()[j]))
                .collect(),
            objective: s.fit.primal_objective,
            post_selected: s.post.selected.clone(),
            post_coefficients: s
                .post
                .refit
                .support
                .iter()
                .map(|&j| (j, s.post.beta_post.as_slice()[j]))
                .collect(),
            post_objective: s.post.refit.primal_objective,
        })
        .collect();

    let artifact = PathArtifact {
        n: d.n(),
        p: d.p(),
        response: loaded.response_name.clone(),
        columns: loaded.column_names.clone(),
        lambda0,
        lambda0_source,
        steps,
        config: cfg,
    };

    let content = match artifact.config.format {
        OutputFormat::Json => to_json_artifact(&artifact)?,
        OutputFormat::Csv => {
            let rows: Vec<Vec<String>> = artifact
                .steps
                .iter()
                .map(|s| {
                    vec![
                        s.step.to_string(),
                        s.lambda.to_string(),
                        s.n_selected.to_string(),
                        join_support(&s.support),
                        s.objective.to_string(),
                        s.post_objective.to_string(),
                    ]
                })
                .collect();
            super::csv_table(
                &["step", "lambda", "n_selected", "support", "objective", "post_objective"],
                &rows,
            )
        }
    };
    super::emit_artifact(&artifact.config.output, &content)
}
