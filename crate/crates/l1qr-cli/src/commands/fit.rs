//! `l1qr fit`: penalized quantile-process fit on a CSV dataset, with a
//! fixed or calibrated penalty, per-quantile post refits, and optional
//! hard thresholding.

use std::collections::BTreeMap;
use std::path::PathBuf;

use l1qr::{fit_l1_qr_process, hard_threshold, post_l1_qr, Coefficients, PenaltyCalibration};
use serde::{Deserialize, Serialize};

use super::{support_names, InputArgs, InputEffective, InputFileConfig};
use crate::config::{self, OutputFormat};
use crate::output::{classify, to_json_artifact, CliError};

#[derive(Debug, clap::Args)]
pub struct FitArgs {
    #[command(flatten)]
    input: InputArgs,

    /// JSON config file; command-line flags override its values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Quantile grid: a comma list ("0.25,0.5,0.75") or a range
    /// ("0.1:0.9:0.05").
    #[arg(long, value_name = "SPEC")]
    quantiles: Option<String>,

    /// Fixed base penalty level λ (scaled by √(u(1−u)) per quantile);
    /// omit to calibrate it from the design.
    #[arg(long)]
    lambda: Option<f64>,

    /// Calibration miscoverage level α.
    #[arg(long)]
    alpha: Option<f64>,

    /// Calibration multiplier c on the simulated quantile.
    #[arg(long)]
    c: Option<f64>,

    /// Number of calibration draws R.
    #[arg(long, value_name = "R")]
    r: Option<usize>,

    /// Seed for the calibration draws.
    #[arg(long)]
    seed: Option<u64>,

    /// Refit unpenalized on each selected support.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    post: Option<bool>,

    /// Hard-threshold the penalized coefficients at this value.
    #[arg(long, value_name = "GAMMA")]
    threshold: Option<f64>,

    /// Include dense coefficient arrays alongside the sparse maps.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    dense: Option<bool>,

    /// Output file (stdout when omitted); written atomically.
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,

    /// Artifact format.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitFileConfig {
    #[serde(flatten)]
    input: InputFileConfig,
    quantiles: Option<String>,
    lambda: Option<f64>,
    alpha: Option<f64>,
    c: Option<f64>,
    r: Option<usize>,
    seed: Option<u64>,
    post: Option<bool>,
    threshold: Option<f64>,
    dense: Option<bool>,
    output: Option<PathBuf>,
    format: Option<OutputFormat>,
}

#[derive(Debug, Serialize)]
struct FitEffective {
    command: &'static str,
    #[serde(flatten)]
    input: InputEffective,
    quantiles: String,
    lambda: Option<f64>,
    alpha: f64,
    c: f64,
    r: usize,
    seed: u64,
    post: bool,
    threshold: Option<f64>,
    dense: bool,
    output: Option<PathBuf>,
    format: OutputFormat,
}

/// Where the penalty level came from.
#[derive(Debug, Serialize)]
struct LambdaInfo {
    value: f64,
    source: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    calibration: Option<CalibrationEcho>,
}

#[derive(Debug, Serialize)]
struct CalibrationEcho {
    alpha: f64,
    c: f64,
    n_sims: usize,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct PostEntry {
    selected: Vec<usize>,
    empty_model: bool,
    coefficients: BTreeMap<usize, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dense: Option<Vec<f64>>,
    objective: f64,
}

#[derive(Debug, Serialize)]
struct FitEntry {
    u: f64,
    lambda_scaled: f64,
    objective: f64,
    dual_objective: f64,
    iterations: usize,
    support: Vec<usize>,
    support_names: Vec<String>,
    coefficients: BTreeMap<usize, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dense: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    post: Option<PostEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    thresholded: Option<BTreeMap<usize, f64>>,
}

#[derive(Debug, Serialize)]
struct FitArtifact {
    config: FitEffective,
    n: usize,
    p: usize,
    /// Resolved header name of the response column.
    response: Option<String>,
    columns: Vec<String>,
    lambda: LambdaInfo,
    fits: Vec<FitEntry>,
    union_support: Vec<usize>,
    max_support_size: usize,
}

fn sparse_of(support: &[usize], beta: &Coefficients) -> BTreeMap<usize, f64> {
    support.iter().map(|&j| (j, beta.as_slice()[j])).collect()
}

pub fn run(args: FitArgs) -> Result<(), CliError> {
    let file: FitFileConfig = config::load_config_file(args.config.as_deref())?;
    let cfg = FitEffective {
        command: "fit",
        input: args.input.resolve(file.input, true)?,
        quantiles: config::merge(args.quantiles, file.quantiles, "0.5".to_string()),
        lambda: config::merge_opt(args.lambda, file.lambda),
        alpha: config::merge(args.alpha, file.alpha, 0.1),
        c: config::merge(args.c, file.c, 2.0),
        r: config::merge(args.r, file.r, 1000),
        seed: config::merge(args.seed, file.seed, 0),
        post: config::merge(args.post, file.post, true),
        threshold: config::merge_opt(args.threshold, file.threshold),
        dense: config::merge(args.dense, file.dense, false),
        output: config::merge_opt(args.output, file.output),
        format: config::merge(args.format, file.format, OutputFormat::Json),
    };

    let grid = config::parse_quantiles(&cfg.quantiles)?;
    let loaded = cfg.input.load()?;
    let d = &loaded.dataset;

    let lambda = match cfg.lambda {
        Some(value) => {
            if !(value >= 0.0) {
                return Err(CliError::usage(format!(
                    "--lambda must be nonnegative, got {value}"
                )));
            }
            LambdaInfo {
                value,
                source: "fixed",
                calibration: None,
            }
        }
        None => {
            let cal = PenaltyCalibration::run(d, &grid, cfg.r, cfg.alpha, cfg.c, cfg.seed)
                .map_err(|e| classify("calibrate", e))?;
            LambdaInfo {
                value: cal.lambda0,
                source: "calibrated",
                calibration: Some(CalibrationEcho {
                    alpha: cal.alpha,
                    c: cal.c,
                    n_sims: cal.n_sims,
                    seed: cal.seed,
                }),
            }
        }
    };

    let process =
        fit_l1_qr_process(d, &grid, lambda.value).map_err(|e| classify("fit", e))?;

    let mut fits = Vec::with_capacity(process.fits.len());
    for (q, f) in grid.points().iter().zip(process.fits.iter()) {
        let post = if cfg.post {
            let keep = d.intercept_col().is_some();
            let pf = post_l1_qr(d, *q, f, keep).map_err(|e| classify("post", e))?;
            Some(PostEntry {
                selected: pf.selected.clone(),
                empty_model: pf.empty_model,
                coefficients: sparse_of(&pf.refit.support, &pf.beta_post),
                dense: cfg.dense.then(|| pf.beta_post.as_slice().to_vec()),
                objective: pf.refit.primal_objective,
            })
        } else {
            None
        };
        let thresholded = match cfg.threshold {
            Some(gamma) => {
                let t = hard_threshold(f, gamma).map_err(|e| classify("threshold", e))?;
                Some(crate::output::sparse_map(&t, 0.0))
            }
            None => None,
        };
        fits.push(FitEntry {
            u: q.value(),
            lambda_scaled: lambda.value * q.penalty_multiplier(),
            objective: f.primal_objective,
            dual_objective: f.dual_objective,
            iterations: f.iterations,
            support: f.support.clone(),
            support_names: support_names(&f.support, &loaded.column_names),
            coefficients: sparse_of(&f.support, &f.beta),
            dense: cfg.dense.then(|| f.beta.as_slice().to_vec()),
            post,
            thresholded,
        });
    }

    let artifact = FitArtifact {
        n: d.n(),
        p: d.p(),
        response: loaded.response_name.clone(),
        columns: loaded.column_names.clone(),
        lambda,
        fits,
        union_support: process.union_support.clone(),
        max_support_size: process.max_support_size,
        config: cfg,
    };

    let content = match artifact.config.format {
        OutputFormat::Json => to_json_artifact(&artifact)?,
        OutputFormat::Csv => coefficients_csv(&artifact),
    };
    super::emit_artifact(&artifact.config.output, &content)
}

/// Long-format coefficient table: one row per (quantile, column) pair
/// over the union of the penalized and post supports at that quantile.
fn coefficients_csv(artifact: &FitArtifact) -> String {
    let mut rows = Vec::new();
    for entry in &artifact.fits {
        let mut cols: Vec<usize> = entry.coefficients.keys().copied().collect();
        if let Some(post) = &entry.post {
            cols.extend(post.coefficients.keys().copied());
        }
        cols.sort_unstable();
        cols.dedup();
        for j in cols {
            let fmt = |m: &BTreeMap<usize, f64>| {
                m.get(&j).map(|v| v.to_string()).unwrap_or_default()
            };
            rows.push(vec![
                entry.u.to_string(),
                entry.lambda_scaled.to_string(),
                j.to_string(),
                artifact.columns[j].clone(),
                fmt(&entry.coefficients),
                entry.post.as_ref().map(|p| fmt(&p.coefficients)).unwrap_or_default(),
                entry
                    .thresholded
                    .as_ref()
                    .map(|t| fmt(t))
                    .unwrap_or_default(),
            ]);
        }
    }
    super::csv_table(
        &["u", "lambda_scaled", "column", "name", "coefficient", "post_coefficient", "thresholded_coefficient"],
        &rows,
    )
}
