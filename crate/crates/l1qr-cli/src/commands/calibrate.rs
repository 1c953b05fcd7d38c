//! `l1qr calibrate`: simulate the pivotal statistic on a CSV design and
//! report the penalty level λ0 = c × (1−α)-quantile together with every
//! draw. The response column, if any, is never read.

use std::path::PathBuf;

use l1qr::{theoretical_scale, PenaltyCalibration};
use serde::{Deserialize, Serialize};

use super::{InputArgs, InputEffective, InputFileConfig};
use crate::config::{self, OutputFormat};
use crate::output::{classify, to_json_artifact, CliError};

#[derive(Debug, clap::Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    input: InputArgs,

    /// JSON config file; command-line flags override its values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Quantile grid U for the supremum: comma list or lo:hi:step range.
    #[arg(long, value_name = "SPEC")]
    quantiles: Option<String>,

    /// Miscoverage level α.
    #[arg(long)]
    alpha: Option<f64>,

    /// Multiplier c on the simulated quantile.
    #[arg(long)]
    c: Option<f64>,

    /// Number of draws R.
    #[arg(long, value_name = "R")]
    r: Option<usize>,

    /// Seed for the draws.
    #[arg(long)]
    seed: Option<u64>,

    /// Output file (stdout when omitted); written atomically.
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,

    /// Artifact format (csv lists the draws, one per row).
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrateFileConfig {
    #[serde(flatten)]
    input: InputFileConfig,
    quantiles: Option<String>,
    alpha: Option<f64>,
    c: Option<f64>,
    r: Option<usize>,
    seed: Option<u64>,
    output: Option<PathBuf>,
    format: Option<OutputFormat>,
}

#[derive(Debug, Serialize)]
struct CalibrateEffective {
    command: &'static str,
    #[serde(flatten)]
    input: InputEffective,
    quantiles: String,
    alpha: f64,
    c: f64,
    r: usize,
    seed: u64,
    output: Option<PathBuf>,
    format: OutputFormat,
}

#[derive(Debug, Serialize)]
struct CalibrateArtifact {
    config: CalibrateEffective,
    n: usize,
    p: usize,
    /// The asymptotic scale √(u(1−u))-weighted √(n log p) benchmark for
    /// the same grid, for context.
    theoretical_scale: f64,
    calibration: PenaltyCalibration,
}

pub fn run(args: CalibrateArgs) -> Result<(), CliError> {
    let file: CalibrateFileConfig = config::load_config_file(args.config.as_deref())?;
    let cfg = CalibrateEffective {
        command: "calibrate",
        input: args.input.resolve(file.input, false)?,
        quantiles: config::merge(args.quantiles, file.quantiles, "0.5".to_string()),
        alpha: config::merge(args.alpha, file.alpha, 0.1),
        c: config::merge(args.c, file.c, 2.0),
        r: config::merge(args.r, file.r, 1000),
        seed: config::merge(args.seed, file.seed, 0),
        output: config::merge_opt(args.output, file.output),
        format: config::merge(args.format, file.format, OutputFormat::Json),
    };

    let grid = config::parse_quantiles(&cfg.quantiles)?;
    let loaded = cfg.input.load()?;
    let d = &loaded.dataset;

    let calibration = PenaltyCalibration::run(d, &grid, cfg.r, cfg.alpha, cfg.c, cfg.seed)
        .map_err(|e| classify("calibrate", e))?;

    let artifact = CalibrateArtifact {
        n: d.n(),
        p: d.p(),
        theoretical_scale: theoretical_scale(d.n(), d.p(), &grid),
        calibration,
        config: cfg,
    };

    let content = match artifact.config.format {
        OutputFormat::Json => to_json_artifact(&artifact)?,
        OutputFormat::Csv => {
            let rows: Vec<Vec<String>> = artifact
                .calibration
                .lambda_samples
                .iter()
                .enumerate()
                .map(|(i, s)| vec![i.to_string(), s.to_string()])
                .collect();
            super::csv_table(&["draw", "lambda_sample"], &rows)
        }
    };
    super::emit_artifact(&artifact.config.output, &content)
}
