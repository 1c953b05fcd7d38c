//! `l1qr simulate`: the Monte Carlo study on AR(1) Gaussian location
//! models — penalized, post, canonical, and oracle estimators across
//! replications, with per-replication penalty calibration by default.

use std::path::PathBuf;

use l1qr::{
    run_experiment, DesignSpec, ExperimentConfig, ExperimentReport, PenaltyRule, QuantileIndex,
};
use serde::{Deserialize, Serialize};

use crate::config::{self, OutputFormat, PenaltyRuleArg};
use crate::output::{classify, to_json_artifact, CliError};

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// JSON config file; command-line flags override its values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Observations per replication.
    #[arg(long)]
    n: Option<usize>,

    /// Design columns (including the intercept).
    #[arg(long)]
    p: Option<usize>,

    /// Number of unit coefficients following the zero intercept.
    #[arg(long)]
    s: Option<usize>,

    /// AR(1) correlation of the non-intercept columns.
    #[arg(long)]
    rho: Option<f64>,

    /// Noise standard deviation.
    #[arg(long)]
    sigma: Option<f64>,

    /// Quantile index u.
    #[arg(long)]
    u: Option<f64>,

    /// Number of replications.
    #[arg(long, value_name = "REPS")]
    n_reps: Option<usize>,

    /// Penalty rule: recalibrated per replication, shared across
    /// replications, or fixed.
    #[arg(long, value_enum)]
    penalty_rule: Option<PenaltyRuleArg>,

    /// Calibration miscoverage level α.
    #[arg(long)]
    alpha: Option<f64>,

    /// Calibration multiplier c.
    #[arg(long)]
    c: Option<f64>,

    /// Calibration draws R per calibration.
    #[arg(long, value_name = "R")]
    r: Option<usize>,

    /// Penalty level for --penalty-rule fixed.
    #[arg(long)]
    lambda: Option<f64>,

    /// Comma list of estimators to run (canonical, penalized, post,
    /// oracle).
    #[arg(long, value_name = "LIST")]
    estimators: Option<String>,

    /// Master seed; designs, noise, and calibrations all derive from it.
    #[arg(long)]
    master_seed: Option<u64>,

    /// Output file (stdout when omitted); written atomically.
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,

    /// Artifact format: json for the full report, csv for the summary
    /// table (rows in canonical, penalized, post, oracle order).
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,

    /// Also write the support-size histograms to this CSV file.
    #[arg(long, value_name = "FILE")]
    histograms: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateFileConfig {
    n: Option<usize>,
    p: Option<usize>,
    s: Option<usize>,
    rho: Option<f64>,
    sigma: Option<f64>,
    u: Option<f64>,
    n_reps: Option<usize>,
    penalty_rule: Option<PenaltyRuleArg>,
    alpha: Option<f64>,
    c: Option<f64>,
    r: Option<usize>,
    lambda: Option<f64>,
    estimators: Option<String>,
    master_seed: Option<u64>,
    output: Option<PathBuf>,
    format: Option<OutputFormat>,
    histograms: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct SimulateEffective {
    command: &'static str,
    n: usize,
    p: usize,
    s: usize,
    rho: f64,
    sigma: f64,
    u: f64,
    n_reps: usize,
    penalty_rule: PenaltyRuleArg,
    alpha: f64,
    c: f64,
    r: usize,
    lambda: Option<f64>,
    estimators: String,
    master_seed: u64,
    output: Option<PathBuf>,
    format: OutputFormat,
    histograms: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct SimulateArtifact {
    config: SimulateEffective,
    report: ExperimentReport,
}

pub fn run(args: SimulateArgs) -> Result<(), CliError> {
    let file: SimulateFileConfig = config::load_config_file(args.config.as_deref())?;
    let cfg = SimulateEffective {
        command: "simulate",
        n: config::merge_required(args.n, file.n, "n")?,
        p: config::merge_required(args.p, file.p, "p")?,
        s: config::merge_required(args.s, file.s, "s")?,
        rho: config::merge(args.rho, file.rho, 0.0),
        sigma: config::merge(args.sigma, file.sigma, 1.0),
        u: config::merge(args.u, file.u, 0.5),
        n_reps: config::merge_required(args.n_reps, file.n_reps, "n-reps")?,
        penalty_rule: config::merge(args.penalty_rule, file.penalty_rule, PenaltyRuleArg::Pivotal),
        alpha: config::merge(args.alpha, file.alpha, 0.1),
        c: config::merge(args.c, file.c, 1.0),
        r: config::merge(args.r, file.r, 1000),
        lambda: config::merge_opt(args.lambda, file.lambda),
        estimators: config::merge(
            args.estimators,
            file.estimators,
            "canonical,penalized,post,oracle".to_string(),
        ),
        master_seed: config::merge(args.master_seed, file.master_seed, 0),
        output: config::merge_opt(args.output, file.output),
        format: config::merge(args.format, file.format, OutputFormat::Json),
        histograms: config::merge_opt(args.histograms, file.histograms),
    };

    let penalty = match cfg.penalty_rule {
        PenaltyRuleArg::Pivotal => PenaltyRule::Pivotal {
            alpha: cfg.alpha,
            c: cfg.c,
            n_sims: cfg.r,
        },
        PenaltyRuleArg::SharedPivotal => PenaltyRule::SharedPivotal {
            alpha: cfg.alpha,
            c: cfg.c,
            n_sims: cfg.r,
        },
        PenaltyRuleArg::Fixed => PenaltyRule::Fixed {
            lambda: cfg.lambda.ok_or_else(|| {
                CliError::usage("--penalty-rule fixed requires --lambda")
            })?,
        },
    };

    let experiment = ExperimentConfig {
        design: DesignSpec::location_model(
            cfg.n,
            cfg.p,
            cfg.s,
            cfg.rho,
            cfg.sigma,
            cfg.master_seed,
        )
        .map_err(|e| classify("simulate", e))?,
        u: QuantileIndex::new(cfg.u).map_err(|e| CliError::usage(format!("invalid --u: {e}")))?,
        n_reps: cfg.n_reps,
        penalty,
        estimators: config::parse_estimators(&cfg.estimators)?,
        master_seed: cfg.master_seed,
    };

    let report = run_experiment(&experiment).map_err(|e| classify("simulate", e))?;

    if let Some(hist_path) = &cfg.histograms {
        crate::output::write_atomic(hist_path, report.histogram_csv().as_bytes())?;
        eprintln!("wrote {}", hist_path.display());
    }

    let artifact = SimulateArtifact {
        config: cfg,
        report,
    };
    let content = match artifact.config.format {
        OutputFormat::Json => to_json_artifact(&artifact)?,
        OutputFormat::Csv => artifact.report.table_csv(),
    };
    super::emit_artifact(&artifact.config.output, &content)
}
