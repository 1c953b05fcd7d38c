//! `l1qr diagnose`: largest and smallest k-sparse eigenvalues of either
//! a design's empirical second-moment matrix (from a CSV file) or a
//! population AR(1) Toeplitz matrix.

use std::path::PathBuf;

use l1qr::diagnostics::{
    ar1_toeplitz, max_sparse_eigenvalue, max_sparse_eigenvalue_empirical, min_sparse_eigenvalue,
    min_sparse_eigenvalue_empirical, SparseEigenResult,
};
use serde::{Deserialize, Serialize};

use super::{join_support, InputArgs, InputEffective, InputFileConfig};
use crate::config::{self, EigenModeArg, OutputFormat};
use crate::output::{classify, to_json_artifact, CliError};

#[derive(Debug, clap::Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    input: InputArgs,

    /// JSON config file; command-line flags override its values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Correlation of a population AR(1) matrix (used instead of
    /// --input; requires --dim).
    #[arg(long, value_name = "RHO", conflicts_with = "input")]
    ar1_rho: Option<f64>,

    /// Dimension of the population AR(1) matrix.
    #[arg(long, value_name = "P")]
    dim: Option<usize>,

    /// Sparsity level k of the principal submatrices.
    #[arg(long)]
    k: Option<usize>,

    /// Search mode: exhaustive, greedy bound, or size-based choice.
    #[arg(long, value_enum)]
    mode: Option<EigenModeArg>,

    /// Output file (stdout when omitted); written atomically.
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,

    /// Artifact format.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiagnoseFileConfig {
    #[serde(flatten)]
    input: InputFileConfig,
    ar1_rho: Option<f64>,
    dim: Option<usize>,
    k: Option<usize>,
    mode: Option<EigenModeArg>,
    output: Option<PathBuf>,
    format: Option<OutputFormat>,
}

#[derive(Debug, Serialize)]
struct DiagnoseEffective {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<InputEffective>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ar1_rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    k: usize,
    mode: EigenModeArg,
    output: Option<PathBuf>,
    format: OutputFormat,
}

#[derive(Debug, Serialize)]
struct DiagnoseArtifact {
    config: DiagnoseEffective,
    p: usize,
    max: SparseEigenResult,
    min: SparseEigenResult,
}

pub fn run(args: DiagnoseArgs) -> Result<(), CliError> {
    let file: DiagnoseFileConfig = config::load_config_file(args.config.as_deref())?;
    let ar1_rho = config::merge_opt(args.ar1_rho, file.ar1_rho);
    let dim = config::merge_opt(args.dim, file.dim);
    let has_input = args.input.input.is_some() || file.input.input.is_some();
    let input = if has_input {
        Some(args.input.resolve(file.input, false)?)
    } else {
        None
    };
    let cfg = DiagnoseEffective {
        command: "diagnose",
        input,
        ar1_rho,
        dim,
        k: config::merge_required(args.k, file.k, "k")?,
        mode: config::merge(args.mode, file.mode, EigenModeArg::Auto),
        output: config::merge_opt(args.output, file.output),
        format: config::merge(args.format, file.format, OutputFormat::Json),
    };

    let mode = cfg.mode.into();
    let (p, max, min) = match (&cfg.input, cfg.ar1_rho) {
        (Some(input), None) => {
            let loaded = input.load()?;
            let d = &loaded.dataset;
            let max = max_sparse_eigenvalue_empirical(d, cfg.k, mode)
                .map_err(|e| classify("diagnose", e))?;
            let min = min_sparse_eigenvalue_empirical(d, cfg.k, mode)
                .map_err(|e| classify("diagnose", e))?;
            (d.p(), max, min)
        }
        (None, Some(rho)) => {
            let p = cfg.dim.ok_or_else(|| {
                CliError::usage("--ar1-rho requires --dim for the matrix dimension")
            })?;
            if !(rho.abs() < 1.0) {
                return Err(CliError::usage(format!(
                    "--ar1-rho must be in (-1, 1), got {rho}"
                )));
            }
            if p == 0 {
                return Err(CliError::usage("--dim must be at least 1"));
            }
            let m = ar1_toeplitz(p, rho);
            let max =
                max_sparse_eigenvalue(&m, cfg.k, mode).map_err(|e| classify("diagnose", e))?;
            let min =
                min_sparse_eigenvalue(&m, cfg.k, mode).map_err(|e| classify("diagnose", e))?;
            (p, max, min)
        }
        (Some(_), Some(_)) => {
            return Err(CliError::usage(
                "choose one matrix source: --input or --ar1-rho",
            ))
        }
        (None, None) => {
            return Err(CliError::usage(
                "a matrix source is required: --input FILE or --ar1-rho RHO with --dim P",
            ))
        }
    };

    let artifact = DiagnoseArtifact {
        config: cfg,
        p,
        max,
        min,
    };
    let content = match artifact.config.format {
        OutputFormat::Json => to_json_artifact(&artifact)?,
        OutputFormat::Csv => {
            let row = |label: &str, r: &SparseEigenResult| {
                vec![
                    label.to_string(),
                    r.k.to_string(),
                    r.value.to_string(),
                    format!("{:?}", r.mode).to_lowercase(),
                    r.n_subsets_evaluated.to_string(),
                    join_support(&r.subset),
                ]
            };
            super::csv_table(
                &["extreme", "k", "value", "mode", "n_subsets_evaluated", "subset"],
                &[row("max", &artifact.max), row("min", &artifact.min)],
            )
        }
    };
    super::emit_artifact(&artifact.config.output, &content)
}
