//! `l1qr` — penalized quantile regression from the command line.
//!
//! Exit codes: 0 on success, 1 on usage errors (flags, config files,
//! input data), 2 on numerical failures inside the solver or the
//! simulation harness.

mod commands;
mod config;
mod csv_input;
mod output;

use clap::Parser;

use output::CliError;

#[derive(Parser)]
#[command(
    name = "l1qr",
    version,
    about = "L1-penalized quantile regression: fit, calibrate, path, simulate, diagnose",
    propagate_version = true
)]
struct Cli {
    /// Worker threads; overrides the L1QR_THREADS environment variable.
    /// Results are identical for any thread count.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: commands::Command,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are successful outcomes; everything
            // else clap rejects is a usage error.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    let result = (|| -> Result<(), CliError> {
        if let Some(t) = config::resolve_threads(cli.threads)? {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .map_err(|e| {
                    CliError::usage(format!("cannot configure {t} worker threads: {e}"))
                })?;
        }
        commands::run(cli.command)
    })();

    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
