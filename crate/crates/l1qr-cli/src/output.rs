//! Error classification for exit codes, atomic artifact writes, and the
//! sparse coefficient representation used in JSON outputs.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use l1qr::Coefficients;

/// Exit code 1: the request itself was malformed (flags, config, input
/// files, dimensions). Exit code 2: the computation failed numerically.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> CliError {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Numerical(m) => write!(f, "{m}"),
        }
    }
}

/// Maps library errors onto the exit-code classes: breakdowns inside the
/// solver or the simulation harness are numerical (2); everything else —
/// validation, dimensions, bad arguments — is a usage error (1).
pub fn classify(stage: &str, e: l1qr::Error) -> CliError {
    fn is_numerical(e: &l1qr::Error) -> bool {
        use l1qr::Error::*;
        match e {
            IterationLimit { .. }
            | NumericalBreakdown { .. }
            | Singular { .. }
            | ExcessiveFailures { .. } => true,
            AtQuantile { source, .. } | AtLambda { source, .. } => is_numerical(source),
            _ => false,
        }
    }
    let msg = format!("{stage}: {e}");
    if is_numerical(&e) {
        CliError::Numerical(msg)
    } else {
        CliError::Usage(msg)
    }
}

/// Writes `bytes` to `path` atomically: the content goes to a temporary
/// file in the destination directory which is then renamed over the
/// target, so an interrupted run never leaves a partial artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let io_err = |what: &str, e: std::io::Error| {
        CliError::usage(format!("cannot {what} {}: {e}", path.display()))
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)
        .map_err(|e| io_err("create a temporary file next to", e))?;
    tmp.write_all(bytes).map_err(|e| io_err("write", e))?;
    tmp.flush().map_err(|e| io_err("write", e))?;
    tmp.persist(path)
        .map_err(|e| io_err("finalize", e.error))?;
    Ok(())
}

/// Writes an artifact to the given path atomically, or to stdout when no
/// path was requested. File writes log a confirmation line to stderr so
/// stdout stays clean for piped output.
pub fn emit(path: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            write_atomic(p, content.as_bytes())?;
            eprintln!("wrote {}", p.display());
            Ok(())
        }
        None => {
            if content.ends_with('\n') {
                print!("{content}");
            } else {
                println!("{content}");
            }
            Ok(())
        }
    }
}

/// Pretty-prints a serializable artifact with a trailing newline; struct
/// field order (and therefore key order) is fixed by the type.
pub fn to_json_artifact<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::usage(format!("cannot serialize artifact: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// The sparse `{column index: value}` map for a coefficient vector.
/// `BTreeMap` keeps the keys in ascending numeric order.
pub fn sparse_map(beta: &Coefficients, tol: f64) -> BTreeMap<usize, f64> {
    beta.support(tol)
        .into_iter()
        .map(|j| (j, beta.as_slice()[j]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_of_solver_failures() {
        let num = classify(
            "fit",
            l1qr::Error::IterationLimit {
                limit: 10,
                perturbed: true,
            },
        );
        assert_eq!(num.exit_code(), 2);

        let num = classify(
            "fit",
            l1qr::Error::NumericalBreakdown {
                stage: "basis",
                detail: "x".into(),
            }
            .at_quantile(0.5),
        );
        assert_eq!(num.exit_code(), 2);

        let usage = classify("fit", l1qr::Error::InvalidQuantile { u: 2.0 });
        assert_eq!(usage.exit_code(), 1);

        let usage = classify("fit", l1qr::Error::ZeroScaleColumn { col: 3 });
        assert_eq!(usage.exit_code(), 1);
    }

    #[test]
    fn atomic_write_creates_and_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_atomic(&path, b"first").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "first");
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
        // No temporary files are left behind.
        let leftovers: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .filter(|n| n != "out.json")
            .collect();
        assert!(leftovers.is_empty(), "{leftovers:?}");
    }

    #[test]
    fn sparse_map_keeps_only_support() {
        let beta = Coefficients::from(vec![0.0, 1.5, 0.0, -2.0]);
        let m = sparse_map(&beta, 0.0);
        assert_eq!(m.len(), 2);
        assert_eq!(m[&1], 1.5);
        assert_eq!(m[&3], -2.0);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, r#"{"1":1.5,"3":-2.0}"#);
    }
}
