//! CSV ingestion: header-based column resolution, strict numeric
//! parsing with per-row error reporting, and optional intercept
//! prepending.

use std::path::Path;

use l1qr::Dataset;
use ndarray::{Array1, Array2};

use crate::output::CliError;

/// How to interpret the file.
pub struct CsvOptions<'a> {
    /// Response column by header name or 0-based index; `None` loads
    /// every column as a design column with a zero response (enough for
    /// commands that never read the response).
    pub response: Option<&'a str>,
    /// Prepend an all-ones column flagged as the intercept.
    pub add_intercept: bool,
    /// Penalize the intercept column like any other (off by default:
    /// an added intercept is exempt from the penalty).
    pub penalize_intercept: bool,
    pub delimiter: u8,
}

/// A parsed dataset plus the naming context used in reports.
#[derive(Debug)]
pub struct LoadedData {
    pub dataset: Dataset,
    /// Design column names in column order; an added intercept appears
    /// as `"(intercept)"` at index 0.
    pub column_names: Vec<String>,
    pub response_name: Option<String>,
}

const MAX_LISTED_CELLS: usize = 8;

/// Reads a headed CSV into a [`Dataset`]. Every cell must parse as a
/// finite number; offending cells are reported with their line numbers
/// (line 1 is the header). Fewer than 2 data rows is an error.
pub fn parse_csv_dataset(path: &Path, opts: &CsvOptions) -> Result<LoadedData, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .delimiter(opts.delimiter)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::usage(format!("cannot read header of {}: {e}", path.display())))?
        .iter()
        .map(|h| h.to_string())
        .collect();
    if headers.is_empty() {
        return Err(CliError::usage(format!(
            "{} has an empty header row",
            path.display()
        )));
    }

    let response_idx = match opts.response {
        None => None,
        Some(spec) => Some(resolve_column(&headers, spec)?),
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut bad_cells: Vec<String> = Vec::new();
    let mut bad_rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| {
            CliError::usage(format!("malformed CSV in {}: {e}", path.display()))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != headers.len() {
            return Err(CliError::usage(format!(
                "line {line} of {} has {} cells but the header has {} columns",
                path.display(),
                record.len(),
                headers.len()
            )));
        }
        let mut row = Vec::with_capacity(headers.len());
        let mut row_ok = true;
        for (j, cell) in record.iter().enumerate() {
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    row_ok = false;
                    if bad_cells.len() < MAX_LISTED_CELLS {
                        bad_cells.push(format!(
                            "line {line}, column {:?}: {cell:?}",
                            headers[j]
                        ));
                    }
                }
            }
        }
        if row_ok {
            rows.push(row);
        } else {
            bad_rows += 1;
        }
    }
    if bad_rows > 0 {
        let mut listed = bad_cells.join("; ");
        if bad_rows > MAX_LISTED_CELLS {
            listed.push_str("; …");
        }
        return Err(CliError::usage(format!(
            "{} has {bad_rows} row(s) with non-numeric cells: {listed}",
            path.display()
        )));
    }
    if rows.len() < 2 {
        return Err(CliError::usage(format!(
            "{} has {} data row(s); at least 2 are required",
            path.display(),
            rows.len()
        )));
    }

    let n = rows.len();
    let intercept_cols = usize::from(opts.add_intercept);
    let p = headers.len() - usize::from(response_idx.is_some()) + intercept_cols;
    if p == 0 {
        return Err(CliError::usage(format!(
            "{} has no design columns left after removing the response",
            path.display()
        )));
    }

    let mut x = Array2::zeros((n, p));
    let mut y = Array1::zeros(n);
    let mut column_names = Vec::with_capacity(p);
    if opts.add_intercept {
        column_names.push("(intercept)".to_string());
    }
    for (j, name) in headers.iter().enumerate() {
        if response_idx != Some(j) {
            column_names.push(name.clone());
        }
    }
    for (i, row) in rows.iter().enumerate() {
        if opts.add_intercept {
            x[[i, 0]] = 1.0;
        }
        let mut out = intercept_cols;
        for (j, &v) in row.iter().enumerate() {
            if response_idx == Some(j) {
                y[i] = v;
            } else {
                x[[i, out]] = v;
                out += 1;
            }
        }
    }

    let intercept_col = opts.add_intercept.then_some(0);
    let dataset = Dataset::new(x, y, intercept_col)
        .map_err(|e| CliError::usage(format!("invalid data in {}: {e}", path.display())))?
        .with_exempt_intercept(opts.add_intercept && !opts.penalize_intercept);
    let response_name = response_idx.map(|j| headers[j].clone());
    Ok(LoadedData {
        dataset,
        column_names,
        response_name,
    })
}

/// Resolves a column spec against the header: a bare integer is a
/// 0-based index, anything else is matched by name.
fn resolve_column(headers: &[String], spec: &str) -> Result<usize, CliError> {
    if let Ok(idx) = spec.parse::<usize>() {
        if idx >= headers.len() {
            return Err(CliError::usage(format!(
                "response column index {idx} is out of range: the file has {} columns",
                headers.len()
            )));
        }
        return Ok(idx);
    }
    headers.iter().position(|h| h == spec).ok_or_else(|| {
        CliError::usage(format!(
            "response column {spec:?} not found; the file has columns: {}",
            headers.join(", ")
        ))
    })
}
