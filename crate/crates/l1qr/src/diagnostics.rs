//! Design and selection diagnostics: sparse eigenvalues of symmetric
//! PSD matrices (exact enumeration under a budget, greedy bound beyond
//! it), support-recovery metrics, and restricted-set membership.

use ndarray::Array2;
use serde::Serialize;

use crate::data::{Coefficients, Dataset};
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigenvalues;

/// Exact-mode enumeration budget on the number of principal submatrices.
pub const EXACT_BUDGET: u64 = 2_000_000;

/// How a sparse-eigenvalue computation should proceed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMode {
    /// Enumerate all C(p,k) principal submatrices; error above budget.
    Exact,
    /// Greedy forward selection; one-sided bound.
    Greedy,
    /// Exact when within budget, greedy otherwise.
    Auto,
}

/// How the reported value relates to the true sparse eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SparseEigenKind {
    Exact,
    /// Greedy value: a lower bound for the max problem, an upper bound
    /// for the min problem.
    GreedyBound,
}

/// Origin of the matrix a sparse-eigenvalue result was computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    /// The empirical second moment E_n[x x'] of a dataset.
    Empirical,
    Supplied,
}

/// A sparse-eigenvalue value φ(k) (max mode) or its min-mode analog,
/// with the subset attaining it.
#[derive(Debug, Clone, Serialize)]
pub struct SparseEigenResult {
    pub k: usize,
    pub value: f64,
    pub mode: SparseEigenKind,
    pub matrix_kind: MatrixKind,
    /// The attaining (exact) or selected (greedy) column subset.
    pub subset: Vec<usize>,
    pub n_subsets_evaluated: u64,
}

/// Support-recovery bookkeeping between an estimated and a true support.
#[derive(Debug, Clone, Serialize)]
pub struct SupportMetrics {
    pub true_support: Vec<usize>,
    pub est_support: Vec<usize>,
    pub n_selected: usize,
    pub n_correct: usize,
    pub n_wrong: usize,
    pub includes_truth: bool,
    pub exact: bool,
}

/// The empirical second moment matrix X'X/n.
pub fn empirical_second_moment(d: &Dataset) -> Array2<f64> {
    let n = d.n() as f64;
    let xt = d.x().t();
    xt.dot(d.x()) / n
}

/// C(p, k), saturating above the budget so callers can compare.
fn n_choose_k_capped(p: usize, k: usize, cap: u64) -> u64 {
    let k = k.min(p - k);
    let mut acc: f64 = 1.0;
    for i in 0..k {
        acc = acc * (p - i) as f64 / (i + 1) as f64;
        if acc > 2.0 * cap as f64 {
            return u64::MAX;
        }
    }
    acc.round() as u64
}

fn check_input(m: &Array2<f64>, k: usize) -> Result<usize> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(Error::DimensionMismatch {
            context: "sparse eigenvalue matrix must be square",
            expected: rows,
            got: cols,
        });
    }
    let p = rows;
    if k == 0 || k > p {
        return Err(Error::InvalidArgument(format!(
            "sparsity level k={k} must satisfy 1 <= k <= p={p}"
        )));
    }
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    for i in 0..p {
        for j in (i + 1)..p {
            if (m[[i, j]] - m[[j, i]]).abs() > 1e-10 * scale {
                return Err(Error::NotPsd);
            }
        }
    }
    if p <= 64 {
        let flat: Vec<f64> = m.iter().copied().collect();
        let eig = symmetric_eigenvalues(&flat, p);
        if eig[0] < -1e-10 * scale {
            return Err(Error::NotPsd);
        }
    } else if (0..p).any(|i| m[[i, i]] < -1e-10 * scale) {
        return Err(Error::NotPsd);
    }
    Ok(p)
}

fn submatrix_extreme(m: &Array2<f64>, subset: &[usize], want_max: bool) -> f64 {
    let k = subset.len();
    let mut buf = vec![0.0; k * k];
    for (a, &i) in subset.iter().enumerate() {
        for (b, &j) in subset.iter().enumerate() {
            buf[a * k + b] = m[[i, j]];
        }
    }
    let eig = symmetric_eigenvalues(&buf, k);
    if want_max {
        eig[k - 1]
    } else {
        eig[0]
    }
}

fn sparse_eigen(
    m: &Array2<f64>,
    k: usize,
    mode: EigenMode,
    want_max: bool,
    matrix_kind: MatrixKind,
) -> Result<SparseEigenResult> {
    let p = check_input(m, k)?;
    let count = n_choose_k_capped(p, k, EXACT_BUDGET);
    let use_exact = match mode {
        EigenMode::Exact => {
            if count > EXACT_BUDGET {
                return Err(Error::BudgetExceeded {
                    p,
                    k,
                    budget: EXACT_BUDGET,
                });
            }
            true
        }
        EigenMode::Greedy => false,
        EigenMode::Auto => count <= EXACT_BUDGET,
    };

    if use_exact {
        let mut best = if want_max { f64::NEG_INFINITY } else { f64::INFINITY };
        let mut best_subset: Vec<usize> = (0..k).collect();
        let mut subset: Vec<usize> = (0..k).collect();
        let mut evaluated = 0u64;
        loop {
            let v = submatrix_extreme(m, &subset, want_max);
            evaluated += 1;
            if (want_max && v > best) || (!want_max && v < best) {
                best = v;
                best_subset = subset.clone();
            }
            // Advance to the next k-combination in lexicographic order.
            let mut i = k;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if subset[i] != i + p - k {
                    subset[i] += 1;
                    for j in (i + 1)..k {
                        subset[j] = subset[j - 1] + 1;
                    }
                    break;
                }
                if i == 0 {
                    return Ok(SparseEigenResult {
                        k,
                        value: best.max(0.0),
                        mode: SparseEigenKind::Exact,
                        matrix_kind,
                        subset: best_subset,
                        n_subsets_evaluated: evaluated,
                    });
                }
            }
        }
    } else {
        let mut chosen: Vec<usize> = Vec::with_capacity(k);
        let mut evaluated = 0u64;
        let mut value = 0.0;
        for _ in 0..k {
            let mut best_j = None;
            let mut best_v = if want_max { f64::NEG_INFINITY } else { f64::INFINITY };
            for j in 0..p {
                if chosen.contains(&j) {
                    continue;
                }
                let mut trial = chosen.clone();
                trial.push(j);
                trial.sort_unstable();
                let v = submatrix_extreme(m, &trial, want_max);
                evaluated += 1;
                if (want_max && v > best_v) || (!want_max && v < best_v) {
                    best_v = v;
                    best_j = Some(j);
                }
            }
            let j = best_j.expect("p >= k guarantees a candidate");
            chosen.push(j);
            chosen.sort_unstable();
            value = best_v;
        }
        Ok(SparseEigenResult {
            k,
            value: value.max(0.0),
            mode: SparseEigenKind::GreedyBound,
            matrix_kind,
            subset: chosen,
            n_subsets_evaluated: evaluated,
        })
    }
}

/// φ(k): the maximal eigenvalue over all k-column principal submatrices
/// of a symmetric PSD matrix. Exact mode enumerates (budgeted); greedy
/// mode reports a lower bound.
pub fn max_sparse_eigenvalue(m: &Array2<f64>, k: usize, mode: EigenMode) -> Result<SparseEigenResult> {
    sparse_eigen(m, k, mode, true, MatrixKind::Supplied)
}

/// The minimal eigenvalue over all k-column principal submatrices.
/// Greedy mode reports an upper bound.
pub fn min_sparse_eigenvalue(m: &Array2<f64>, k: usize, mode: EigenMode) -> Result<SparseEigenResult> {
    sparse_eigen(m, k, mode, false, MatrixKind::Supplied)
}

/// [`max_sparse_eigenvalue`] on a dataset's empirical second moment.
pub fn max_sparse_eigenvalue_empirical(
    d: &Dataset,
    k: usize,
    mode: EigenMode,
) -> Result<SparseEigenResult> {
    sparse_eigen(&empirical_second_moment(d), k, mode, true, MatrixKind::Empirical)
}

/// [`min_sparse_eigenvalue`] on a dataset's empirical second moment.
pub fn min_sparse_eigenvalue_empirical(
    d: &Dataset,
    k: usize,
    mode: EigenMode,
) -> Result<SparseEigenResult> {
    sparse_eigen(&empirical_second_moment(d), k, mode, false, MatrixKind::Empirical)
}

/// Compares the tolerance-based support of an estimate against a true
/// support.
pub fn support_metrics(beta_est: &Coefficients, truth: &[usize], tol: f64) -> SupportMetrics {
    let est_support = beta_est.support(tol);
    let mut true_support = truth.to_vec();
    true_support.sort_unstable();
    true_support.dedup();
    let n_correct = est_support
        .iter()
        .filter(|j| true_support.binary_search(j).is_ok())
        .count();
    let n_selected = est_support.len();
    let n_wrong = n_selected - n_correct;
    let includes_truth = n_correct == true_support.len();
    let exact = includes_truth && n_wrong == 0;
    SupportMetrics {
        true_support,
        est_support,
        n_selected,
        n_correct,
        n_wrong,
        includes_truth,
        exact,
    }
}

/// Whether δ lies in the restricted set: ‖δ off truth‖₁ ≤ c₀·‖δ on
/// truth‖₁, and (when `n` is supplied) at most n nonzero off-truth
/// coordinates.
pub fn restricted_set_membership(
    delta: &Coefficients,
    truth: &[usize],
    c0: f64,
    n: Option<usize>,
) -> bool {
    let mut on = 0.0;
    let mut off = 0.0;
    let mut off_l0 = 0usize;
    for (j, &v) in delta.as_slice().iter().enumerate() {
        if truth.contains(&j) {
            on += v.abs();
        } else {
            off += v.abs();
            if v != 0.0 {
                off_l0 += 1;
            }
        }
    }
    if let Some(n) = n {
        if off_l0 > n {
            return false;
        }
    }
    off <= c0 * on
}

/// The AR(1) Toeplitz matrix Σ_ij = ρ^|i−j|, the population second
/// moment of the simulated designs' non-intercept block.
pub fn ar1_toeplitz(p: usize, rho: f64) -> Array2<f64> {
    Array2::from_shape_fn((p, p), |(i, j)| {
        rho.powi((i as i64 - j as i64).unsigned_abs() as i32)
    })
}
