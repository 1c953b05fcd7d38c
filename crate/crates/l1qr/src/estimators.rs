//! Estimators composed from the LP solver: penalized fits over a
//! quantile grid, post-selection refits, hard thresholding, and the
//! λ-relaxation path.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{Coefficients, Dataset, QuantileGrid, QuantileIndex};
use crate::error::{Error, Result};
use crate::solver::{solve_qr_lp, QuantileFit};

/// Penalized fits at every point of a quantile grid, sharing one base
/// penalty level λ (the per-u level is λ√(u(1−u)) inside the solver).
#[derive(Debug, Clone, Serialize)]
pub struct ProcessFit {
    pub grid: QuantileGrid,
    /// One fit per grid point, in grid order.
    pub fits: Vec<QuantileFit>,
    pub lambda: f64,
    /// Union of the per-u supports.
    pub union_support: Vec<usize>,
    /// sup_u |T̂_u|.
    pub max_support_size: usize,
}

impl ProcessFit {
    /// The fit at a grid point, by value match.
    pub fn at(&self, u: QuantileIndex) -> Option<&QuantileFit> {
        self.grid
            .points()
            .iter()
            .position(|q| q.value() == u.value())
            .map(|i| &self.fits[i])
    }
}

/// A post-selection refit: ordinary quantile regression on the columns
/// selected by a first-stage penalized fit.
#[derive(Debug, Clone, Serialize)]
pub struct PostFit {
    pub u: QuantileIndex,
    /// The selection the refit was restricted to.
    pub selected: Vec<usize>,
    pub beta_post: Coefficients,
    /// The refit's own solver output.
    pub refit: QuantileFit,
    /// The first-stage fit that produced the selection.
    pub first_stage: QuantileFit,
    /// True when the selection was empty and the zero-vector convention
    /// applied.
    pub empty_model: bool,
}

/// One step of a λ-relaxation path.
#[derive(Debug, Clone, Serialize)]
pub struct PathStep {
    pub lambda: f64,
    pub support: Vec<usize>,
    pub fit: QuantileFit,
    pub post: PostFit,
}

/// Fits the penalized program at every grid point. Solves are
/// independent and run in parallel; failures are tagged with their
/// quantile index.
pub fn fit_l1_qr_process(d: &Dataset, grid: &QuantileGrid, lambda: f64) -> Result<ProcessFit> {
    let fits: Vec<QuantileFit> = grid
        .points()
        .par_iter()
        .map(|&u| solve_qr_lp(d, u, lambda, None).map_err(|e| e.at_quantile(u.value())))
        .collect::<Result<_>>()?;

    let mut union_support: Vec<usize> = fits.iter().flat_map(|f| f.support.iter().copied()).collect();
    union_support.sort_unstable();
    union_support.dedup();
    let max_support_size = fits.iter().map(|f| f.support.len()).max().unwrap_or(0);

    Ok(ProcessFit {
        grid: grid.clone(),
        fits,
        lambda,
        union_support,
        max_support_size,
    })
}

/// Refits ordinary quantile regression on the support selected by
/// `first`. An empty selection yields the zero vector; with
/// `keep_intercept` set and a flagged intercept column present, the
/// intercept alone is refit instead.
pub fn post_l1_qr(
    d: &Dataset,
    u: QuantileIndex,
    first: &QuantileFit,
    keep_intercept: bool,
) -> Result<PostFit> {
    let mut selected = first.support.clone();
    let mut empty_model = false;
    if selected.is_empty() {
        match (keep_intercept, d.intercept_col()) {
            (true, Some(j)) => selected = vec![j],
            _ => empty_model = true,
        }
    }
    let refit = solve_qr_lp(d, u, 0.0, Some(&selected))?;
    Ok(PostFit {
        u,
        selected,
        beta_post: refit.beta.clone(),
        refit,
        first_stage: first.clone(),
        empty_model,
    })
}

/// Componentwise hard thresholding: keeps β_j only when |β_j| > γ
/// (strict).
pub fn hard_threshold(fit: &QuantileFit, gamma: f64) -> Result<Coefficients> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold gamma must be nonnegative, got {gamma}"
        )));
    }
    let kept: Vec<f64> = fit
        .beta
        .as_slice()
        .iter()
        .map(|&b| if b.abs() > gamma { b } else { 0.0 })
        .collect();
    Ok(Coefficients::from(kept))
}

/// The relaxation sequence λ0/1, λ0/2, …, λ0/K.
pub fn lambda_path(lambda0: f64, k: usize) -> Result<Vec<f64>> {
    if !(lambda0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "path start lambda0 must be positive, got {lambda0}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("path length K must be at least 1".into()));
    }
    Ok((1..=k).map(|div| lambda0 / div as f64).collect())
}

/// Penalized fit, selected support, and post-refit at each λ, in input
/// order. Each λ is solved from scratch; failures are tagged with their
/// λ. No nestedness of supports along a decreasing path is implied.
pub fn selection_path(d: &Dataset, u: QuantileIndex, lambdas: &[f64]) -> Result<Vec<PathStep>> {
    if lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidArgument(
            "selection path requires positive lambdas".into(),
        ));
    }
    lambdas
        .par_iter()
        .map(|&lambda| {
            let run = || -> Result<PathStep> {
                let fit = solve_qr_lp(d, u, lambda, None)?;
                let post = post_l1_qr(d, u, &fit, false)?;
                Ok(PathStep {
                    lambda,
                    support: fit.support.clone(),
                    fit,
                    post,
                })
            };
            run().map_err(|e| e.at_lambda(lambda))
        })
        .collect()
}
