//! Exact solution of the penalized quantile regression linear program.
//!
//! [`solve_qr_lp`] returns an optimal basic feasible solution together
//! with the dual rank scores; [`verify_optimality`] recomputes every
//! optimality quantity from scratch for auditing.

mod simplex;

use serde::{Deserialize, Serialize};

use crate::data::{penalized_objective, Coefficients, Dataset, QuantileIndex};
use crate::error::{Error, Result};
use crate::tol;

/// Position of an LP variable relative to the optimal basis. Variables
/// here have no finite upper bounds, so `NonbasicUpper` never occurs in
/// solutions of this program; it exists for report compatibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisStatus {
    Basic,
    NonbasicLower,
    NonbasicUpper,
}

/// An optimal basic solution of the quantile regression program at one
/// quantile index, with its dual rank scores.
///
/// LP variables are ordered ξ⁺ (one per observation), ξ⁻, β⁺ (one per
/// column), β⁻; `basis_status` follows that order.
#[derive(Debug, Clone, Serialize)]
pub struct QuantileFit {
    pub u: QuantileIndex,
    pub lambda: f64,
    pub beta: Coefficients,
    /// Rank scores â(u), each in [u−1, u].
    pub dual_scores: Vec<f64>,
    /// Columns j with |β_j| above the support tolerance, ascending.
    pub support: Vec<usize>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Count of observations with y_i = x_i'β̂ within the residual
    /// tolerance.
    pub n_interpolated: usize,
    pub basis_status: Vec<BasisStatus>,
    /// The column restriction the fit was solved under, when any.
    pub restrict: Option<Vec<usize>>,
    /// Simplex pivots performed.
    pub iterations: usize,
    /// True when the solve needed the perturbed-restart rescue.
    pub perturbed: bool,
}

impl QuantileFit {
    /// The support tolerance used for this fit's support set.
    pub fn support_tol(&self) -> f64 {
        tol::SUPPORT_TOL * self.beta.linf().max(1.0)
    }

    /// |primal − dual| bound the fit is expected to satisfy.
    pub fn gap_tol(&self) -> f64 {
        tol::GAP_TOL * (1.0 + self.primal_objective.abs())
    }
}

/// Per-coefficient dual detail in an [`OptimalityReport`].
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientSlack {
    pub col: usize,
    pub beta: f64,
    /// E_n[x_ij â_i].
    pub correlation: f64,
    /// λ√(u(1−u))·σ̂_j / n, the dual constraint bound.
    pub bound: f64,
    /// Whether the dual constraint is active (at either bound) within
    /// the slack tolerance.
    pub active: bool,
    /// For support members: active at the bound whose sign matches β_j.
    pub sign_consistent: bool,
    /// Active at a bound without support membership (degenerate, allowed).
    pub degenerate_active: bool,
}

/// Recomputed optimality evidence for a [`QuantileFit`].
#[derive(Debug, Clone, Serialize)]
pub struct OptimalityReport {
    /// primal − dual, recomputed from data (≥ −roundoff by weak duality).
    pub duality_gap: f64,
    pub max_dual_box_violation: f64,
    /// Max violation of |E_n[x_ij â_i]| ≤ λ√(u(1−u))σ̂_j/n over columns
    /// the fit was allowed to use.
    pub max_dual_constraint_violation: f64,
    pub complementary_slackness_ok: bool,
    pub details: Vec<CoefficientSlack>,
}

/// Solves the ℓ1-penalized quantile regression program
///
///   min over b of (1/n)Σ_i ρ_u(y_i − x_i'b) + (λ√(u(1−u))/n)Σ_j σ̂_j|b_j|
///
/// as a linear program, returning an optimal basic feasible solution.
/// With `restrict` given, coefficients outside the restriction are fixed
/// at zero (λ = 0 plus a support restriction is the post-selection
/// refit). With λ = 0 and no restriction this is ordinary quantile
/// regression; p > n is allowed and yields a basic solution.
pub fn solve_qr_lp(
    d: &Dataset,
    u: QuantileIndex,
    lambda: f64,
    restrict: Option<&[usize]>,
) -> Result<QuantileFit> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::NegativePenalty { lambda });
    }
    let n = d.n();
    let p = d.p();

    let allowed: Option<Vec<bool>> = match restrict {
        None => None,
        Some(cols) => {
            let mut mask = vec![false; p];
            for &j in cols {
                if j >= p {
                    return Err(Error::ColumnOutOfRange { col: j, p });
                }
                mask[j] = true;
            }
            Some(mask)
        }
    };

    let mut xcols = vec![0.0; n * p];
    for j in 0..p {
        for i in 0..n {
            xcols[j * n + i] = d.x()[[i, j]];
        }
    }
    let y: Vec<f64> = d.y().to_vec();
    let lam_u = lambda * u.penalty_multiplier();
    let beta_cost: Vec<f64> = (0..p).map(|j| lam_u * d.penalty_weight(j)).collect();

    let prog = simplex::Program {
        n,
        p,
        xcols: &xcols,
        y: &y,
        cost_pos: u.value(),
        cost_neg: 1.0 - u.value(),
        beta_cost: &beta_cost,
        allowed: allowed.as_deref(),
    };
    let sol = simplex::solve(&prog)?;

    let mut beta = vec![0.0; p];
    let mut basis_status = vec![BasisStatus::NonbasicLower; 2 * n + 2 * p];
    for (r, &col) in sol.basis.iter().enumerate() {
        basis_status[col] = BasisStatus::Basic;
        if col >= 2 * n {
            let v = sol.x_basic[r];
            if col < 2 * n + p {
                beta[col - 2 * n] += v;
            } else {
                beta[col - 2 * n - p] -= v;
            }
        }
    }
    let beta = Coefficients::from(beta);

    let uv = u.value();
    let dual_scores: Vec<f64> = sol.pi.iter().map(|&v| v.clamp(uv - 1.0, uv)).collect();

    let primal_objective = penalized_objective(d, u, lambda, &beta)?;
    let dual_objective =
        dual_scores.iter().zip(d.y()).map(|(a, y)| a * y).sum::<f64>() / n as f64;

    let support_tol = tol::SUPPORT_TOL * beta.linf().max(1.0);
    let support = beta.support(support_tol);

    let resid = d.residuals(&beta);
    let n_interpolated = resid
        .iter()
        .zip(d.y())
        .filter(|(r, y)| r.abs() <= tol::RESIDUAL_TOL * (1.0 + y.abs()))
        .count();

    Ok(QuantileFit {
        u,
        lambda,
        beta,
        dual_scores,
        support,
        primal_objective,
        dual_objective,
        n_interpolated,
        basis_status,
        restrict: restrict.map(|r| r.to_vec()),
        iterations: sol.iterations,
        perturbed: sol.perturbed,
    })
}

/// Recomputes all dual feasibility and complementary slackness
/// quantities of a fit from scratch. Dual constraints are checked for
/// every column the fit was allowed to use; a constraint active at a
/// bound without support membership is reported as degenerate but does
/// not fail the check.
pub fn verify_optimality(fit: &QuantileFit, d: &Dataset) -> OptimalityReport {
    let n = d.n();
    let p = d.p();
    let uv = fit.u.value();
    let lam_u = fit.lambda * fit.u.penalty_multiplier();
    let support_tol = fit.support_tol();

    let primal = penalized_objective(d, fit.u, fit.lambda, &fit.beta)
        .expect("fit produced for this dataset");
    let dual = fit
        .dual_scores
        .iter()
        .zip(d.y())
        .map(|(a, y)| a * y)
        .sum::<f64>()
        / n as f64;

    let max_dual_box_violation = fit
        .dual_scores
        .iter()
        .map(|&a| (a - uv).max((uv - 1.0) - a).max(0.0))
        .fold(0.0f64, f64::max);

    let in_restrict = |j: usize| match &fit.restrict {
        None => true,
        Some(cols) => cols.contains(&j),
    };

    let mut max_dual_constraint_violation = 0.0f64;
    let mut complementary_slackness_ok = true;
    let mut details = Vec::with_capacity(p);
    for j in 0..p {
        if !in_restrict(j) {
            continue;
        }
        let correlation = d
            .x()
            .column(j)
            .iter()
            .zip(&fit.dual_scores)
            .map(|(x, a)| x * a)
            .sum::<f64>()
            / n as f64;
        let bound = lam_u * d.penalty_weight(j) / n as f64;
        max_dual_constraint_violation =
            max_dual_constraint_violation.max(correlation.abs() - bound);

        let bj = fit.beta.as_slice()[j];
        let in_support = bj.abs() > support_tol;
        let active = bound - correlation.abs() <= tol::SLACK_TOL;
        let sign_consistent = if in_support {
            (correlation - bj.signum() * bound).abs() <= tol::SLACK_TOL
        } else {
            true
        };
        if in_support && !sign_consistent {
            complementary_slackness_ok = false;
        }
        details.push(CoefficientSlack {
            col: j,
            beta: bj,
            correlation,
            bound,
            active,
            sign_consistent,
            degenerate_active: active && !in_support,
        });
    }

    OptimalityReport {
        duality_gap: primal - dual,
        max_dual_box_violation,
        max_dual_constraint_violation: max_dual_constraint_violation.max(0.0),
        complementary_slackness_ok,
        details,
    }
}
