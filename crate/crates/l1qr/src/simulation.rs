//! AR(1) Gaussian designs under a location model and a deterministic
//! Monte Carlo harness comparing the unpenalized, penalized,
//! post-selection, and oracle quantile regression estimators.
//!
//! Every random draw comes from a stream keyed by a seed and a
//! replication index, so reports are pure functions of the experiment
//! configuration and do not depend on thread count or scheduling.

use std::collections::BTreeMap;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{Coefficients, Dataset, QuantileGrid, QuantileIndex};
use crate::diagnostics::support_metrics;
use crate::error::{Error, Result};
use crate::estimators::post_l1_qr;
use crate::penalty::{penalty_level, simulate_pivotal_lambda};
use crate::rng::{derive_seed, stream_rng};
use crate::solver::{solve_qr_lp, QuantileFit};
use crate::tol;

/// Synthetic design family: an intercept column followed by p−1 jointly
/// Gaussian covariates with Toeplitz correlation ρ^|j−k|, and response
/// y = x'β + σ·ε with standard normal ε.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignSpec {
    pub n: usize,
    pub p: usize,
    /// Number of nonzero coordinates of `beta_pattern`.
    pub s: usize,
    /// Neighbor correlation of the covariate block, |rho| < 1.
    pub rho: f64,
    pub sigma_noise: f64,
    /// The location-model coefficient vector, length p, intercept first.
    pub beta_pattern: Coefficients,
    pub seed: u64,
}

impl DesignSpec {
    /// The benchmark pattern: intercept zero, then `s` unit
    /// coefficients, then zeros.
    pub fn location_model(
        n: usize,
        p: usize,
        s: usize,
        rho: f64,
        sigma_noise: f64,
        seed: u64,
    ) -> Result<DesignSpec> {
        if p < s + 1 {
            return Err(Error::InvalidArgument(format!(
                "need p >= s + 1 for an intercept plus {s} unit coefficients, got p = {p}"
            )));
        }
        let mut pattern = vec![0.0; p];
        for b in pattern.iter_mut().skip(1).take(s) {
            *b = 1.0;
        }
        let spec = DesignSpec {
            n,
            p,
            s,
            rho,
            sigma_noise,
            beta_pattern: Coefficients::from(pattern),
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::InvalidArgument(format!(
                "design needs n >= 1 and p >= 1, got n = {}, p = {}",
                self.n, self.p
            )));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "correlation rho must satisfy |rho| < 1, got {}",
                self.rho
            )));
        }
        if !(self.sigma_noise > 0.0 && self.sigma_noise.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sigma_noise must be positive and finite, got {}",
                self.sigma_noise
            )));
        }
        if self.beta_pattern.len() != self.p {
            return Err(Error::DimensionMismatch {
                context: "beta_pattern length must equal p",
                expected: self.p,
                got: self.beta_pattern.len(),
            });
        }
        if let Some(idx) = self.beta_pattern.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "beta_pattern",
                index: idx,
            });
        }
        let nnz = self.beta_pattern.as_slice().iter().filter(|v| **v != 0.0).count();
        if nnz != self.s {
            return Err(Error::InvalidArgument(format!(
                "s = {} does not match the {nnz} nonzero coordinates of beta_pattern",
                self.s
            )));
        }
        Ok(())
    }
}

/// The coefficient vector generating the data and its support.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub beta_true: Coefficients,
    /// Ascending indices of the nonzero coordinates of `beta_true`.
    pub support: Vec<usize>,
}

impl GroundTruth {
    pub fn from_coefficients(beta: Coefficients) -> GroundTruth {
        let support = beta
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, _)| j)
            .collect();
        GroundTruth {
            beta_true: beta,
            support,
        }
    }

    /// The coefficient vector of the conditional u-quantile: the
    /// location-model vector with the error quantile σ·Φ⁻¹(u) folded
    /// into the intercept coordinate.
    pub fn at_quantile(
        &self,
        u: QuantileIndex,
        sigma_noise: f64,
        intercept_col: Option<usize>,
    ) -> Result<GroundTruth> {
        let uu = u.value();
        let shift = if uu == 0.5 {
            0.0
        } else {
            sigma_noise * Normal::new(0.0, 1.0).expect("unit normal").inverse_cdf(uu)
        };
        if shift == 0.0 {
            return Ok(self.clone());
        }
        let col = intercept_col.ok_or_else(|| {
            Error::InvalidArgument(
                "a nonzero error quantile shifts the intercept, but the design has \
                 no intercept column"
                    .into(),
            )
        })?;
        let mut beta = self.beta_true.as_slice().to_vec();
        beta[col] += shift;
        Ok(GroundTruth::from_coefficients(Coefficients::from(beta)))
    }
}

/// Draws replication `rep_index` of the design. Column 0 is the
/// intercept; covariate columns follow the first-order recursion
/// z_j = ρ·z_{j−1} + √(1−ρ²)·w_j, which reproduces the Toeplitz
/// correlation ρ^|j−k| exactly in population. Deterministic given
/// (spec.seed, rep_index).
pub fn generate_design(spec: &DesignSpec, rep_index: u64) -> Result<(Dataset, GroundTruth)> {
    spec.validate()?;
    let (n, p) = (spec.n, spec.p);
    let mut rng = stream_rng(spec.seed, rep_index);
    let innovation = (1.0 - spec.rho * spec.rho).sqrt();
    let mut x = Array2::<f64>::zeros((n, p));
    for i in 0..n {
        x[[i, 0]] = 1.0;
        let mut prev = 0.0;
        for j in 1..p {
            let w: f64 = rng.sample(StandardNormal);
            let z = if j == 1 {
                w
            } else {
                spec.rho * prev + innovation * w
            };
            x[[i, j]] = z;
            prev = z;
        }
    }
    let beta = spec.beta_pattern.as_slice();
    let mut y = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut dot = 0.0;
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                dot += x[[i, j]] * b;
            }
        }
        let eps: f64 = rng.sample(StandardNormal);
        y[i] = dot + spec.sigma_noise * eps;
    }
    let d = Dataset::new(x, y, Some(0))?;
    Ok((d, GroundTruth::from_coefficients(spec.beta_pattern.clone())))
}

/// How the experiment sets the penalty level for each replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum PenaltyRule {
    /// Simulate Λ on each replication's own design and take
    /// λ = c · (1−α)-quantile of the draws.
    Pivotal { alpha: f64, c: f64, n_sims: usize },
    /// Calibrate once on replication 0's design and reuse that λ for
    /// every replication. Cheaper, but drops the conditioning of Λ on
    /// each replication's own design.
    SharedPivotal { alpha: f64, c: f64, n_sims: usize },
    /// Use the given λ unchanged.
    Fixed { lambda: f64 },
}

impl PenaltyRule {
    fn validate(&self) -> Result<()> {
        match *self {
            PenaltyRule::Pivotal { alpha, c, n_sims }
            | PenaltyRule::SharedPivotal { alpha, c, n_sims } => {
                if !(0.0 < alpha && alpha < 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "alpha must be in (0,1), got {alpha}"
                    )));
                }
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "penalty multiplier c must be positive and finite, got {c}"
                    )));
                }
                if n_sims == 0 {
                    return Err(Error::InvalidArgument(
                        "pivotal calibration needs at least one simulation draw".into(),
                    ));
                }
            }
            PenaltyRule::Fixed { lambda } => {
                if !lambda.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "fixed penalty must be finite, got {lambda}"
                    )));
                }
                if lambda < 0.0 {
                    return Err(Error::NegativePenalty { lambda });
                }
            }
        }
        Ok(())
    }
}

/// The estimators the harness can run, in their fixed reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Unpenalized quantile regression on all columns.
    Canonical,
    /// ℓ1-penalized fit at the calibrated λ.
    Penalized,
    /// Unpenalized refit on the penalized fit's support.
    Post,
    /// Unpenalized fit restricted to the true support.
    Oracle,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [
        EstimatorKind::Canonical,
        EstimatorKind::Penalized,
        EstimatorKind::Post,
        EstimatorKind::Oracle,
    ];

    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Canonical => "canonical",
            EstimatorKind::Penalized => "penalized",
            EstimatorKind::Post => "post",
            EstimatorKind::Oracle => "oracle",
        }
    }
}

/// A full Monte Carlo study: design, target quantile, penalty rule,
/// estimators, and replication count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub design: DesignSpec,
    pub u: QuantileIndex,
    pub n_reps: usize,
    pub penalty: PenaltyRule,
    /// Which estimators to run; reported in the fixed order of
    /// [`EstimatorKind::ALL`] regardless of the order given here.
    pub estimators: Vec<EstimatorKind>,
    /// Seed for the whole experiment. Replication r draws from streams
    /// derived from (master_seed, r); the design's own seed field is
    /// not consulted by [`run_experiment`].
    pub master_seed: u64,
}

/// Table metrics computed from per-replication coefficient errors.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricSummary {
    /// ℓ2 norm of the mean error vector over replications.
    pub bias: f64,
    /// Root mean squared ℓ2 deviation around the mean estimate.
    pub std_dev: f64,
    /// Mean support size of β̂ under the solver's support tolerance.
    pub mean_l0: f64,
    pub mean_l1: f64,
}

/// Aggregates per-replication errors β̂ − β* into table metrics.
/// `beta_true` is required because the ℓ0/ℓ1 columns are norms of β̂
/// itself, not of the error.
pub fn report_metrics(errors: &[Coefficients], beta_true: &Coefficients) -> Result<MetricSummary> {
    if errors.is_empty() {
        return Err(Error::InvalidArgument(
            "report_metrics needs at least one error vector".into(),
        ));
    }
    let p = beta_true.len();
    for e in errors {
        if e.len() != p {
            return Err(Error::DimensionMismatch {
                context: "error vector length",
                expected: p,
                got: e.len(),
            });
        }
    }
    let r = errors.len() as f64;
    let mut mean_err = vec![0.0; p];
    for e in errors {
        for (m, v) in mean_err.iter_mut().zip(e.as_slice()) {
            *m += v;
        }
    }
    for m in &mut mean_err {
        *m /= r;
    }
    let bias = mean_err.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut sum_sq_dev = 0.0;
    let mut sum_l0 = 0.0;
    let mut sum_l1 = 0.0;
    for e in errors {
        let mut dev = 0.0;
        let mut linf: f64 = 0.0;
        let mut l1 = 0.0;
        for ((&ev, &m), &bt) in e.as_slice().iter().zip(&mean_err).zip(beta_true.as_slice()) {
            let d = ev - m;
            dev += d * d;
            let b = (bt + ev).abs();
            l1 += b;
            linf = linf.max(b);
        }
        sum_sq_dev += dev;
        let cutoff = tol::SUPPORT_TOL * linf.max(1.0);
        sum_l0 += e
            .as_slice()
            .iter()
            .zip(beta_true.as_slice())
            .filter(|(ev, bt)| (**bt + **ev).abs() > cutoff)
            .count() as f64;
        sum_l1 += l1;
    }
    Ok(MetricSummary {
        bias,
        std_dev: (sum_sq_dev / r).sqrt(),
        mean_l0: sum_l0 / r,
        mean_l1: sum_l1 / r,
    })
}

/// One estimator's aggregate row in an [`ExperimentReport`].
#[derive(Debug, Clone, Serialize)]
pub struct EstimatorSummary {
    pub estimator: EstimatorKind,
    /// Mean support size under the solver's support tolerance.
    pub mean_l0: f64,
    /// As `mean_l0`, except the unpenalized all-column fit counts every
    /// column it was free to use (p for `canonical`), the convention
    /// under which such fits are reported as non-sparse.
    pub mean_l0_full: f64,
    pub mean_l1: f64,
    /// ℓ2 norm of the mean coefficient error over replications.
    pub bias: f64,
    /// Root mean squared ℓ2 deviation around the mean estimate.
    pub std_dev: f64,
    /// Fraction of replications whose support contains the true one.
    pub inclusion_frequency: f64,
    /// Mean number of true-support columns selected.
    pub mean_correct: f64,
    /// (support size, replication count) pairs, ascending by size.
    pub support_histogram: Vec<(usize, usize)>,
    /// (correctly selected count, replication count) pairs, ascending.
    pub correct_selected_histogram: Vec<(usize, usize)>,
}

/// Penalty levels used across successful replications.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LambdaSummary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// A replication excluded from the aggregates, with the stage that
/// failed.
#[derive(Debug, Clone, Serialize)]
pub struct FailureRecord {
    pub rep: usize,
    pub stage: String,
    pub message: String,
}

/// Wall-clock accounting. Not serialized, so artifacts stay
/// byte-identical across machines and thread counts.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuntimeStats {
    pub total_seconds: f64,
}

/// Everything [`run_experiment`] produces: the echoed configuration,
/// the true coefficient vector at the target quantile, per-estimator
/// summaries, and the failure log.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    /// β(u): the pattern with the error quantile folded into the
    /// intercept.
    pub truth: GroundTruth,
    /// Present when a penalized estimator ran.
    pub lambda: Option<LambdaSummary>,
    /// Summaries in the fixed order of [`EstimatorKind::ALL`].
    pub estimates: Vec<EstimatorSummary>,
    pub n_reps_used: usize,
    pub failures: Vec<FailureRecord>,
    #[serde(skip)]
    pub runtime: RuntimeStats,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per estimator, in the fixed reporting order.
    pub fn table_csv(&self) -> String {
        let mut out = String::from(
            "estimator,mean_l0,mean_l0_full,mean_l1,bias,std_dev,inclusion_frequency,\
             mean_correct,n_reps_used\n",
        );
        for s in &self.estimates {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                s.estimator.label(),
                s.mean_l0,
                s.mean_l0_full,
                s.mean_l1,
                s.bias,
                s.std_dev,
                s.inclusion_frequency,
                s.mean_correct,
                self.n_reps_used
            ));
        }
        out
    }

    /// Long-format histogram rows for plotting.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("estimator,histogram,bin,count\n");
        for s in &self.estimates {
            for &(bin, count) in &s.support_histogram {
                out.push_str(&format!(
                    "{},support_size,{bin},{count}\n",
                    s.estimator.label()
                ));
            }
            for &(bin, count) in &s.correct_selected_histogram {
                out.push_str(&format!(
                    "{},correct_selected,{bin},{count}\n",
                    s.estimator.label()
                ));
            }
        }
        out
    }
}

struct RepData {
    lambda: Option<f64>,
    estimates: Vec<(EstimatorKind, Coefficients)>,
}

struct RepContext<'a> {
    spec: &'a DesignSpec,
    u: QuantileIndex,
    penalty: PenaltyRule,
    requested: &'a [EstimatorKind],
    truth: &'a GroundTruth,
    grid: &'a QuantileGrid,
    calib_base: u64,
    shared_lambda: Option<f64>,
    needs_first_stage: bool,
}

fn run_one_rep(ctx: &RepContext<'_>, rep: usize) -> std::result::Result<RepData, (String, Error)> {
    let tag = |stage: &str| {
        let stage = stage.to_string();
        move |e: Error| (stage, e)
    };
    let (d, _) = generate_design(ctx.spec, rep as u64).map_err(tag("generate_design"))?;

    let lambda = if ctx.needs_first_stage {
        Some(match ctx.penalty {
            PenaltyRule::Fixed { lambda } => lambda,
            PenaltyRule::Pivotal { alpha, c, n_sims } => {
                let seed = derive_seed(ctx.calib_base, rep as u64);
                let sims = simulate_pivotal_lambda(&d, ctx.grid, n_sims, seed)
                    .map_err(tag("calibrate"))?;
                penalty_level(&sims, alpha, c).map_err(tag("calibrate"))?
            }
            PenaltyRule::SharedPivotal { .. } => {
                ctx.shared_lambda.expect("shared penalty precomputed")
            }
        })
    } else {
        None
    };

    let first_stage: Option<QuantileFit> = if ctx.needs_first_stage {
        let lam = lambda.expect("lambda set when a penalized estimator runs");
        Some(solve_qr_lp(&d, ctx.u, lam, None).map_err(tag("penalized"))?)
    } else {
        None
    };

    let mut estimates = Vec::with_capacity(ctx.requested.len());
    for &kind in ctx.requested {
        let beta = match kind {
            EstimatorKind::Canonical => {
                solve_qr_lp(&d, ctx.u, 0.0, None)
                    .map_err(tag("canonical"))?
                    .beta
            }
            EstimatorKind::Penalized => first_stage
                .as_ref()
                .expect("first stage runs when penalized is requested")
                .beta
                .clone(),
            EstimatorKind::Post => {
                let first = first_stage
                    .as_ref()
                    .expect("first stage runs when post is requested");
                post_l1_qr(&d, ctx.u, first, true)
                    .map_err(tag("post"))?
                    .beta_post
            }
            EstimatorKind::Oracle => {
                solve_qr_lp(&d, ctx.u, 0.0, Some(&ctx.truth.support))
                    .map_err(tag("oracle"))?
                    .beta
            }
        };
        estimates.push((kind, beta));
    }
    Ok(RepData { lambda, estimates })
}

/// Runs the Monte Carlo study. Each replication generates a fresh
/// design, calibrates λ per the penalty rule, runs the requested
/// estimators, and contributes to the aggregates. Failed replications
/// are logged and excluded; more than 5% failures aborts the study.
/// The report is deterministic in `master_seed` regardless of thread
/// count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    cfg.design.validate()?;
    cfg.penalty.validate()?;
    if cfg.n_reps == 0 {
        return Err(Error::InvalidArgument("n_reps must be at least 1".into()));
    }
    if cfg.estimators.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one estimator must be requested".into(),
        ));
    }
    let requested: Vec<EstimatorKind> = EstimatorKind::ALL
        .into_iter()
        .filter(|k| cfg.estimators.contains(k))
        .collect();
    let needs_first_stage = requested
        .iter()
        .any(|k| matches!(k, EstimatorKind::Penalized | EstimatorKind::Post));

    let mut spec = cfg.design.clone();
    spec.seed = derive_seed(cfg.master_seed, 0);
    let calib_base = derive_seed(cfg.master_seed, 1);

    let truth = GroundTruth::from_coefficients(cfg.design.beta_pattern.clone()).at_quantile(
        cfg.u,
        cfg.design.sigma_noise,
        Some(0),
    )?;
    let grid = QuantileGrid::single(cfg.u.value())?;

    let shared_lambda = match cfg.penalty {
        PenaltyRule::SharedPivotal { alpha, c, n_sims } if needs_first_stage => {
            let (d0, _) = generate_design(&spec, 0)?;
            let sims =
                simulate_pivotal_lambda(&d0, &grid, n_sims, derive_seed(calib_base, 0))?;
            Some(penalty_level(&sims, alpha, c)?)
        }
        _ => None,
    };

    let ctx = RepContext {
        spec: &spec,
        u: cfg.u,
        penalty: cfg.penalty,
        requested: &requested,
        truth: &truth,
        grid: &grid,
        calib_base,
        shared_lambda,
        needs_first_stage,
    };

    let outcomes: Vec<std::result::Result<RepData, (String, Error)>> = (0..cfg.n_reps)
        .into_par_iter()
        .map(|rep| run_one_rep(&ctx, rep))
        .collect();

    let mut failures = Vec::new();
    let mut ok: Vec<RepData> = Vec::new();
    for (rep, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(data) => ok.push(data),
            Err((stage, e)) => failures.push(FailureRecord {
                rep,
                stage,
                message: e.to_string(),
            }),
        }
    }
    let failed = failures.len();
    if failed as f64 > 0.05 * cfg.n_reps as f64 {
        return Err(Error::ExcessiveFailures {
            failed,
            total: cfg.n_reps,
        });
    }

    let n_used = ok.len();
    let lambda = ok.first().and_then(|d| d.lambda).map(|_| {
        let mut sum = 0.0;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for d in &ok {
            let l = d.lambda.expect("all successful reps carry lambda");
            sum += l;
            min = min.min(l);
            max = max.max(l);
        }
        LambdaSummary {
            mean: sum / n_used as f64,
            min,
            max,
        }
    });

    let mut estimates = Vec::with_capacity(requested.len());
    for (idx, &kind) in requested.iter().enumerate() {
        let betas: Vec<&Coefficients> = ok
            .iter()
            .map(|d| {
                debug_assert_eq!(d.estimates[idx].0, kind);
                &d.estimates[idx].1
            })
            .collect();
        let errors: Vec<Coefficients> = betas
            .iter()
            .map(|b| {
                Coefficients::from(
                    b.as_slice()
                        .iter()
                        .zip(truth.beta_true.as_slice())
                        .map(|(est, tru)| est - tru)
                        .collect::<Vec<f64>>(),
                )
            })
            .collect();
        let ms = report_metrics(&errors, &truth.beta_true)?;

        let mut support_hist: BTreeMap<usize, usize> = BTreeMap::new();
        let mut correct_hist: BTreeMap<usize, usize> = BTreeMap::new();
        let mut included = 0usize;
        let mut correct_total = 0usize;
        for b in &betas {
            let cutoff = tol::SUPPORT_TOL * b.linf().max(1.0);
            let m = support_metrics(b, &truth.support, cutoff);
            *support_hist.entry(m.n_selected).or_insert(0) += 1;
            *correct_hist.entry(m.n_correct).or_insert(0) += 1;
            if m.includes_truth {
                included += 1;
            }
            correct_total += m.n_correct;
        }

        estimates.push(EstimatorSummary {
            estimator: kind,
            mean_l0: ms.mean_l0,
            mean_l0_full: if kind == EstimatorKind::Canonical {
                cfg.design.p as f64
            } else {
                ms.mean_l0
            },
            mean_l1: ms.mean_l1,
            bias: ms.bias,
            std_dev: ms.std_dev,
            inclusion_frequency: included as f64 / n_used as f64,
            mean_correct: correct_total as f64 / n_used as f64,
            support_histogram: support_hist.into_iter().collect(),
            correct_selected_histogram: correct_hist.into_iter().collect(),
        });
    }

    Ok(ExperimentReport {
        config: cfg.clone(),
        truth,
        lambda,
        estimates,
        n_reps_used: n_used,
        failures,
        runtime: RuntimeStats {
            total_seconds: start.elapsed().as_secs_f64(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample_corr(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for (&x, &y) in a.iter().zip(b) {
            cov += (x - ma) * (y - mb);
            va += (x - ma) * (x - ma);
            vb += (y - mb) * (y - mb);
        }
        cov / (va.sqrt() * vb.sqrt())
    }

    fn column(d: &Dataset, j: usize) -> Vec<f64> {
        d.x().column(j).to_vec()
    }

    #[test]
    fn location_model_pattern_and_support() {
        let spec = DesignSpec::location_model(50, 10, 5, 0.0, 1.0, 3).unwrap();
        let expect = vec![0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(spec.beta_pattern.as_slice(), expect.as_slice());
        let (_, truth) = generate_design(&spec, 0).unwrap();
        assert_eq!(truth.support, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn design_spec_validation_rejects_bad_inputs() {
        assert!(DesignSpec::location_model(10, 5, 5, 0.0, 1.0, 0).is_err());
        let mut spec = DesignSpec::location_model(10, 5, 2, 0.0, 1.0, 0).unwrap();
        spec.rho = 1.0;
        assert!(spec.validate().is_err());
        spec.rho = 0.0;
        spec.sigma_noise = 0.0;
        assert!(spec.validate().is_err());
        spec.sigma_noise = 1.0;
        spec.s = 3;
        assert!(spec.validate().is_err());
        spec.s = 2;
        spec.beta_pattern = Coefficients::from(vec![0.0, 1.0, 1.0]);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn generate_design_is_deterministic_per_replication() {
        let spec = DesignSpec::location_model(20, 6, 2, 0.3, 1.0, 11).unwrap();
        let (d1, _) = generate_design(&spec, 4).unwrap();
        let (d2, _) = generate_design(&spec, 4).unwrap();
        assert_eq!(d1.y().as_slice().unwrap(), d2.y().as_slice().unwrap());
        assert_eq!(d1.x().as_slice().unwrap(), d2.x().as_slice().unwrap());
        let (d3, _) = generate_design(&spec, 5).unwrap();
        assert_ne!(d1.y().as_slice().unwrap(), d3.y().as_slice().unwrap());
        assert!(column(&d1, 0).iter().all(|&v| v == 1.0));
        assert_eq!(d1.intercept_col(), Some(0));
    }

    #[test]
    fn isotropic_columns_are_nearly_uncorrelated() {
        let spec = DesignSpec::location_model(2000, 6, 2, 0.0, 1.0, 17).unwrap();
        let (d, _) = generate_design(&spec, 0).unwrap();
        for j in 1..6 {
            for k in (j + 1)..6 {
                let r = sample_corr(&column(&d, j), &column(&d, k));
                assert!(r.abs() < 0.07, "corr(col{j}, col{k}) = {r}");
            }
        }
    }

    #[test]
    fn ar1_neighbor_correlation_matches_rho() {
        let spec = DesignSpec::location_model(2000, 8, 2, 0.5, 1.0, 23).unwrap();
        let (d, _) = generate_design(&spec, 0).unwrap();
        for j in 1..7 {
            let r = sample_corr(&column(&d, j), &column(&d, j + 1));
            assert!((r - 0.5).abs() < 0.07, "corr(col{j}, col{}) = {r}", j + 1);
        }
        let r2 = sample_corr(&column(&d, 1), &column(&d, 3));
        assert!((r2 - 0.25).abs() < 0.07, "lag-2 corr = {r2}");
    }

    #[test]
    fn report_metrics_hand_cases() {
        let beta_true = Coefficients::from(vec![0.0, 2.0, -1.0]);
        let zeros = vec![
            Coefficients::from(vec![0.0, 0.0, 0.0]),
            Coefficients::from(vec![0.0, 0.0, 0.0]),
        ];
        let ms = report_metrics(&zeros, &beta_true).unwrap();
        assert_abs_diff_eq!(ms.bias, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ms.std_dev, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ms.mean_l0, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ms.mean_l1, 3.0, epsilon = 1e-15);

        let e = vec![0.3, -0.4, 0.0];
        let sym = vec![
            Coefficients::from(e.clone()),
            Coefficients::from(e.iter().map(|v| -v).collect::<Vec<f64>>()),
        ];
        let ms = report_metrics(&sym, &beta_true).unwrap();
        assert_abs_diff_eq!(ms.bias, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ms.std_dev, 0.5, epsilon = 1e-15);

        assert!(report_metrics(&[], &beta_true).is_err());
        let short = vec![Coefficients::from(vec![0.0])];
        assert!(report_metrics(&short, &beta_true).is_err());
    }

    fn small_config(estimators: Vec<EstimatorKind>, n_reps: usize) -> ExperimentConfig {
        ExperimentConfig {
            design: DesignSpec::location_model(40, 8, 2, 0.0, 1.0, 0).unwrap(),
            u: QuantileIndex::new(0.5).unwrap(),
            n_reps,
            penalty: PenaltyRule::Pivotal {
                alpha: 0.1,
                c: 2.0,
                n_sims: 50,
            },
            estimators,
            master_seed: 91,
        }
    }

    #[test]
    fn single_rep_oracle_report_has_unit_bins() {
        let mut cfg = small_config(vec![EstimatorKind::Oracle], 1);
        cfg.penalty = PenaltyRule::Fixed { lambda: 0.0 };
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.n_reps_used, 1);
        assert!(report.failures.is_empty());
        assert!(report.lambda.is_none());
        let s = &report.estimates[0];
        assert_eq!(s.estimator, EstimatorKind::Oracle);
        assert_eq!(s.support_histogram.iter().map(|&(_, c)| c).sum::<usize>(), 1);
        assert_eq!(
            s.correct_selected_histogram
                .iter()
                .map(|&(_, c)| c)
                .sum::<usize>(),
            1
        );
    }

    #[test]
    fn experiment_reports_are_reproducible() {
        let cfg = small_config(
            vec![EstimatorKind::Penalized, EstimatorKind::Post],
            4,
        );
        let a = run_experiment(&cfg).unwrap().to_json();
        let b = run_experiment(&cfg).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn estimator_rows_follow_the_fixed_order() {
        let cfg = small_config(
            vec![
                EstimatorKind::Post,
                EstimatorKind::Canonical,
                EstimatorKind::Oracle,
                EstimatorKind::Penalized,
                EstimatorKind::Canonical,
            ],
            2,
        );
        let report = run_experiment(&cfg).unwrap();
        let kinds: Vec<EstimatorKind> = report.estimates.iter().map(|s| s.estimator).collect();
        assert_eq!(kinds, EstimatorKind::ALL.to_vec());
        assert_eq!(report.estimates[0].mean_l0_full, 8.0);
        let csv = report.table_csv();
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with("estimator,"));
        let order: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(order, vec!["canonical", "penalized", "post", "oracle"]);
    }

    #[test]
    fn quantile_shift_moves_the_intercept_truth() {
        let mut cfg = small_config(vec![EstimatorKind::Oracle], 1);
        cfg.penalty = PenaltyRule::Fixed { lambda: 0.0 };
        cfg.u = QuantileIndex::new(0.75).unwrap();
        let report = run_experiment(&cfg).unwrap();
        let q75 = Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.75);
        assert_abs_diff_eq!(report.truth.beta_true.as_slice()[0], q75, epsilon = 1e-12);
        assert_eq!(report.truth.support, vec![0, 1, 2]);
    }

    #[test]
    fn shared_pivotal_uses_one_lambda_everywhere() {
        let mut cfg = small_config(vec![EstimatorKind::Penalized], 3);
        cfg.penalty = PenaltyRule::SharedPivotal {
            alpha: 0.1,
            c: 2.0,
            n_sims: 40,
        };
        let report = run_experiment(&cfg).unwrap();
        let lam = report.lambda.unwrap();
        assert!(lam.min > 0.0);
        assert_eq!(lam.min, lam.max);
        assert_eq!(lam.mean, lam.min);
    }

    #[test]
    fn per_rep_calibration_varies_lambda() {
        let cfg = small_config(vec![EstimatorKind::Penalized], 4);
        let report = run_experiment(&cfg).unwrap();
        let lam = report.lambda.unwrap();
        assert!(lam.min > 0.0);
        assert!(lam.max > lam.min);
    }

    #[test]
    fn post_alone_still_runs_the_first_stage() {
        let cfg = small_config(vec![EstimatorKind::Post], 2);
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.estimates.len(), 1);
        assert_eq!(report.estimates[0].estimator, EstimatorKind::Post);
        assert!(report.lambda.is_some());
    }

    #[test]
    fn oracle_recovers_coefficients_approximately() {
        let mut cfg = small_config(vec![EstimatorKind::Oracle], 20);
        cfg.design = DesignSpec::location_model(100, 10, 2, 0.0, 1.0, 0).unwrap();
        cfg.penalty = PenaltyRule::Fixed { lambda: 0.0 };
        let report = run_experiment(&cfg).unwrap();
        let s = &report.estimates[0];
        assert!(s.bias < 0.3, "oracle bias {}", s.bias);
        assert!(s.std_dev < 0.6, "oracle std {}", s.std_dev);
        assert_abs_diff_eq!(s.inclusion_frequency, 1.0, epsilon = 1e-15);
        assert_eq!(s.mean_l0, 2.0);
    }

    #[test]
    fn histogram_csv_is_long_format() {
        let mut cfg = small_config(vec![EstimatorKind::Oracle], 2);
        cfg.penalty = PenaltyRule::Fixed { lambda: 0.0 };
        let report = run_experiment(&cfg).unwrap();
        let csv = report.histogram_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "estimator,histogram,bin,count");
        assert!(lines[1..].iter().all(|l| l.starts_with("oracle,")));
        assert!(lines.iter().any(|l| l.contains(",support_size,")));
        assert!(lines.iter().any(|l| l.contains(",correct_selected,")));
    }
}
