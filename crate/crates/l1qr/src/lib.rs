//! ℓ1-penalized quantile regression with a pivotal, data-driven penalty.
//!
//! The crate provides:
//! - an exact linear-programming solver for penalized and ordinary
//!   quantile regression that returns an optimal basic feasible solution
//!   together with the dual rank scores ([`solve_qr_lp`]);
//! - simulation-based calibration of the penalty level from the pivotal
//!   statistic Λ ([`PenaltyCalibration`]);
//! - the derived estimators: quantile-process fits, post-selection
//!   refits, hard thresholding, and λ-relaxation paths ([`estimators`]);
//! - design diagnostics: sparse eigenvalues, support-recovery metrics,
//!   restricted-set membership ([`diagnostics`]);
//! - a deterministic Monte Carlo harness over AR(1) Gaussian designs
//!   ([`simulation`]).
//!
//! Column indices are 0-based everywhere, including reports.

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod penalty;
pub mod rng;
pub mod simulation;
pub mod solver;

pub use data::{
    check_loss, penalized_objective, quantile_loss, Coefficients, Dataset, QuantileGrid,
    QuantileIndex,
};
pub use error::{Error, Result};
pub use estimators::{
    fit_l1_qr_process, hard_threshold, lambda_path, post_l1_qr, selection_path, PathStep,
    PostFit, ProcessFit,
};
pub use penalty::{penalty_level, simulate_pivotal_lambda, theoretical_scale, PenaltyCalibration};
pub use simulation::{
    generate_design, report_metrics, run_experiment, DesignSpec, EstimatorKind, ExperimentConfig,
    ExperimentReport, GroundTruth, PenaltyRule,
};
pub use solver::{solve_qr_lp, verify_optimality, BasisStatus, OptimalityReport, QuantileFit};

/// Crate-wide tolerance constants, all scale-relative where the quantity
/// has a scale. Centralized so tests and callers agree with the solver.
pub mod tol {
    /// Duality gap bound: |primal − dual| ≤ GAP_TOL · (1 + |primal|).
    pub const GAP_TOL: f64 = 1e-8;
    /// Support membership: |β_j| > SUPPORT_TOL · max(1, ‖β‖_∞).
    pub const SUPPORT_TOL: f64 = 1e-8;
    /// Interpolation counting: |y_i − x_i'β| ≤ RESIDUAL_TOL · (1 + |y_i|).
    pub const RESIDUAL_TOL: f64 = 1e-9;
    /// Dual feasibility / complementary slackness slack in reports.
    pub const SLACK_TOL: f64 = 1e-7;

}
