//! Calibrate the penalty on a synthetic design, fit at the median, and
//! refit unpenalized on the selected support.

use l1qr::{
    generate_design, post_l1_qr, solve_qr_lp, DesignSpec, PenaltyCalibration, QuantileGrid,
    QuantileIndex,
};

fn main() -> l1qr::Result<()> {
    // A 100×20 AR(1) Gaussian design whose response loads on the five
    // columns after the intercept.
    let spec = DesignSpec::location_model(100, 20, 5, 0.5, 1.0, 42)?;
    let (d, truth) = generate_design(&spec, 0)?;

    // Penalty level: c times the (1−α)-quantile of 1000 simulated draws
    // of the pivotal statistic, which depends only on the design.
    let grid = QuantileGrid::single(0.5)?;
    let cal = PenaltyCalibration::run(&d, &grid, 1000, 0.1, 2.0, 7)?;

    // Penalized fit at the median, then an unpenalized refit restricted
    // to the selected columns.
    let u = QuantileIndex::new(0.5)?;
    let fit = solve_qr_lp(&d, u, cal.lambda0, None)?;
    let refit = post_l1_qr(&d, u, &fit, true)?;

    println!("calibrated lambda0: {:.3}", cal.lambda0);
    println!("true support:       {:?}", truth.support);
    println!("selected support:   {:?}", fit.support);
    println!(
        "objectives: penalized {:.6}, refit {:.6}",
        fit.primal_objective, refit.refit.primal_objective
    );
    Ok(())
}
