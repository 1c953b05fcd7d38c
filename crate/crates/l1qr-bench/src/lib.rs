//! Shared instance builders for the benchmark targets.

use l1qr::{generate_design, Dataset, DesignSpec};

/// A reproducible AR(1) Gaussian location-model instance with an
/// intercept, five unit coefficients, and unit noise.
pub fn instance(n: usize, p: usize, rho: f64, seed: u64) -> Dataset {
    let spec = DesignSpec::location_model(n, p, 5, rho, 1.0, seed).expect("valid spec");
    let (d, _truth) = generate_design(&spec, 0).expect("design generation succeeds");
    d
}
