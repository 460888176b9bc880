//! Standard normal helpers. `erfc` comes from `libm` (statrs' version is
//! only good to about 1e-10 relative); the inverse comes from `statrs`.

use std::f64::consts::{PI, SQRT_2};

use libm::erfc;
use statrs::function::erf::erfc_inv;

pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `Φ^{-1}(u)`; accurate in the lower tail.
pub fn quantile(u: f64) -> f64 {
    -upper_quantile(u)
}

/// `Φ^{-1}(1 - v)` without forming `1 - v`.
pub fn upper_quantile(v: f64) -> f64 {
    SQRT_2 * erfc_inv(2.0 * v)
}
