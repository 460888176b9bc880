//! Beta loss-severity distribution: moment matching, the regularized
//! incomplete beta function and its inverse.

use serde::Serialize;

use crate::error::{Error, Result};

/// Absolute tolerance on quantiles returned by [`BetaLossFit::inverse_cdf`].
pub const QUANTILE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaLossFit {
    pub shape_a: f64,
    pub shape_b: f64,
    pub source_mean: f64,
    pub source_variance: f64,
    #[serde(skip)]
    ln_beta: f64,
}

/// Moment-matched beta distribution for mean `μ` and variance `σ²`.
pub fn fit_beta(mean: f64, variance: f64) -> Result<BetaLossFit> {
    if !(mean > 0.0 && mean < 1.0) {
        return Err(Error::DegenerateMean(mean));
    }
    let bound = mean * (1.0 - mean);
    if !(variance > 0.0 && variance < bound) {
        return Err(Error::InfeasibleMoments { mean, variance });
    }
    let k = bound / variance - 1.0;
    let (a, b) = (mean * k, (1.0 - mean) * k);
    Ok(BetaLossFit {
        shape_a: a,
        shape_b: b,
        source_mean: mean,
        source_variance: variance,
        ln_beta: ln_beta(a, b),
    })
}

impl BetaLossFit {
    /// Distribution with the given shapes; source moments are set to the analytic ones.
    pub fn from_shapes(a: f64, b: f64) -> Result<Self> {
        for (name, v) in [("shape_a", a), ("shape_b", b)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "beta shapes must be positive",
                });
            }
        }
        let mut fit = BetaLossFit {
            shape_a: a,
            shape_b: b,
            source_mean: 0.0,
            source_variance: 0.0,
            ln_beta: ln_beta(a, b),
        };
        fit.source_mean = fit.mean();
        fit.source_variance = fit.variance();
        Ok(fit)
    }

    pub fn mean(&self) -> f64 {
        self.shape_a / (self.shape_a + self.shape_b)
    }

    pub fn variance(&self) -> f64 {
        let (a, b) = (self.shape_a, self.shape_b);
        let s = a + b;
        a * b / (s * s * (s + 1.0))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        regularized_incomplete_beta_with(self.shape_a, self.shape_b, self.ln_beta, x)
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        (self.shape_a - 1.0) * x.ln() + (self.shape_b - 1.0) * (-x).ln_1p() - self.ln_beta
    }

    /// Quantile `F_D^{-1}(q)`.
    ///
    /// Safeguarded Newton iteration inside a shrinking bracket; falls back to
    /// bisection whenever the Newton step leaves the bracket.
    pub fn inverse_cdf(&self, q: f64) -> f64 {
        assert!((0.0..=1.0).contains(&q), "quantile level {q} outside [0, 1]");
        if q == 0.0 {
            return 0.0;
        }
        if q == 1.0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut x = self.initial_guess(q).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
        for _ in 0..200 {
            let err = self.cdf(x) - q;
            if err == 0.0 {
                return x;
            }
            if err < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let pdf = self.ln_pdf(x).exp();
            let mut next = x - err / pdf;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            let step = (next - x).abs();
            x = next;
            if step <= f64::EPSILON * x || hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        x
    }

    fn initial_guess(&self, q: f64) -> f64 {
        let (a, b) = (self.shape_a, self.shape_b);
        if a >= 1.0 && b >= 1.0 {
            let pp = if q < 0.5 { q } else { 1.0 - q };
            let t = (-2.0 * pp.ln()).sqrt();
            let mut x = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t;
            if q < 0.5 {
                x = -x;
            }
            let al = (x * x - 3.0) / 6.0;
            let h = 2.0 / (1.0 / (2.0 * a - 1.0) + 1.0 / (2.0 * b - 1.0));
            let w = x * (al + h).sqrt() / h
                - (1.0 / (2.0 * b - 1.0) - 1.0 / (2.0 * a - 1.0)) * (al + 5.0 / 6.0 - 2.0 / (3.0 * h));
            a / (a + b * (2.0 * w).exp())
        } else {
            let lna = (a / (a + b)).ln();
            let lnb = (b / (a + b)).ln();
            let t = (a * lna).exp() / a;
            let u = (b * lnb).exp() / b;
            let w = t + u;
            if q < t / w {
                (a * w * q).powf(1.0 / a)
            } else {
                1.0 - (b * w * (1.0 - q)).powf(1.0 / b)
            }
        }
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

/// `I_x(a, b)`, evaluated by Lentz's continued fraction.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    regularized_incomplete_beta_with(a, b, ln_beta(a, b), x)
}

fn regularized_incomplete_beta_with(a: f64, b: f64, ln_beta_ab: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta_ab;
    if x < (a + 1.0) / (a + b + 2.0) {
        (ln_front.exp() * continued_fraction(a, b, x) / a).min(1.0)
    } else {
        (1.0 - ln_front.exp() * continued_fraction(b, a, 1.0 - x) / b).max(0.0)
    }
}

fn continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    h
}
