//! Single-factor loss model with a beta severity distribution.
//!
//! Total loss is `L' = 1{W ≥ Φ^{-1}(1-p)} F_D^{-1}((Φ(W) - 1 + p)/p)` with
//! `W = √κ V + √(1-κ) Z`. Conditioning on the systematic factor at its
//! `α`-quantile and substituting `y = (Φ(W) - 1 + p)/p` turns the expected
//! conditional loss into an integral over `y ∈ (0, 1)`:
//!
//! ```text
//! E[L' | V = Φ^{-1}(α)] = p/√(1-κ) ∫₀¹ φ(z(y)) / φ(x(y)) F_D^{-1}(y) dy
//! x(y) = Φ^{-1}(1 - p(1-y)),   z(y) = (x(y) - √κ Φ^{-1}(α)) / √(1-κ)
//! ```

use serde::Serialize;

use super::beta::BetaLossFit;
use super::normal;
use super::quadrature::{QuadratureRule, UnitIntervalRule};
use crate::error::{Error, Result};

pub const DEFAULT_CONFIDENCE: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TascheParams {
    pub pd: f64,
    pub asset_correlation: f64,
    pub confidence: f64,
    pub loss_fit: BetaLossFit,
}

impl TascheParams {
    pub fn new(pd: f64, asset_correlation: f64, confidence: f64, loss_fit: BetaLossFit) -> Result<Self> {
        if !(pd > 0.0 && pd <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "pd",
                value: pd,
                reason: "must lie in (0, 1]",
            });
        }
        if !(0.0..1.0).contains(&asset_correlation) {
            return Err(Error::InvalidParameter {
                name: "asset_correlation",
                value: asset_correlation,
                reason: "must lie in [0, 1)",
            });
        }
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(Error::InvalidParameter {
                name: "confidence",
                value: confidence,
                reason: "must lie in (0, 1)",
            });
        }
        Ok(Self {
            pd,
            asset_correlation,
            confidence,
            loss_fit,
        })
    }

    /// Unconditional expected loss `p E[L' | L' > 0]`.
    pub fn expected_loss(&self) -> f64 {
        self.pd * self.loss_fit.mean()
    }
}

/// Expected loss conditional on the systematic factor at its `α`-quantile,
/// using the default graded rule.
pub fn conditional_loss(params: &TascheParams) -> Result<f64> {
    conditional_loss_with(params, QuadratureRule::default())
}

pub fn conditional_loss_with(params: &TascheParams, rule: QuadratureRule) -> Result<f64> {
    conditional_loss_on(params, rule.unit_rule())
}

pub fn conditional_loss_on(params: &TascheParams, rule: &UnitIntervalRule) -> Result<f64> {
    let p = params.pd;
    let kappa = params.asset_correlation;
    let scale = (1.0 - kappa).sqrt();
    let shift = kappa.sqrt() * normal::quantile(params.confidence);
    if !shift.is_finite() {
        return Err(Error::NumericalDomain(format!(
            "confidence {} has no finite normal quantile",
            params.confidence
        )));
    }
    let mut total = 0.0;
    for node in rule.nodes() {
        // Φ^{-1}(1 - p(1-y)), from whichever tail keeps its argument exact
        let lower = 1.0 - p + p * node.y;
        let upper = p * node.complement;
        let x = if lower < 0.5 {
            normal::quantile(lower)
        } else {
            normal::upper_quantile(upper)
        };
        if !x.is_finite() {
            return Err(Error::NumericalDomain(format!(
                "normal quantile of {lower} is not finite"
            )));
        }
        let z = (x - shift) / scale;
        let ratio = (0.5 * (x * x - z * z)).exp();
        total += node.weight * ratio * params.loss_fit.inverse_cdf(node.y);
    }
    Ok(p / scale * total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnexpectedLoss {
    /// Per-unit-exposure capital rate, floored at zero.
    pub rate: f64,
    pub conditional: f64,
    pub expected: f64,
    /// Set when the conditional loss fell below the expected loss.
    pub floored: bool,
}

/// `E[L' | V = Φ^{-1}(α)] - E[L']`, floored at zero.
pub fn unexpected_loss_rate(params: &TascheParams) -> Result<UnexpectedLoss> {
    unexpected_loss_rate_with(params, QuadratureRule::default())
}

pub fn unexpected_loss_rate_with(params: &TascheParams, rule: QuadratureRule) -> Result<UnexpectedLoss> {
    let conditional = conditional_loss_with(params, rule)?;
    let expected = params.expected_loss();
    let raw = conditional - expected;
    Ok(UnexpectedLoss {
        rate: raw.max(0.0),
        conditional,
        expected,
        floored: raw < 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capital::beta::fit_beta;

    fn params(p: f64, kappa: f64, alpha: f64) -> TascheParams {
        TascheParams::new(p, kappa, alpha, fit_beta(0.5, 0.05).unwrap()).unwrap()
    }

    #[test]
    fn independence_limit() {
        for p in [0.01, 0.3, 1.0] {
            let prm = params(p, 0.0, 0.999);
            let c = conditional_loss(&prm).unwrap();
            assert!((c - p * 0.5).abs() < 1e-10, "p={p}: {c}");
            assert!(unexpected_loss_rate(&prm).unwrap().rate.abs() < 1e-8);
        }
    }

    #[test]
    fn vanishing_default_probability() {
        let c = conditional_loss(&params(1e-9, 0.15, 0.999)).unwrap();
        assert!((0.0..1e-6).contains(&c));
    }

    #[test]
    fn median_conditioning_is_floored() {
        let ul = unexpected_loss_rate(&params(1.0, 0.3, 0.5)).unwrap();
        assert!(ul.floored || ul.rate >= 0.0);
        assert!(ul.rate >= 0.0);
        let ul = unexpected_loss_rate(&params(1.0, 0.3, 0.2)).unwrap();
        assert!(ul.floored);
        assert_eq!(ul.rate, 0.0);
    }

    #[test]
    fn more_correlation_more_capital() {
        let low = unexpected_loss_rate(&params(0.01, 0.15, 0.999)).unwrap().rate;
        let high = unexpected_loss_rate(&params(0.01, 0.30, 0.999)).unwrap().rate;
        assert!(high >= low);
    }

    #[test]
    fn five_point_rule_is_available() {
        let prm = params(0.01, 0.15, 0.999);
        let five = conditional_loss_with(&prm, QuadratureRule::Tasche5).unwrap();
        let graded = conditional_loss(&prm).unwrap();
        // the coarse rule lands within a few percent
        assert!((five - graded).abs() / graded < 0.05);
    }

    #[test]
    fn parameter_validation() {
        let fit = fit_beta(0.5, 0.05).unwrap();
        assert!(TascheParams::new(0.0, 0.1, 0.999, fit).is_err());
        assert!(TascheParams::new(0.5, 1.0, 0.999, fit).is_err());
        assert!(TascheParams::new(0.5, 0.1, 1.0, fit).is_err());
    }
}
