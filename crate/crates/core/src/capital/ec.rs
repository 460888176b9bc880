//! Economic-capital vectors over the run-off of a defaulted portfolio.
//!
//! The capital held in month `t` is the single-factor unexpected-loss rate
//! times an exposure basis. The rate depends on the discount premium `δ`
//! through the beta fit of the realised losses, so it is recomputed for every
//! `δ` and held fixed across months.

use serde::{Deserialize, Serialize};

use super::beta::{fit_beta, BetaLossFit};
use super::quadrature::QuadratureRule;
use super::tasche::{unexpected_loss_rate_with, TascheParams, UnexpectedLoss, DEFAULT_CONFIDENCE};
use crate::cashflow::{
    annual_discount_factor, portfolio_losses, DefaultedPortfolio, DiscountRate, LossSummary, Outcome,
};
use crate::error::{Error, Result};

/// Capital held in months `1..=τ_A`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EcVector {
    pub amounts: Vec<f64>,
    pub ul_rate: f64,
    pub basis: Vec<f64>,
}

impl EcVector {
    /// Capital vector `ul_rate × basis`, with negative basis values floored at zero.
    pub fn from_rate(ul_rate: f64, basis: Vec<f64>) -> Self {
        let amounts = basis.iter().map(|b| (ul_rate * b).max(0.0)).collect();
        Self {
            amounts,
            ul_rate,
            basis,
        }
    }

    /// Capital held at the start of the run-off.
    pub fn initial(&self) -> f64 {
        self.amounts.first().copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.amounts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amounts.is_empty()
    }
}

/// How often the capital basis is re-measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EcMode {
    #[default]
    Monthly,
    /// Measured at months 1, 13, 25, ... and held for the year.
    Annual,
}

/// What the unexpected-loss rate is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EcBasis {
    /// Default balance of loans still in workout at the start of each month.
    #[default]
    OutstandingExposure,
    /// Risk-free present value of the recoveries still to come.
    RemainingRecoveries,
}

/// Basis at the start of month `t = 1..=τ_A`: remaining recoveries
/// `Σ_{s ≥ t} X_s` discounted at `r_f` to time `t - 1`.
pub fn recovery_basis(flows: &[f64], risk_free: f64) -> Vec<f64> {
    let horizon = flows.len().saturating_sub(1);
    let mut basis = vec![0.0; horizon];
    let step = annual_discount_factor(risk_free, 1);
    let mut acc = 0.0;
    for t in (1..=horizon).rev() {
        acc = (acc + flows[t]) * step;
        basis[t - 1] = acc;
    }
    basis
}

fn hold_annually(basis: Vec<f64>) -> Vec<f64> {
    let mut held = basis.clone();
    for (i, slot) in held.iter_mut().enumerate() {
        *slot = basis[i - i % 12];
    }
    held
}

/// Settings of the capital model that stay fixed while `δ` varies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CapitalModel {
    pub pd: f64,
    pub asset_correlation: f64,
    pub confidence: f64,
    pub ec_mode: EcMode,
    pub ec_basis: EcBasis,
    pub writeoffs_only: bool,
    pub quadrature: QuadratureRule,
}

impl Default for CapitalModel {
    fn default() -> Self {
        Self {
            pd: 1.0,
            asset_correlation: 0.15,
            confidence: DEFAULT_CONFIDENCE,
            ec_mode: EcMode::Monthly,
            ec_basis: EcBasis::OutstandingExposure,
            writeoffs_only: false,
            quadrature: QuadratureRule::Graded,
        }
    }
}

impl CapitalModel {
    /// Sample moments of the losses at `r_f + δ`, clamped to `[0, 1]`.
    pub fn loss_summary(&self, portfolio: &DefaultedPortfolio, rate: DiscountRate) -> Result<LossSummary> {
        let sample = if self.writeoffs_only {
            portfolio.filter(|l| l.outcome() == Outcome::WrittenOff)
        } else {
            portfolio.clone()
        };
        let losses = portfolio_losses(&sample, rate)?;
        if losses.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(LossSummary::from_values(losses.iter().map(|l| l.loss.clamp(0.0, 1.0))))
    }

    pub fn loss_fit(&self, portfolio: &DefaultedPortfolio, rate: DiscountRate) -> Result<BetaLossFit> {
        let summary = self.loss_summary(portfolio, rate)?;
        fit_beta(summary.mean, summary.variance())
    }

    pub fn unexpected_loss(&self, fit: BetaLossFit) -> Result<UnexpectedLoss> {
        let params = TascheParams::new(self.pd, self.asset_correlation, self.confidence, fit)?;
        unexpected_loss_rate_with(&params, self.quadrature)
    }

    pub fn basis(&self, portfolio: &DefaultedPortfolio, risk_free: f64) -> Vec<f64> {
        let raw = match self.ec_basis {
            EcBasis::OutstandingExposure => portfolio.outstanding_exposure(),
            EcBasis::RemainingRecoveries => recovery_basis(&portfolio.aggregated_flows(), risk_free),
        };
        match self.ec_mode {
            EcMode::Monthly => raw,
            EcMode::Annual => hold_annually(raw),
        }
    }
}

/// Capital vector for premium `δ`.
pub fn ec_vector(portfolio: &DefaultedPortfolio, delta: f64, model: &CapitalModel, risk_free: f64) -> Result<EcVector> {
    if portfolio.aggregated_flows().iter().all(|&x| x == 0.0) {
        return Err(Error::EmptyRecoveries);
    }
    let rate = DiscountRate::new(risk_free, delta)?;
    let fit = model.loss_fit(portfolio, rate)?;
    let ul = model.unexpected_loss(fit)?;
    Ok(EcVector::from_rate(ul.rate, model.basis(portfolio, risk_free)))
}

/// Source of capital vectors for the premium solver.
pub trait EcProvider {
    fn capital(&self, delta: f64) -> Result<EcVector>;
}

impl<F> EcProvider for F
where
    F: Fn(f64) -> Result<EcVector>,
{
    fn capital(&self, delta: f64) -> Result<EcVector> {
        self(delta)
    }
}

/// Single-factor capital for a concrete portfolio; the basis is computed once.
#[derive(Debug, Clone)]
pub struct TascheEcProvider<'a> {
    portfolio: &'a DefaultedPortfolio,
    model: CapitalModel,
    risk_free: f64,
    basis: Vec<f64>,
}

impl<'a> TascheEcProvider<'a> {
    pub fn new(portfolio: &'a DefaultedPortfolio, model: CapitalModel, risk_free: f64) -> Result<Self> {
        if portfolio.aggregated_flows().iter().all(|&x| x == 0.0) {
            return Err(Error::EmptyRecoveries);
        }
        let basis = model.basis(portfolio, risk_free);
        Ok(Self {
            portfolio,
            model,
            risk_free,
            basis,
        })
    }
}

impl EcProvider for TascheEcProvider<'_> {
    fn capital(&self, delta: f64) -> Result<EcVector> {
        let rate = DiscountRate::new(self.risk_free, delta)?;
        let fit = self.model.loss_fit(self.portfolio, rate)?;
        let ul = self.model.unexpected_loss(fit)?;
        Ok(EcVector::from_rate(ul.rate, self.basis.clone()))
    }
}
