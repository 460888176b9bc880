//! Classical discount-rate methods used as benchmarks: contract rate,
//! return on defaulted debt (RODD), CAPM return on equity (ROE) with either
//! a market beta or a defaulted-debt beta (ME variant), and WACC.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Asset correlation preset for retail residential mortgages.
pub const RETAIL_MORTGAGE_CORRELATION: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractRateSpec {
    pub base_rate: f64,
    pub margin: f64,
    pub grade_factors: BTreeMap<String, f64>,
}

/// `r_i = ρ_c + m + f_g`.
pub fn contract_rate(spec: &ContractRateSpec, grade: &str) -> Result<f64> {
    let factor = spec
        .grade_factors
        .get(grade)
        .ok_or_else(|| Error::UnknownGrade(grade.to_string()))?;
    Ok(spec.base_rate + spec.margin + factor)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BondPricePair {
    pub price_at_default: f64,
    pub price_at_resolution: f64,
    pub span_months: u32,
}

impl BondPricePair {
    pub fn new(price_at_default: f64, price_at_resolution: f64, span_months: u32) -> Result<Self> {
        for (name, v) in [
            ("price_at_default", price_at_default),
            ("price_at_resolution", price_at_resolution),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "bond prices must be strictly positive",
                });
            }
        }
        if span_months == 0 {
            return Err(Error::InvalidParameter {
                name: "span_months",
                value: 0.0,
                reason: "resolution must follow default by at least one month",
            });
        }
        Ok(Self {
            price_at_default,
            price_at_resolution,
            span_months,
        })
    }

    /// Annualised realised return of this bond over its workout.
    pub fn annual_return(&self) -> f64 {
        let monthly = (self.price_at_resolution / self.price_at_default).powf(1.0 / self.span_months as f64) - 1.0;
        (1.0 + monthly).powi(12) - 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoddEstimate {
    pub rate: f64,
    /// A negative discount rate is returned for display but is not usable.
    pub negative: bool,
}

pub fn rodd_rate(pairs: &[BondPricePair]) -> Result<RoddEstimate> {
    if pairs.is_empty() {
        return Err(Error::EmptySample);
    }
    let rate = pairs.iter().map(BondPricePair::annual_return).sum::<f64>() / pairs.len() as f64;
    Ok(RoddEstimate {
        rate,
        negative: rate < 0.0,
    })
}

/// Inputs for a CAPM beta: either aligned return samples or the
/// correlation and volatilities directly.
#[derive(Debug, Clone, PartialEq)]
pub enum CapmInputs {
    Series {
        market: Vec<f64>,
        instrument: Vec<f64>,
    },
    Moments {
        correlation: f64,
        sigma_instrument: f64,
        sigma_market: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaEstimate {
    pub beta: f64,
    /// Set when the instrument series is constant and the correlation undefined.
    pub degenerate: bool,
}

/// `β = κ(r_m, ρ_e) σ_ρe / σ_rm` with sample (n - 1) statistics.
pub fn capm_beta(inputs: &CapmInputs) -> Result<BetaEstimate> {
    match inputs {
        CapmInputs::Moments {
            correlation,
            sigma_instrument,
            sigma_market,
        } => {
            if !(*sigma_market > 0.0) {
                return Err(Error::DegenerateSeries("market volatility must be positive"));
            }
            Ok(BetaEstimate {
                beta: correlation * sigma_instrument / sigma_market,
                degenerate: false,
            })
        }
        CapmInputs::Series { market, instrument } => {
            if market.len() != instrument.len() {
                return Err(Error::DegenerateSeries("return series are not aligned"));
            }
            let n = market.len();
            if n < 2 {
                return Err(Error::DegenerateSeries("need at least two return observations"));
            }
            let mean = |xs: &[f64]| xs.iter().sum::<f64>() / n as f64;
            let (mm, mi) = (mean(market), mean(instrument));
            let mut sxx = 0.0;
            let mut syy = 0.0;
            let mut sxy = 0.0;
            for (x, y) in market.iter().zip(instrument) {
                let (dx, dy) = (x - mm, y - mi);
                sxx += dx * dx;
                syy += dy * dy;
                sxy += dx * dy;
            }
            if !(sxx > 0.0) {
                return Err(Error::DegenerateSeries("market returns are constant"));
            }
            if syy == 0.0 {
                return Ok(BetaEstimate {
                    beta: 0.0,
                    degenerate: true,
                });
            }
            let denom = (n - 1) as f64;
            let (sigma_m, sigma_i) = ((sxx / denom).sqrt(), (syy / denom).sqrt());
            let correlation = sxy / (sxx.sqrt() * syy.sqrt());
            Ok(BetaEstimate {
                beta: correlation * sigma_i / sigma_m,
                degenerate: false,
            })
        }
    }
}

/// `E(ρ_e) = r_f + β (E(r_m) - r_f)`.
pub fn roe_rate(risk_free: f64, beta: f64, expected_market_return: f64) -> f64 {
    risk_free + beta * (expected_market_return - risk_free)
}

/// Defaulted-debt beta `√κ σ_i / σ_rm`.
pub fn me_beta(asset_correlation: f64, sigma_instrument: f64, sigma_market: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&asset_correlation) {
        return Err(Error::InvalidParameter {
            name: "asset_correlation",
            value: asset_correlation,
            reason: "must lie in [0, 1]",
        });
    }
    if !(sigma_market > 0.0) {
        return Err(Error::DegenerateSeries("market volatility must be positive"));
    }
    Ok(asset_correlation.sqrt() * sigma_instrument / sigma_market)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaccInputs {
    pub expected_downturn_lgd: f64,
    pub expected_lgd: f64,
    pub expected_equity_return: f64,
    pub expected_debt_cost: f64,
}

/// Post-default equity ratio `(E[L|Downturn] - E[L]) / (1 - E[L])`; EAD cancels.
pub fn capital_ratio(w: &WaccInputs) -> Result<f64> {
    let denom = 1.0 - w.expected_lgd;
    if denom == 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    if !(0.0..=1.0).contains(&w.expected_lgd) || !(w.expected_lgd..=1.0).contains(&w.expected_downturn_lgd) {
        return Err(Error::InvalidParameter {
            name: "expected_downturn_lgd",
            value: w.expected_downturn_lgd,
            reason: "need 0 <= E[L] <= E[L|Downturn] <= 1",
        });
    }
    Ok((w.expected_downturn_lgd - w.expected_lgd) / denom)
}

/// `E(ρ_c) = e ρ_e + (1 - e) ρ_d`.
pub fn wacc_rate(w: &WaccInputs) -> Result<f64> {
    let e = capital_ratio(w)?;
    Ok(blend(e, w.expected_equity_return, w.expected_debt_cost))
}

pub(crate) fn blend(equity_weight: f64, equity: f64, debt: f64) -> f64 {
    equity_weight * equity + (1.0 - equity_weight) * debt
}

#[derive(Debug, Clone, Deserialize)]
struct ReturnRow {
    #[allow(dead_code)]
    date: String,
    market_return: f64,
    instrument_return: f64,
}

/// Reads `date,market_return,instrument_return` rows into aligned series.
pub fn read_return_series(reader: impl Read, source: &str) -> Result<CapmInputs> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut market = Vec::new();
    let mut instrument = Vec::new();
    for row in rdr.deserialize::<ReturnRow>() {
        let row = row.map_err(|e| schema_error(source, e))?;
        market.push(row.market_return);
        instrument.push(row.instrument_return);
    }
    Ok(CapmInputs::Series { market, instrument })
}

/// Reads `price_at_default,price_at_resolution,span_months` rows.
pub fn read_bond_pairs(reader: impl Read, source: &str) -> Result<Vec<BondPricePair>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut pairs = Vec::new();
    for row in rdr.deserialize::<BondPricePair>() {
        let row = row.map_err(|e| schema_error(source, e))?;
        pairs.push(BondPricePair::new(
            row.price_at_default,
            row.price_at_resolution,
            row.span_months,
        )?);
    }
    Ok(pairs)
}

fn schema_error(source: &str, e: csv::Error) -> Error {
    Error::Schema {
        file: source.to_string(),
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    }
}
