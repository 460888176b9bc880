//! Loan-level workout cash flows and realised losses.
//!
//! Time is measured in whole months. Annual rates are converted to the
//! monthly grid by effective compounding, so a flow `m` months after the
//! evaluation date is discounted by `(1 + r_d)^(-m/12)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Month index on the portfolio's observation grid.
pub type Month = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    WrittenOff,
    Cured,
    Censored,
}

impl Outcome {
    pub fn is_resolved(self) -> bool {
        !matches!(self, Outcome::Censored)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::WrittenOff => "written_off",
            Outcome::Cured => "cured",
            Outcome::Censored => "censored",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "written_off" | "writtenoff" | "write_off" => Ok(Outcome::WrittenOff),
            "cured" | "cure" => Ok(Outcome::Cured),
            "censored" => Ok(Outcome::Censored),
            other => Err(format!("unknown outcome {other:?}")),
        }
    }
}

/// Net cash flows of one defaulted loan between default and resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct CashFlowSeries {
    loan_id: String,
    default_month: Month,
    resolution_month: Month,
    balance_at_default: f64,
    flows: Vec<(Month, f64)>,
    outcome: Outcome,
}

impl CashFlowSeries {
    /// Builds a validated series. Flows falling in the same month are summed.
    pub fn new(
        loan_id: impl Into<String>,
        default_month: Month,
        resolution_month: Month,
        balance_at_default: f64,
        outcome: Outcome,
        flows: impl IntoIterator<Item = (Month, f64)>,
    ) -> Result<Self> {
        let loan_id = loan_id.into();
        if !(balance_at_default > 0.0) || !balance_at_default.is_finite() {
            return Err(Error::BalanceNotPositive {
                loan_id,
                balance: balance_at_default,
            });
        }
        if resolution_month < default_month {
            return Err(Error::InvalidSeries {
                loan_id,
                reason: format!("resolution month {resolution_month} precedes default month {default_month}"),
            });
        }
        let mut merged: BTreeMap<Month, f64> = BTreeMap::new();
        for (month, amount) in flows {
            if month < default_month || month > resolution_month {
                return Err(Error::InvalidSeries {
                    loan_id,
                    reason: format!("flow month {month} outside workout window [{default_month}, {resolution_month}]"),
                });
            }
            if !amount.is_finite() {
                return Err(Error::InvalidSeries {
                    loan_id,
                    reason: format!("non-finite flow at month {month}"),
                });
            }
            *merged.entry(month).or_insert(0.0) += amount;
        }
        Ok(Self {
            loan_id,
            default_month,
            resolution_month,
            balance_at_default,
            flows: merged.into_iter().collect(),
            outcome,
        })
    }

    pub fn loan_id(&self) -> &str {
        &self.loan_id
    }

    pub fn default_month(&self) -> Month {
        self.default_month
    }

    pub fn resolution_month(&self) -> Month {
        self.resolution_month
    }

    pub fn balance_at_default(&self) -> f64 {
        self.balance_at_default
    }

    pub fn outcome(&self) -> Outcome {
        self.outcome
    }

    /// Flows ordered by month, one entry per month.
    pub fn flows(&self) -> &[(Month, f64)] {
        &self.flows
    }

    /// Months spent in default, `τ_r - τ_d`.
    pub fn workout_months(&self) -> Month {
        self.resolution_month - self.default_month
    }

    /// Flows re-indexed by months since default.
    pub fn flows_since_default(&self) -> impl Iterator<Item = (Month, f64)> + '_ {
        self.flows.iter().map(move |&(m, x)| (m - self.default_month, x))
    }
}

/// Annual discount rate `r_d = r_f + δ`, kept as its two components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscountRate {
    risk_free: f64,
    premium: f64,
}

impl DiscountRate {
    pub fn new(risk_free: f64, premium: f64) -> Result<Self> {
        if !risk_free.is_finite() || risk_free <= -1.0 {
            return Err(Error::InvalidParameter {
                name: "risk_free",
                value: risk_free,
                reason: "must be finite and above -100%",
            });
        }
        if !(premium >= 0.0) || !premium.is_finite() {
            return Err(Error::InvalidParameter {
                name: "premium",
                value: premium,
                reason: "must be finite and non-negative",
            });
        }
        Ok(Self { risk_free, premium })
    }

    pub fn risk_free_only(risk_free: f64) -> Result<Self> {
        Self::new(risk_free, 0.0)
    }

    pub fn risk_free(&self) -> f64 {
        self.risk_free
    }

    pub fn premium(&self) -> f64 {
        self.premium
    }

    pub fn composite(&self) -> f64 {
        self.risk_free + self.premium
    }

    /// Effective monthly rate equivalent to the annual composite rate.
    pub fn monthly(&self) -> f64 {
        (1.0 + self.composite()).powf(1.0 / 12.0) - 1.0
    }

    pub fn factor(&self, months: Month) -> f64 {
        annual_discount_factor(self.composite(), months)
    }
}

/// `(1 + annual)^(-months/12)`, i.e. `1/(1 + r_monthly)^months`.
pub(crate) fn annual_discount_factor(annual: f64, months: Month) -> f64 {
    if months == 0 {
        return 1.0;
    }
    (1.0 + annual).powf(-(months as f64) / 12.0)
}

pub fn discount_factor(rate: DiscountRate, months: Month) -> f64 {
    rate.factor(months)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealisedLoss {
    pub loan_id: String,
    pub evaluation_month: Month,
    pub loss: f64,
}

/// Workout loss `1 - Σ X_t v_{t-u} / B_u` evaluated at month `u`.
///
/// Only the default month carries a known balance, so `u` must equal `τ_d`.
pub fn realised_loss(series: &CashFlowSeries, evaluation_month: Month, rate: DiscountRate) -> Result<RealisedLoss> {
    if evaluation_month < series.default_month || evaluation_month > series.resolution_month {
        return Err(Error::EvaluationTimeOutOfRange {
            loan_id: series.loan_id.clone(),
            month: evaluation_month,
            default_month: series.default_month,
            resolution_month: series.resolution_month,
        });
    }
    if evaluation_month != series.default_month {
        return Err(Error::BalanceUnavailable {
            loan_id: series.loan_id.clone(),
            month: evaluation_month,
        });
    }
    let balance = series.balance_at_default;
    if !(balance > 0.0) {
        return Err(Error::BalanceNotPositive {
            loan_id: series.loan_id.clone(),
            balance,
        });
    }
    let present_value: f64 = series
        .flows
        .iter()
        .map(|&(m, x)| x * rate.factor(m - evaluation_month))
        .sum();
    Ok(RealisedLoss {
        loan_id: series.loan_id.clone(),
        evaluation_month,
        loss: 1.0 - present_value / balance,
    })
}

/// Resolved defaulted loans, kept sorted by loan id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DefaultedPortfolio {
    loans: Vec<CashFlowSeries>,
}

impl DefaultedPortfolio {
    pub fn new(mut loans: Vec<CashFlowSeries>) -> Result<Self> {
        loans.sort_by(|a, b| a.loan_id.cmp(&b.loan_id));
        if let Some(w) = loans.windows(2).find(|w| w[0].loan_id == w[1].loan_id) {
            return Err(Error::DuplicateLoan(w[0].loan_id.clone()));
        }
        Ok(Self { loans })
    }

    pub fn loans(&self) -> &[CashFlowSeries] {
        &self.loans
    }

    pub fn len(&self) -> usize {
        self.loans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loans.is_empty()
    }

    /// Loans that reached cure or write-off.
    pub fn resolved(&self) -> impl Iterator<Item = &CashFlowSeries> {
        self.loans.iter().filter(|l| l.outcome.is_resolved())
    }

    pub fn censored_count(&self) -> usize {
        self.loans.len() - self.resolved().count()
    }

    /// Sub-portfolio of loans matching `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&CashFlowSeries) -> bool) -> Self {
        Self {
            loans: self.loans.iter().filter(|l| keep(l)).cloned().collect(),
        }
    }

    /// `τ_A`: the longest workout among resolved loans.
    pub fn max_workout(&self) -> Month {
        self.resolved().map(|l| l.workout_months()).max().unwrap_or(0)
    }

    pub fn mean_workout(&self) -> f64 {
        let (n, total) = self
            .resolved()
            .fold((0usize, 0.0), |(n, s), l| (n + 1, s + l.workout_months() as f64));
        if n == 0 {
            0.0
        } else {
            total / n as f64
        }
    }

    /// Portfolio recoveries `X_t` by months since default, `t = 0..=τ_A`.
    pub fn aggregated_flows(&self) -> Vec<f64> {
        let mut flows = vec![0.0; self.max_workout() as usize + 1];
        for loan in self.resolved() {
            for (t, x) in loan.flows_since_default() {
                flows[t as usize] += x;
            }
        }
        flows
    }

    /// Default balance of loans still in workout at the start of month `t`,
    /// for `t = 1..=τ_A` (index 0 holds month 1).
    pub fn outstanding_exposure(&self) -> Vec<f64> {
        let horizon = self.max_workout() as usize;
        let mut exposure = vec![0.0; horizon];
        for loan in self.resolved() {
            for slot in exposure.iter_mut().take(loan.workout_months() as usize) {
                *slot += loan.balance_at_default;
            }
        }
        exposure
    }
}

/// Per-loan `l_i(τ_d)` for every resolved loan, ordered by loan id.
pub fn portfolio_losses(portfolio: &DefaultedPortfolio, rate: DiscountRate) -> Result<Vec<RealisedLoss>> {
    portfolio
        .resolved()
        .map(|loan| realised_loss(loan, loan.default_month, rate))
        .collect()
}

/// Sample mean and standard deviation (n - 1 denominator) of a loss sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSummary {
    pub count: usize,
    pub mean: f64,
    pub std_dev: f64,
}

impl LossSummary {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let values: Vec<f64> = values.into_iter().collect();
        let count = values.len();
        if count == 0 {
            return Self {
                count,
                mean: f64::NAN,
                std_dev: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let std_dev = if count > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { count, mean, std_dev }
    }

    pub fn from_losses(losses: &[RealisedLoss]) -> Self {
        Self::from_values(losses.iter().map(|l| l.loss))
    }

    pub fn variance(&self) -> f64 {
        self.std_dev * self.std_dev
    }
}
