//! Run configuration read from a flat TOML file.
//!
//! Every key is optional; missing keys take the defaults shown below.
//!
//! ```toml
//! # capital model
//! pd = 1.0
//! asset_correlation = 0.15
//! confidence = 0.999
//! ec_mode = "monthly"                # monthly | annual
//! ec_basis = "outstanding_exposure"  # outstanding_exposure | remaining_recoveries
//! writeoffs_only = false
//! quadrature = "graded"              # graded | tasche5
//!
//! # premium solver
//! coc_rate = 0.07
//! risk_free = 0.0637
//! tolerance = 1e-4
//! max_iterations = 100
//! initial_delta = 0.05
//! delta_upper_bound = 5.0
//!
//! # scenario matrix
//! coc_grid = [0.06, 0.07, 0.08]
//!
//! [[period]]
//! name = "downturn"
//! first_default_month = 0
//! last_default_month = 23
//! risk_free = 0.0887                 # optional, overrides the global value
//! ```
//!
//! When no `[[period]]` table is given a single period `full` covers every
//! default month. An optional `[baseline]` table feeds the benchmark rates;
//! see [`BaselineConfig`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baseline::{ContractRateSpec, WaccInputs};
use crate::capital::{CapitalModel, EcBasis, EcMode, QuadratureRule};
use crate::cashflow::{CashFlowSeries, Month};
use crate::error::{Error, Result};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pd: f64,
    pub asset_correlation: f64,
    pub confidence: f64,
    pub ec_mode: EcMode,
    pub ec_basis: EcBasis,
    pub writeoffs_only: bool,
    pub quadrature: QuadratureRule,

    pub coc_rate: f64,
    pub risk_free: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initial_delta: f64,
    pub delta_upper_bound: f64,

    pub coc_grid: Vec<f64>,
    #[serde(rename = "period")]
    pub periods: Vec<PeriodFilter>,
    pub baseline: Option<BaselineConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_parts(CapitalModel::default(), SolverConfig::default())
    }
}

impl RunConfig {
    pub fn from_parts(capital: CapitalModel, solver: SolverConfig) -> Self {
        Self {
            pd: capital.pd,
            asset_correlation: capital.asset_correlation,
            confidence: capital.confidence,
            ec_mode: capital.ec_mode,
            ec_basis: capital.ec_basis,
            writeoffs_only: capital.writeoffs_only,
            quadrature: capital.quadrature,
            coc_rate: solver.coc_rate,
            risk_free: solver.risk_free,
            tolerance: solver.tolerance,
            max_iterations: solver.max_iterations,
            initial_delta: solver.initial_delta,
            delta_upper_bound: solver.delta_upper_bound,
            coc_grid: vec![0.06, 0.07, 0.08],
            periods: Vec::new(),
            baseline: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn capital_model(&self) -> CapitalModel {
        CapitalModel {
            pd: self.pd,
            asset_correlation: self.asset_correlation,
            confidence: self.confidence,
            ec_mode: self.ec_mode,
            ec_basis: self.ec_basis,
            writeoffs_only: self.writeoffs_only,
            quadrature: self.quadrature,
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            coc_rate: self.coc_rate,
            risk_free: self.risk_free,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            initial_delta: self.initial_delta,
            delta_upper_bound: self.delta_upper_bound,
        }
    }

    /// Configured periods, or the single `full` period.
    pub fn effective_periods(&self) -> Vec<PeriodFilter> {
        if self.periods.is_empty() {
            vec![PeriodFilter::full()]
        } else {
            self.periods.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.solver_config().validate()?;
        let model = self.capital_model();
        let checks = [
            ("pd", model.pd, model.pd > 0.0 && model.pd <= 1.0, "must lie in (0, 1]"),
            (
                "asset_correlation",
                model.asset_correlation,
                (0.0..1.0).contains(&model.asset_correlation),
                "must lie in [0, 1)",
            ),
            (
                "confidence",
                model.confidence,
                model.confidence > 0.0 && model.confidence < 1.0,
                "must lie in (0, 1)",
            ),
        ];
        for (name, value, ok, reason) in checks {
            if !ok {
                return Err(Error::InvalidParameter { name, value, reason });
            }
        }
        for &c in &self.coc_grid {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::InvalidParameter {
                    name: "coc_grid",
                    value: c,
                    reason: "rates must lie in [0, 1]",
                });
            }
        }
        let mut names: Vec<&str> = self.periods.iter().map(|p| p.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("period `{}` defined twice", w[0])));
        }
        for p in &self.periods {
            if p.first_default_month > p.last_default_month {
                return Err(Error::Config(format!("period `{}` ends before it starts", p.name)));
            }
        }
        Ok(())
    }

    /// FNV-1a digest of the canonical TOML form, as 16 hex digits.
    pub fn fingerprint(&self) -> String {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in self.to_toml().bytes() {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x0100_0000_01b3);
        }
        format!("{hash:016x}")
    }
}

/// Default-month window selecting a cohort of loans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodFilter {
    pub name: String,
    #[serde(default)]
    pub first_default_month: Month,
    #[serde(default = "open_end")]
    pub last_default_month: Month,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk_free: Option<f64>,
}

fn open_end() -> Month {
    Month::MAX
}

impl PeriodFilter {
    pub fn full() -> Self {
        Self {
            name: "full".into(),
            first_default_month: 0,
            last_default_month: Month::MAX,
            risk_free: None,
        }
    }

    pub fn contains(&self, loan: &CashFlowSeries) -> bool {
        (self.first_default_month..=self.last_default_month).contains(&loan.default_month())
    }
}

/// Inputs for the benchmark discount rates. Each method is reported only
/// when its inputs are present.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub expected_market_return: Option<f64>,
    /// Market beta for the CAPM rate; estimated from a return file when absent.
    pub beta: Option<f64>,
    pub me: Option<MeConfig>,
    pub wacc: Option<WaccInputs>,
    pub contract: Option<ContractConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeConfig {
    pub asset_correlation: f64,
    pub sigma_instrument: f64,
    pub sigma_market: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractConfig {
    #[serde(flatten)]
    pub spec: ContractRateSpec,
    pub grade: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.solver_config(), SolverConfig::default());
        assert_eq!(c.capital_model(), CapitalModel::default());
        assert_eq!(c.effective_periods(), vec![PeriodFilter::full()]);
    }

    #[test]
    fn documented_example_parses() {
        let text = r#"
            pd = 0.9
            ec_mode = "annual"
            ec_basis = "remaining_recoveries"
            coc_rate = 0.06
            coc_grid = [0.05]
            [[period]]
            name = "downturn"
            first_default_month = 0
            last_default_month = 23
            risk_free = 0.0887
            [baseline]
            expected_market_return = 0.08
            beta = 0.375
            [baseline.contract]
            base_rate = 0.03
            margin = 0.01
            grade = "A"
            grade_factors = { A = 0.005 }
        "#;
        let c = RunConfig::from_toml(text).unwrap();
        assert_eq!(c.ec_mode, EcMode::Annual);
        assert_eq!(c.ec_basis, EcBasis::RemainingRecoveries);
        assert_eq!(c.periods[0].risk_free, Some(0.0887));
        assert_eq!(c.baseline.as_ref().unwrap().contract.as_ref().unwrap().grade, "A");
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_and_invalid_keys() {
        assert!(matches!(RunConfig::from_toml("cost = 1"), Err(Error::Config(_))));
        assert!(matches!(
            RunConfig::from_toml("pd = 0"),
            Err(Error::InvalidParameter { name: "pd", .. })
        ));
        assert!(RunConfig::from_toml("coc_grid = [2.0]").is_err());
        let dup = "[[period]]\nname='a'\n[[period]]\nname='a'\n";
        assert!(RunConfig::from_toml(dup).is_err());
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = RunConfig::default();
        let b = RunConfig {
            coc_rate: 0.08,
            ..RunConfig::default()
        };
        assert_eq!(a.fingerprint(), RunConfig::default().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
