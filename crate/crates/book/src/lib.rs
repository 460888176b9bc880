//! Guide chapters compiled as doc-tests.

#[doc = include_str!("../../../book/src/overview.md")]
pub mod overview {}

#[doc = include_str!("../../../book/src/workout-lgd.md")]
pub mod workout_lgd {}

#[doc = include_str!("../../../book/src/economic-capital.md")]
pub mod economic_capital {}

#[doc = include_str!("../../../book/src/risk-premium.md")]
pub mod risk_premium {}

#[doc = include_str!("../../../book/src/baseline-rates.md")]
pub mod baseline_rates {}

#[doc = include_str!("../../../book/src/synthetic-and-reports.md")]
pub mod synthetic_and_reports {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
