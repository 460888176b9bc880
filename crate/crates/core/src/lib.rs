//! Discount rates for workout LGD from a cost-of-capital argument.
//!
//! A defaulted-loan portfolio is priced at its best-estimate value less the
//! cost of holding economic capital over the run-off. The spread over the
//! risk-free rate that reproduces that price is the risk premium `δ`, and
//! `r_d = r_f + δ` is the rate used to discount recovery cash flows when
//! computing realised losses.
//!
//! ```
//! use lgd_coc::cashflow::{CashFlowSeries, DefaultedPortfolio, Outcome};
//! use lgd_coc::capital::{CapitalModel, TascheEcProvider};
//! use lgd_coc::solver::{solve_portfolio, SolverConfig};
//!
//! let loans = (0..20)
//!     .map(|i| {
//!         let recovered = 1000.0 * (i as f64 + 1.0) / 21.0;
//!         let workout = 1 + i % 6;
//!         let flows = (1..=workout).map(move |m| (m, recovered / workout as f64));
//!         CashFlowSeries::new(format!("L{i:02}"), 0, workout, 1000.0, Outcome::WrittenOff, flows)
//!     })
//!     .collect::<Result<Vec<_>, _>>()?;
//! let portfolio = DefaultedPortfolio::new(loans)?;
//!
//! let config = SolverConfig { coc_rate: 0.07, risk_free: 0.0637, ..SolverConfig::default() };
//! let provider = TascheEcProvider::new(&portfolio, CapitalModel::default(), config.risk_free)?;
//! let solution = solve_portfolio(&portfolio, &config, &provider)?;
//! assert!(solution.converged && solution.delta_star > 0.0);
//! # Ok::<(), lgd_coc::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod capital;
pub mod cashflow;
pub mod config;
pub mod error;
pub mod portfolio_io;
pub mod report;
pub mod solver;
pub mod synth;
pub mod yield_curve;

pub use error::{Error, Result};
