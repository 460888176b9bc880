//! Cost-of-capital risk premium.
//!
//! The market-consistent price of a defaulted portfolio is its best-estimate
//! value `Y(0)` less a risk margin: the discounted cost of holding economic
//! capital over the run-off. The premium `δ` is the spread over `r_f` that
//! discounts the recoveries to that price. Capital itself depends on `δ`, so
//! the premium is found by fixed-point iteration: compute capital at the
//! current `δ`, freeze the margin, solve `Y(δ) = Y(0) - R` for a new `δ`, and
//! repeat until successive values agree.

use serde::{Deserialize, Serialize};

use crate::capital::{EcProvider, EcVector};
use crate::cashflow::{annual_discount_factor, portfolio_losses, DefaultedPortfolio, DiscountRate, LossSummary};
use crate::error::{Error, Result};

/// Width of the bracket at which the inner root search stops.
pub const INNER_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Annual cost-of-capital rate `c`.
    pub coc_rate: f64,
    pub risk_free: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initial_delta: f64,
    pub delta_upper_bound: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            coc_rate: 0.07,
            risk_free: 0.0637,
            tolerance: 1e-4,
            max_iterations: 100,
            initial_delta: 0.05,
            delta_upper_bound: 5.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let checks: [(&'static str, f64, bool, &'static str); 5] = [
            (
                "coc_rate",
                self.coc_rate,
                (0.0..=1.0).contains(&self.coc_rate),
                "must lie in [0, 1]",
            ),
            (
                "risk_free",
                self.risk_free,
                self.risk_free.is_finite() && self.risk_free > -1.0,
                "must be finite and above -100%",
            ),
            ("tolerance", self.tolerance, self.tolerance > 0.0, "must be positive"),
            (
                "initial_delta",
                self.initial_delta,
                self.initial_delta >= 0.0 && self.initial_delta <= self.delta_upper_bound,
                "must lie in [0, delta_upper_bound]",
            ),
            (
                "delta_upper_bound",
                self.delta_upper_bound,
                self.delta_upper_bound > 0.0 && self.delta_upper_bound.is_finite(),
                "must be positive",
            ),
        ];
        for (name, value, ok, reason) in checks {
            if !ok {
                return Err(Error::InvalidParameter { name, value, reason });
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iterations",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(())
    }

    /// Monthly charge equivalent to the annual cost-of-capital rate.
    pub fn monthly_coc_rate(&self) -> f64 {
        monthly_rate(self.coc_rate)
    }
}

pub fn monthly_rate(annual: f64) -> f64 {
    (1.0 + annual).powf(1.0 / 12.0) - 1.0
}

/// `Σ_t X_t / (1 + r_f + δ)^(t/12)` over months since default.
pub fn discounted_recoveries(flows: &[f64], delta: f64, risk_free: f64) -> f64 {
    let annual = risk_free + delta;
    flows
        .iter()
        .enumerate()
        .map(|(t, &x)| x * annual_discount_factor(annual, t as u32))
        .sum()
}

/// `Σ_{t=1}^{τ_A} c C_t / (1 + r_f)^(t/12)` with `c` charged per month.
pub fn risk_margin(ec: &EcVector, charge_per_period: f64, risk_free: f64) -> f64 {
    ec.amounts
        .iter()
        .enumerate()
        .map(|(i, &capital)| charge_per_period * capital * annual_discount_factor(risk_free, i as u32 + 1))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    /// Premium at which capital was evaluated.
    pub delta: f64,
    pub risk_margin: f64,
    /// Premium solving `Y(δ) = Y(0) - R` for this margin.
    pub next_delta: f64,
    /// `|delta - next_delta|`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CocSolution {
    pub delta_star: f64,
    pub risk_free: f64,
    pub risk_margin: f64,
    /// Best-estimate present value `Y(0)`.
    pub bepv: f64,
    pub mcp: f64,
    pub ec: EcVector,
    pub ec_to_mcp: f64,
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
}

impl CocSolution {
    pub fn discount_rate(&self) -> f64 {
        self.risk_free + self.delta_star
    }

    pub fn rate(&self) -> Result<DiscountRate> {
        DiscountRate::new(self.risk_free, self.delta_star)
    }
}

/// Smallest `δ ∈ [0, upper]` with `Y(δ) = target`, by bisection on the
/// decreasing discounted-recovery curve.
pub fn solve_inner(flows: &[f64], risk_free: f64, target: f64, upper: f64) -> Result<f64> {
    let value = |d: f64| discounted_recoveries(flows, d, risk_free);
    if value(0.0) <= target {
        return Ok(0.0);
    }
    let value_at_upper = value(upper);
    if value_at_upper > target {
        return Err(Error::NoRootInBracket {
            target,
            upper,
            value_at_upper,
        });
    }
    let (mut lo, mut hi) = (0.0, upper);
    while hi - lo > INNER_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if value(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fixed-point search for the premium `δ*`.
///
/// Iterates until two successive premiums differ by at most
/// `config.tolerance`, then performs one verification pass whose result is
/// reported. `flows[t]` holds portfolio recoveries `t` months after default.
pub fn solve_delta(flows: &[f64], config: &SolverConfig, provider: &impl EcProvider) -> Result<CocSolution> {
    config.validate()?;
    let charge = config.monthly_coc_rate();
    let bepv = discounted_recoveries(flows, 0.0, config.risk_free);

    let mut delta = config.initial_delta;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut last = None;

    let step = |delta: f64, trace: &mut Vec<IterationRecord>| -> Result<(f64, f64, EcVector)> {
        let ec = provider.capital(delta)?;
        let margin = risk_margin(&ec, charge, config.risk_free);
        let mcp = bepv - margin;
        if !(mcp > 0.0) {
            return Err(Error::McpNonPositive {
                iteration: trace.len() + 1,
                mcp,
            });
        }
        let next = solve_inner(flows, config.risk_free, mcp, config.delta_upper_bound)?;
        trace.push(IterationRecord {
            delta,
            risk_margin: margin,
            next_delta: next,
            residual: (delta - next).abs(),
        });
        Ok((next, margin, ec))
    };

    for _ in 0..config.max_iterations {
        let (next, margin, ec) = step(delta, &mut trace)?;
        let residual = (delta - next).abs();
        delta = next;
        last = Some((margin, ec));
        if residual <= config.tolerance {
            converged = true;
            break;
        }
    }
    if converged {
        let (next, margin, ec) = step(delta, &mut trace)?;
        delta = next;
        last = Some((margin, ec));
    }

    let (margin, ec) = last.expect("at least one iteration runs");
    let mcp = bepv - margin;
    let solution = CocSolution {
        delta_star: delta,
        risk_free: config.risk_free,
        risk_margin: margin,
        bepv,
        mcp,
        ec_to_mcp: ec.initial() / mcp,
        ec,
        iterations: trace,
        converged,
    };
    if converged {
        Ok(solution)
    } else {
        Err(Error::NotConverged(Box::new(solution)))
    }
}

/// Solves for `δ*` using the portfolio's aggregated recoveries.
pub fn solve_portfolio(
    portfolio: &DefaultedPortfolio,
    config: &SolverConfig,
    provider: &impl EcProvider,
) -> Result<CocSolution> {
    solve_delta(&portfolio.aggregated_flows(), config, provider)
}

/// Loss mean and standard deviation recomputed at `r_d = r_f + δ*`.
pub fn implied_lgd_at_solution(portfolio: &DefaultedPortfolio, solution: &CocSolution) -> Result<LossSummary> {
    let losses = portfolio_losses(portfolio, solution.rate()?)?;
    Ok(LossSummary::from_losses(&losses))
}
