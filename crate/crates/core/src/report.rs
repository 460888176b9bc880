//! Scenario matrices over cost-of-capital rates and cohorts, and their
//! CSV, long-format and aligned-text renderings.
//!
//! Rates are stored as fractions and rendered as percentages only in the
//! text table. Each solved row stores `r_f` and `r_d = r_f + δ`, so the row
//! identity `δ = r_d − r_f` holds up to rounding.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{capm_beta, contract_rate, me_beta, rodd_rate, roe_rate, wacc_rate, BondPricePair, CapmInputs};
use crate::capital::TascheEcProvider;
use crate::cashflow::{portfolio_losses, DefaultedPortfolio, DiscountRate, LossSummary};
use crate::config::{BaselineConfig, PeriodFilter, RunConfig};
use crate::error::{Error, Result};
use crate::solver::{implied_lgd_at_solution, solve_portfolio, CocSolution, SolverConfig};

/// One solved (or failed) scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub portfolio: String,
    pub period: String,
    pub coc_rate: f64,
    pub risk_free: f64,
    pub discount_rate: Option<f64>,
    pub delta: Option<f64>,
    pub ec_ratio: Option<f64>,
    pub mean_loss: Option<f64>,
    pub std_loss: Option<f64>,
    pub loans: usize,
    pub censored: usize,
    pub iterations: usize,
    pub converged: bool,
    pub status: String,
    pub detail: String,
}

impl ScenarioRow {
    /// `|δ − (r_d − r_f)|`, or `None` for rows without a solution.
    pub fn identity_gap(&self) -> Option<f64> {
        Some((self.delta? - (self.discount_rate? - self.risk_free)).abs())
    }

    pub fn scenario_key(&self) -> String {
        format!("{}/{}/c={}", self.portfolio, self.period, self.coc_rate)
    }
}

/// Benchmark rate from a classical method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub method: String,
    pub rate: f64,
    /// Spread over the risk-free rate.
    pub premium: f64,
    pub flag: String,
}

/// Descriptive statistics of a cohort, losses discounted at `r_f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub portfolio: String,
    pub period: String,
    pub loans: usize,
    pub censored: usize,
    pub mean_loss: Option<f64>,
    pub std_loss: Option<f64>,
    pub mean_workout_months: f64,
    pub max_workout_months: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub seed: Option<u64>,
    pub config_fingerprint: String,
    pub generated_unix_seconds: u64,
    pub compounding: String,
    pub censored_loans: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    pub rows: Vec<ScenarioRow>,
    pub baselines: Vec<BaselineRow>,
    pub cohorts: Vec<CohortSummary>,
    pub metadata: Option<ReportMetadata>,
}

impl RunReport {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn max_identity_gap(&self) -> f64 {
        self.rows
            .iter()
            .filter_map(ScenarioRow::identity_gap)
            .fold(0.0, f64::max)
    }
}

fn status_of(err: &Error) -> &'static str {
    match err {
        Error::NotConverged(_) => "not_converged",
        Error::McpNonPositive { .. } => "mcp_non_positive",
        Error::NoRootInBracket { .. } => "no_root",
        e if e.is_numerical() => "numerical_error",
        _ => "data_error",
    }
}

fn solved_row(base: ScenarioRow, portfolio: &DefaultedPortfolio, sol: &CocSolution) -> ScenarioRow {
    let summary = implied_lgd_at_solution(portfolio, sol).ok();
    ScenarioRow {
        discount_rate: Some(sol.discount_rate()),
        delta: Some(sol.delta_star),
        ec_ratio: Some(sol.ec_to_mcp),
        mean_loss: summary.map(|s| s.mean),
        std_loss: summary.map(|s| s.std_dev),
        iterations: sol.iterations.len(),
        converged: sol.converged,
        ..base
    }
}

/// Solves every (portfolio, period, c) combination with the single-factor
/// capital model. Failures are recorded in their row.
pub fn run_scenarios(portfolios: &[(String, DefaultedPortfolio)], config: &RunConfig) -> Result<RunReport> {
    let model = config.capital_model();
    run_scenarios_with(portfolios, config, |p, solver| {
        let provider = TascheEcProvider::new(p, model, solver.risk_free)?;
        solve_portfolio(p, solver, &provider)
    })
}

/// As [`run_scenarios`] with a caller-supplied solve.
pub fn run_scenarios_with<F>(
    portfolios: &[(String, DefaultedPortfolio)],
    config: &RunConfig,
    solve: F,
) -> Result<RunReport>
where
    F: Fn(&DefaultedPortfolio, &SolverConfig) -> Result<CocSolution> + Sync,
{
    config.validate()?;
    let periods = config.effective_periods();
    let mut cohorts = Vec::new();
    let mut jobs = Vec::new();
    for (name, portfolio) in portfolios {
        for period in &periods {
            let cohort = portfolio.filter(|l| period.contains(l));
            cohorts.push(cohort_summary(name, period, &cohort, config.risk_free)?);
            for &c in &config.coc_grid {
                jobs.push((name.clone(), period.clone(), c, cohort.clone()));
            }
        }
    }

    let mut rows: Vec<ScenarioRow> = jobs
        .par_iter()
        .map(|(name, period, c, cohort)| {
            let solver = SolverConfig {
                coc_rate: *c,
                risk_free: period.risk_free.unwrap_or(config.risk_free),
                ..config.solver_config()
            };
            let base = ScenarioRow {
                portfolio: name.clone(),
                period: period.name.clone(),
                coc_rate: *c,
                risk_free: solver.risk_free,
                discount_rate: None,
                delta: None,
                ec_ratio: None,
                mean_loss: None,
                std_loss: None,
                loans: cohort.len(),
                censored: cohort.censored_count(),
                iterations: 0,
                converged: false,
                status: "ok".into(),
                detail: String::new(),
            };
            match solve(cohort, &solver) {
                Ok(sol) => solved_row(base, cohort, &sol),
                Err(Error::NotConverged(sol)) => ScenarioRow {
                    status: "not_converged".into(),
                    detail: format!("no convergence after {} iterations", sol.iterations.len()),
                    ..solved_row(base, cohort, &sol)
                },
                Err(e) => ScenarioRow {
                    status: status_of(&e).into(),
                    detail: e.to_string(),
                    ..base
                },
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        (&a.portfolio, &a.period)
            .cmp(&(&b.portfolio, &b.period))
            .then(a.coc_rate.total_cmp(&b.coc_rate))
    });
    Ok(RunReport {
        rows,
        baselines: Vec::new(),
        cohorts,
        metadata: None,
    })
}

fn cohort_summary(
    name: &str,
    period: &PeriodFilter,
    cohort: &DefaultedPortfolio,
    risk_free: f64,
) -> Result<CohortSummary> {
    let rf = period.risk_free.unwrap_or(risk_free);
    let losses = portfolio_losses(cohort, DiscountRate::risk_free_only(rf)?)?;
    let summary = (!losses.is_empty()).then(|| LossSummary::from_losses(&losses));
    Ok(CohortSummary {
        portfolio: name.to_string(),
        period: period.name.clone(),
        loans: cohort.len(),
        censored: cohort.censored_count(),
        mean_loss: summary.map(|s| s.mean),
        std_loss: summary.map(|s| if s.count > 1 { s.std_dev } else { 0.0 }),
        mean_workout_months: cohort.mean_workout(),
        max_workout_months: cohort.max_workout(),
    })
}

/// Benchmark rates for whichever methods have inputs.
pub fn baseline_rows(
    config: &BaselineConfig,
    risk_free: f64,
    bonds: Option<&[BondPricePair]>,
    returns: Option<&CapmInputs>,
) -> Result<Vec<BaselineRow>> {
    let mut rows = Vec::new();
    let mut push = |method: &str, rate: f64, flag: &str| {
        rows.push(BaselineRow {
            method: method.into(),
            rate,
            premium: rate - risk_free,
            flag: flag.into(),
        })
    };
    if let Some(contract) = &config.contract {
        push("contract", contract_rate(&contract.spec, &contract.grade)?, "");
    }
    if let Some(pairs) = bonds {
        let r = rodd_rate(pairs)?;
        push("rodd", r.rate, if r.negative { "negative" } else { "" });
    }
    if let Some(market) = config.expected_market_return {
        let beta = match (config.beta, returns) {
            (Some(b), _) => Some((b, false)),
            (None, Some(inputs)) => {
                let est = capm_beta(inputs)?;
                Some((est.beta, est.degenerate))
            }
            (None, None) => None,
        };
        if let Some((beta, degenerate)) = beta {
            push(
                "roe",
                roe_rate(risk_free, beta, market),
                if degenerate { "degenerate" } else { "" },
            );
        }
        if let Some(me) = config.me {
            let beta = me_beta(me.asset_correlation, me.sigma_instrument, me.sigma_market)?;
            push("roe_me", roe_rate(risk_free, beta, market), "");
        }
    }
    if let Some(w) = &config.wacc {
        push("wacc", wacc_rate(w)?, "");
    }
    Ok(rows)
}

pub fn write_rows_csv<T: Serialize>(rows: &[T], writer: impl Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row).map_err(std::io::Error::other)?;
    }
    w.flush()
}

/// Reads rows written by [`write_rows_csv`].
pub fn read_rows_csv<T: for<'de> Deserialize<'de>>(reader: impl Read, source: &str) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize()
        .map(|row| {
            row.map_err(|e| Error::Schema {
                file: source.to_string(),
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })
        })
        .collect()
}

/// `scenario,metric,value` triples for charting.
pub fn write_long_csv(report: &RunReport, writer: impl Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["scenario", "metric", "value"])?;
    for row in &report.rows {
        let key = row.scenario_key();
        let metrics = [
            ("coc_rate", Some(row.coc_rate)),
            ("risk_free", Some(row.risk_free)),
            ("discount_rate", row.discount_rate),
            ("delta", row.delta),
            ("ec_ratio", row.ec_ratio),
            ("mean_loss", row.mean_loss),
            ("std_loss", row.std_loss),
        ];
        for (metric, value) in metrics {
            if let Some(v) = value {
                w.write_record([key.as_str(), metric, &v.to_string()])?;
            }
        }
    }
    w.flush()
}

pub fn percent(x: f64) -> String {
    format!("{:.2}%", x * 100.0)
}

/// Pads columns to a common width; the first two columns are left-aligned,
/// the rest right-aligned.
pub fn align_columns(header: &[&str], body: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cells
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                let pad = w - c.chars().count();
                if i < 2 {
                    format!("{c}{}", " ".repeat(pad))
                } else {
                    format!("{}{c}", " ".repeat(pad))
                }
            })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut header.iter().copied());
    for row in body {
        line(&mut row.iter().map(String::as_str));
    }
    out
}

/// Aligned text rendering of the scenario rows and any baseline rates.
pub fn render_table(report: &RunReport) -> String {
    let opt_pct = |x: Option<f64>| x.map_or_else(|| "-".to_string(), percent);
    let opt_num = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
    let body: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.portfolio.clone(),
                r.period.clone(),
                percent(r.coc_rate),
                percent(r.risk_free),
                opt_pct(r.discount_rate),
                opt_pct(r.delta),
                opt_pct(r.ec_ratio),
                opt_num(r.mean_loss),
                opt_num(r.std_loss),
                r.iterations.to_string(),
                r.status.clone(),
            ]
        })
        .collect();
    let mut out = align_columns(
        &[
            "portfolio",
            "period",
            "c",
            "r_f",
            "r_d",
            "delta",
            "EC/MCP",
            "L_bar",
            "sigma",
            "iter",
            "status",
        ],
        &body,
    );
    if !report.baselines.is_empty() {
        out.push('\n');
        let body: Vec<Vec<String>> = report
            .baselines
            .iter()
            .map(|b| vec![b.method.clone(), b.flag.clone(), percent(b.rate), percent(b.premium)])
            .collect();
        out.push_str(&align_columns(&["method", "flag", "rate", "premium"], &body));
    }
    out
}

pub const REPORT_FILE: &str = "report.csv";
pub const LONG_FILE: &str = "report_long.csv";
pub const TABLE_FILE: &str = "report.txt";
pub const BASELINE_FILE: &str = "baselines.csv";
pub const COHORT_FILE: &str = "cohorts.csv";
pub const METADATA_FILE: &str = "metadata.toml";

/// Writes the report files into `dir` and returns their paths.
pub fn emit(report: &RunReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: Vec<u8>| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    let csv_bytes = |f: &dyn Fn(&mut Vec<u8>) -> std::io::Result<()>| -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| Error::io(dir, e))?;
        Ok(buf)
    };
    put(REPORT_FILE, csv_bytes(&|b| write_report_csv(report, b))?)?;
    put(LONG_FILE, csv_bytes(&|b| write_long_csv(report, b))?)?;
    put(TABLE_FILE, render_table(report).into_bytes())?;
    put(COHORT_FILE, csv_bytes(&|b| write_rows_csv(&report.cohorts, b))?)?;
    if !report.baselines.is_empty() {
        put(BASELINE_FILE, csv_bytes(&|b| write_rows_csv(&report.baselines, b))?)?;
    }
    if let Some(meta) = &report.metadata {
        let text = toml::to_string(meta).map_err(|e| Error::Config(e.to_string()))?;
        put(METADATA_FILE, text.into_bytes())?;
    }
    Ok(written)
}

/// Scenario rows as CSV; a header is written even when there are no rows.
pub fn write_report_csv(report: &RunReport, writer: impl Write) -> std::io::Result<()> {
    if report.rows.is_empty() {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(REPORT_COLUMNS)?;
        return w.flush();
    }
    write_rows_csv(&report.rows, writer)
}

pub const REPORT_COLUMNS: [&str; 15] = [
    "portfolio",
    "period",
    "coc_rate",
    "risk_free",
    "discount_rate",
    "delta",
    "ec_ratio",
    "mean_loss",
    "std_loss",
    "loans",
    "censored",
    "iterations",
    "converged",
    "status",
    "detail",
];
