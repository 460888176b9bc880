//! Portfolio files: a loans table and a flows table, both CSV.
//!
//! ```text
//! loans.csv  loan_id,default_month,resolution_month,balance_at_default,outcome
//! flows.csv  loan_id,month,net_cash_flow
//! ```
//!
//! Files written here start with a `# lgd-coc portfolio v1` comment line;
//! ingest accepts files with or without it.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::cashflow::{CashFlowSeries, DefaultedPortfolio, Month, Outcome};
use crate::error::{Error, Result};

pub const SCHEMA_TAG: &str = "# lgd-coc portfolio v1";
pub const LOAN_COLUMNS: [&str; 5] = [
    "loan_id",
    "default_month",
    "resolution_month",
    "balance_at_default",
    "outcome",
];
pub const FLOW_COLUMNS: [&str; 3] = ["loan_id", "month", "net_cash_flow"];

struct LoanRow {
    default_month: Month,
    resolution_month: Month,
    balance: f64,
    outcome: Outcome,
    line: u64,
}

fn reader(input: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input)
}

fn check_headers(rdr: &mut csv::Reader<impl Read>, expected: &[&str], file: &str) -> Result<()> {
    let headers = rdr.headers().map_err(|e| Error::Schema {
        file: file.to_string(),
        line: 1,
        message: e.to_string(),
    })?;
    let found: Vec<&str> = headers.iter().collect();
    if found != expected {
        let missing: Vec<_> = expected.iter().filter(|c| !found.contains(c)).collect();
        let extra: Vec<_> = found.iter().filter(|c| !expected.contains(c)).collect();
        return Err(Error::Schema {
            file: file.to_string(),
            line: headers.position().map_or(1, |p| p.line()),
            message: format!("expected columns {expected:?}; missing {missing:?}, unexpected {extra:?}"),
        });
    }
    Ok(())
}

fn field<'r>(record: &'r csv::StringRecord, idx: usize, name: &str, file: &str, line: u64) -> Result<&'r str> {
    record.get(idx).ok_or_else(|| Error::Schema {
        file: file.to_string(),
        line,
        message: format!("row has no {name} column"),
    })
}

fn parse<T: std::str::FromStr>(raw: &str, name: &str, file: &str, line: u64) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>().map_err(|e| Error::Value {
        file: file.to_string(),
        line,
        field: name.to_string(),
        message: format!("{raw:?}: {e}"),
    })
}

/// Reads and validates a portfolio from its two tables.
pub fn ingest_from(
    loans: impl Read,
    loans_name: &str,
    flows: impl Read,
    flows_name: &str,
) -> Result<DefaultedPortfolio> {
    let mut rows: BTreeMap<String, LoanRow> = BTreeMap::new();
    let mut rdr = reader(loans);
    check_headers(&mut rdr, &LOAN_COLUMNS, loans_name)?;
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Schema {
            file: loans_name.to_string(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != LOAN_COLUMNS.len() {
            return Err(Error::Schema {
                file: loans_name.to_string(),
                line,
                message: format!("expected {} fields, found {}", LOAN_COLUMNS.len(), record.len()),
            });
        }
        let id = field(&record, 0, "loan_id", loans_name, line)?.to_string();
        let default_month: Month = parse(
            field(&record, 1, "default_month", loans_name, line)?,
            "default_month",
            loans_name,
            line,
        )?;
        let resolution_month: Month = parse(
            field(&record, 2, "resolution_month", loans_name, line)?,
            "resolution_month",
            loans_name,
            line,
        )?;
        let balance: f64 = parse(
            field(&record, 3, "balance_at_default", loans_name, line)?,
            "balance_at_default",
            loans_name,
            line,
        )?;
        let outcome: Outcome = parse(
            field(&record, 4, "outcome", loans_name, line)?,
            "outcome",
            loans_name,
            line,
        )?;
        if !(balance > 0.0) || !balance.is_finite() {
            return Err(Error::Value {
                file: loans_name.to_string(),
                line,
                field: "balance_at_default".into(),
                message: format!("{balance} is not positive; the workout loss divides by the default balance"),
            });
        }
        if resolution_month < default_month {
            return Err(Error::Value {
                file: loans_name.to_string(),
                line,
                field: "resolution_month".into(),
                message: format!("{resolution_month} precedes default month {default_month}"),
            });
        }
        if rows.contains_key(&id) {
            return Err(Error::Value {
                file: loans_name.to_string(),
                line,
                field: "loan_id".into(),
                message: format!("duplicate loan id {id:?}"),
            });
        }
        rows.insert(
            id,
            LoanRow {
                default_month,
                resolution_month,
                balance,
                outcome,
                line,
            },
        );
    }

    let mut flows_by_loan: BTreeMap<String, Vec<(Month, f64)>> = BTreeMap::new();
    let mut rdr = reader(flows);
    check_headers(&mut rdr, &FLOW_COLUMNS, flows_name)?;
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Schema {
            file: flows_name.to_string(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != FLOW_COLUMNS.len() {
            return Err(Error::Schema {
                file: flows_name.to_string(),
                line,
                message: format!("expected {} fields, found {}", FLOW_COLUMNS.len(), record.len()),
            });
        }
        let id = field(&record, 0, "loan_id", flows_name, line)?;
        let Some(loan) = rows.get(id) else {
            return Err(Error::Integrity {
                file: flows_name.to_string(),
                line,
                loan_id: id.to_string(),
            });
        };
        let month: Month = parse(field(&record, 1, "month", flows_name, line)?, "month", flows_name, line)?;
        let amount: f64 = parse(
            field(&record, 2, "net_cash_flow", flows_name, line)?,
            "net_cash_flow",
            flows_name,
            line,
        )?;
        if month < loan.default_month || month > loan.resolution_month {
            return Err(Error::Value {
                file: flows_name.to_string(),
                line,
                field: "month".into(),
                message: format!(
                    "{month} outside the workout window [{}, {}] of loan {id}",
                    loan.default_month, loan.resolution_month
                ),
            });
        }
        if !amount.is_finite() {
            return Err(Error::Value {
                file: flows_name.to_string(),
                line,
                field: "net_cash_flow".into(),
                message: "not finite".into(),
            });
        }
        flows_by_loan.entry(id.to_string()).or_default().push((month, amount));
    }

    let mut loans = Vec::with_capacity(rows.len());
    for (id, row) in rows {
        let flows = flows_by_loan.remove(&id).unwrap_or_default();
        let series = CashFlowSeries::new(
            id,
            row.default_month,
            row.resolution_month,
            row.balance,
            row.outcome,
            flows,
        )
        .map_err(|e| Error::Value {
            file: loans_name.to_string(),
            line: row.line,
            field: "loan".into(),
            message: e.to_string(),
        })?;
        loans.push(series);
    }
    DefaultedPortfolio::new(loans)
}

pub fn ingest(loans_path: impl AsRef<Path>, flows_path: impl AsRef<Path>) -> Result<DefaultedPortfolio> {
    let (lp, fp) = (loans_path.as_ref(), flows_path.as_ref());
    let loans = std::fs::File::open(lp).map_err(|e| Error::io(lp, e))?;
    let flows = std::fs::File::open(fp).map_err(|e| Error::io(fp, e))?;
    ingest_from(loans, &lp.display().to_string(), flows, &fp.display().to_string())
}

/// Writes the loans and flows tables. Amounts use shortest round-trip formatting.
pub fn write_portfolio(
    portfolio: &DefaultedPortfolio,
    mut loans: impl Write,
    mut flows: impl Write,
) -> std::io::Result<()> {
    writeln!(loans, "{SCHEMA_TAG}")?;
    writeln!(loans, "{}", LOAN_COLUMNS.join(","))?;
    writeln!(flows, "{SCHEMA_TAG}")?;
    writeln!(flows, "{}", FLOW_COLUMNS.join(","))?;
    for loan in portfolio.loans() {
        writeln!(
            loans,
            "{},{},{},{},{}",
            loan.loan_id(),
            loan.default_month(),
            loan.resolution_month(),
            loan.balance_at_default(),
            loan.outcome()
        )?;
        for &(month, amount) in loan.flows() {
            writeln!(flows, "{},{},{}", loan.loan_id(), month, amount)?;
        }
    }
    loans.flush()?;
    flows.flush()
}

/// Writes `loans.csv` and `flows.csv` into `dir`, returning their paths.
pub fn write_portfolio_files(
    portfolio: &DefaultedPortfolio,
    dir: impl AsRef<Path>,
) -> Result<(std::path::PathBuf, std::path::PathBuf)> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let lp = dir.join("loans.csv");
    let fp = dir.join("flows.csv");
    let loans = std::fs::File::create(&lp).map_err(|e| Error::io(&lp, e))?;
    let flows = std::fs::File::create(&fp).map_err(|e| Error::io(&fp, e))?;
    write_portfolio(
        portfolio,
        std::io::BufWriter::new(loans),
        std::io::BufWriter::new(flows),
    )
    .map_err(|e| Error::io(dir, e))?;
    Ok((lp, fp))
}
