//! Risk-free rate estimation from a dated bond yield curve.
//!
//! For each trading day the yield at the target tenor is obtained by linear
//! interpolation between the two bracketing tenors (flat beyond the ends),
//! then the daily values are averaged over a reference period.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use serde::Deserialize;

use crate::error::{Error, Result};

/// Calendar days searched backwards when a date has no quotes.
pub const LOOKBACK_DAYS: i64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct CurveObservation {
    pub date: NaiveDate,
    pub tenor_months: u32,
    #[serde(rename = "yield")]
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct YieldCurve {
    by_date: BTreeMap<NaiveDate, Vec<(u32, f64)>>,
}

impl YieldCurve {
    pub fn new(observations: impl IntoIterator<Item = CurveObservation>) -> Result<Self> {
        let mut by_date: BTreeMap<NaiveDate, Vec<(u32, f64)>> = BTreeMap::new();
        for obs in observations {
            if !obs.rate.is_finite() {
                return Err(Error::InvalidCurve(format!(
                    "non-finite yield on {} at tenor {}m",
                    obs.date, obs.tenor_months
                )));
            }
            by_date.entry(obs.date).or_default().push((obs.tenor_months, obs.rate));
        }
        for (date, nodes) in &mut by_date {
            nodes.sort_by_key(|&(tenor, _)| tenor);
            if nodes.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidCurve(format!("duplicate tenor on {date}")));
            }
            if nodes.len() < 2 {
                return Err(Error::InvalidCurve(format!(
                    "{date} has a single tenor; interpolation needs two"
                )));
            }
        }
        Ok(Self { by_date })
    }

    /// Reads `date,tenor_months,yield` rows.
    pub fn from_reader(reader: impl Read, source: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut observations = Vec::new();
        for record in rdr.deserialize::<CurveObservation>() {
            observations.push(record.map_err(|e| Error::Schema {
                file: source.to_string(),
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?);
        }
        Self::new(observations)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file, &path.display().to_string())
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.by_date.keys().copied()
    }

    /// Yield at `target_tenor` months on `date`, falling back to the most
    /// recent quote date within [`LOOKBACK_DAYS`].
    pub fn interpolate_rate(&self, date: NaiveDate, target_tenor: f64) -> Result<f64> {
        let earliest = date - Duration::days(LOOKBACK_DAYS);
        let (_, nodes) = self
            .by_date
            .range(earliest..=date)
            .next_back()
            .ok_or_else(|| Error::NoCurveData(date.to_string()))?;
        Ok(interpolate_nodes(nodes, target_tenor))
    }

    pub fn mean_risk_free(&self, period: &ReferencePeriod) -> Result<f64> {
        let mut total = 0.0;
        let mut days = 0usize;
        for nodes in self.by_date.range(period.start..=period.end).map(|(_, n)| n) {
            total += interpolate_nodes(nodes, period.target_tenor_months);
            days += 1;
        }
        if days == 0 {
            return Err(Error::NoCurveData(format!("{} to {}", period.start, period.end)));
        }
        Ok(total / days as f64)
    }
}

fn interpolate_nodes(nodes: &[(u32, f64)], tenor: f64) -> f64 {
    let (first_tenor, first_rate) = nodes[0];
    let (last_tenor, last_rate) = nodes[nodes.len() - 1];
    if tenor <= first_tenor as f64 {
        return first_rate;
    }
    if tenor >= last_tenor as f64 {
        return last_rate;
    }
    let upper = nodes.partition_point(|&(t, _)| (t as f64) < tenor);
    let (t1, r1) = nodes[upper];
    if t1 as f64 == tenor {
        return r1;
    }
    let (t0, r0) = nodes[upper - 1];
    let w = (tenor - t0 as f64) / (t1 as f64 - t0 as f64);
    r0 + w * (r1 - r0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePeriod {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub target_tenor_months: f64,
}

impl ReferencePeriod {
    pub fn new(start: NaiveDate, end: NaiveDate, target_tenor_months: f64) -> Result<Self> {
        if start > end {
            return Err(Error::InvalidCurve(format!(
                "reference period starts {start} after it ends {end}"
            )));
        }
        if !(target_tenor_months >= 0.0) || !target_tenor_months.is_finite() {
            return Err(Error::InvalidParameter {
                name: "target_tenor_months",
                value: target_tenor_months,
                reason: "must be finite and non-negative",
            });
        }
        Ok(Self {
            start,
            end,
            target_tenor_months,
        })
    }
}
