//! Price CSV loading and summary-statistics output.

use std::path::Path;

use chrono::NaiveDate;
use copdep_core::series::{log_returns, summary_stats, PriceSeries, SummaryStats};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{sig6, write_csv, write_json};

pub const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRow {
    /// 1-based line number in the file (the header is line 1).
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Loaded {
    pub series: PriceSeries,
    pub skipped: Vec<SkippedRow>,
}

/// Reads `date_column` / `value_column` from a headed CSV. Rows with a
/// missing, unparseable or non-positive price are skipped and reported;
/// output is sorted by date.
pub fn load_price_csv(path: &Path, name: &str, date_column: &str, value_column: &str) -> Result<Loaded> {
    if !path.is_file() {
        return Err(Error::Validation(format!("input file {} not found", path.display())));
    }
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let column = |label: &str| {
        headers
            .iter()
            .position(|h| h == label)
            .ok_or_else(|| Error::Validation(format!("{}: column {label:?} not found", path.display())))
    };
    let (di, vi) = (column(date_column)?, column(value_column)?);

    let mut rows: Vec<(NaiveDate, f64)> = Vec::new();
    let mut skipped = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k as u64 + 2;
        let rec = rec.map_err(csv_err)?;
        let raw_date = rec.get(di).unwrap_or("");
        let date = NaiveDate::parse_from_str(raw_date, DATE_FORMAT).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("date {raw_date:?}: {e}"),
        })?;
        let raw = rec.get(vi).unwrap_or("");
        let reason = match raw.parse::<f64>() {
            _ if raw.is_empty() => Some("missing price".to_string()),
            Ok(p) if p.is_finite() && p > 0.0 => {
                rows.push((date, p));
                None
            }
            Ok(p) => Some(format!("non-positive or non-finite price {p}")),
            Err(_) => Some(format!("unparseable price {raw:?}")),
        };
        if let Some(reason) = reason {
            skipped.push(SkippedRow { line, reason });
        }
    }
    if rows.is_empty() {
        return Err(Error::Validation(format!("{}: no usable rows", path.display())));
    }
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Validation(format!(
            "{}: duplicate date {}",
            path.display(),
            w[0].0
        )));
    }
    let (dates, prices) = rows.into_iter().unzip();
    Ok(Loaded {
        series: PriceSeries::new(name, dates, prices)?,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub name: String,
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
    pub stats: SummaryStats,
    pub skipped_rows: Vec<SkippedRow>,
}

pub fn summarize(loaded: &Loaded) -> Result<SeriesSummary> {
    let r = log_returns(&loaded.series)?;
    Ok(SeriesSummary {
        name: loaded.series.name.clone(),
        first_date: r.dates[0],
        last_date: *r.dates.last().expect("non-empty returns"),
        stats: summary_stats(&r.returns)?,
        skipped_rows: loaded.skipped.clone(),
    })
}

pub const SUMMARY_HEADER: [&str; 11] = [
    "series",
    "mean",
    "median",
    "max",
    "min",
    "std_dev",
    "skewness",
    "kurtosis",
    "jarque_bera",
    "jb_pvalue",
    "n",
];

pub fn write_summaries(json: &Path, csv: &Path, rows: &[SeriesSummary]) -> Result<()> {
    write_json(json, rows)?;
    write_csv(
        csv,
        &SUMMARY_HEADER,
        rows.iter().map(|s| {
            let t = &s.stats;
            vec![
                s.name.clone(),
                sig6(t.mean),
                sig6(t.median),
                sig6(t.max),
                sig6(t.min),
                sig6(t.std_dev),
                sig6(t.skewness),
                sig6(t.kurtosis),
                sig6(t.jarque_bera_stat),
                sig6(t.jarque_bera_pvalue),
                t.n.to_string(),
            ]
        }),
    )
}

pub fn write_price_csv(path: &Path, p: &PriceSeries) -> Result<()> {
    write_csv(
        path,
        &["date", "price"],
        p.dates
            .iter()
            .zip(&p.prices)
            .map(|(d, x)| vec![d.format(DATE_FORMAT).to_string(), sig6(*x)]),
    )
}
