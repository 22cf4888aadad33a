//! Price files, log-returns and rolling-window fits.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::error::{Result, StableError};
use crate::estimator::{normalize_and_fit, EstimationConfig, FitFlags, FitResult, MIN_SAMPLE};

/// Which price column of a daily quote file to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriceColumn {
    #[default]
    Close,
    AdjClose,
}

impl PriceColumn {
    pub fn header(&self) -> &'static str {
        match self {
            PriceColumn::Close => "Close",
            PriceColumn::AdjClose => "Adj Close",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub dates: Vec<NaiveDate>,
    pub prices: Vec<f64>,
    pub symbol: String,
}

impl PriceSeries {
    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

/// Rows dropped while parsing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseReport {
    /// Rows whose price was `null` or empty.
    pub skipped_missing: usize,
    /// One message per rejected row, naming its line.
    pub row_errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedPrices {
    pub series: PriceSeries,
    pub report: ParseReport,
}

/// Parse a daily quote table with header `Date,Open,High,Low,Close,Adj Close,Volume`.
///
/// Only `Date` and the selected price column are required. Missing prices
/// are skipped and counted; malformed rows are collected in the report and
/// only become fatal when no row survives.
pub fn parse_prices<R: Read>(reader: R, column: PriceColumn, symbol: &str) -> Result<ParsedPrices> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| StableError::Parse(format!("{symbol}: unreadable header: {e}")))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(StableError::NoData.with_context(symbol.to_string()));
    }
    let find = |name: &str| headers.iter().position(|h| h.trim_start_matches('\u{feff}') == name);
    let (Some(date_col), Some(price_col)) = (find("Date"), find(column.header())) else {
        return Err(StableError::Parse(format!(
            "{symbol}: malformed header, need columns Date and {}",
            column.header()
        )));
    };

    let mut dates = Vec::new();
    let mut prices = Vec::new();
    let mut report = ParseReport::default();
    let mut rows = 0usize;
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        rows += 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                report.row_errors.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let price_text = record.get(price_col).unwrap_or("");
        if price_text.is_empty() || price_text.eq_ignore_ascii_case("null") {
            report.skipped_missing += 1;
            continue;
        }
        let date_text = record.get(date_col).unwrap_or("");
        let date = match NaiveDate::parse_from_str(date_text, "%Y-%m-%d") {
            Ok(d) => d,
            Err(_) => {
                report.row_errors.push(format!("line {line}: unparsable date {date_text:?}"));
                continue;
            }
        };
        let price: f64 = match price_text.parse() {
            Ok(p) if p > 0.0 && f64::is_finite(p) => p,
            Ok(p) => {
                report.row_errors.push(format!("line {line}: non-positive price {p}"));
                continue;
            }
            Err(_) => {
                report.row_errors.push(format!("line {line}: unparsable price {price_text:?}"));
                continue;
            }
        };
        if dates.last().is_some_and(|last| *last >= date) {
            report.row_errors.push(format!("line {line}: date {date} is not after the previous row"));
            continue;
        }
        dates.push(date);
        prices.push(price);
    }
    if prices.is_empty() {
        if rows == report.skipped_missing {
            return Err(StableError::NoData.with_context(symbol.to_string()));
        }
        let first = report.row_errors.first().cloned().unwrap_or_default();
        return Err(StableError::Parse(format!(
            "{symbol}: no valid rows ({} rejected; first: {first})",
            report.row_errors.len()
        )));
    }
    Ok(ParsedPrices {
        series: PriceSeries {
            dates,
            prices,
            symbol: symbol.to_string(),
        },
        report,
    })
}

/// [`parse_prices`] on a file; the symbol is the file stem.
pub fn read_price_file(path: &Path, column: PriceColumn) -> Result<ParsedPrices> {
    let symbol = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let file = File::open(path).map_err(|e| StableError::from(e).with_context(path.display().to_string()))?;
    parse_prices(file, column, &symbol)
}

/// Daily log-returns; `dates[t]` is the date of the later price.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub dates: Vec<NaiveDate>,
    pub returns: Vec<f64>,
    pub symbol: String,
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }
}

pub fn log_returns(p: &PriceSeries) -> Result<ReturnSeries> {
    if p.len() < 2 {
        return Err(StableError::TooShort {
            needed: 2,
            got: p.len(),
        });
    }
    Ok(ReturnSeries {
        dates: p.dates[1..].to_vec(),
        returns: p.prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect(),
        symbol: p.symbol.clone(),
    })
}

pub fn fit_series(r: &ReturnSeries, config: &EstimationConfig) -> Result<FitResult> {
    normalize_and_fit(&r.returns, config).map_err(|e| e.with_context(r.symbol.clone()))
}

/// Per-day estimates from the preceding `window` returns.
///
/// Entry `i` belongs to return index `indices[i]` and was fitted on returns
/// `indices[i] - window .. indices[i]`. Failed windows hold `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct RollingResult {
    pub dates: Vec<NaiveDate>,
    pub indices: Vec<usize>,
    pub alphas: Vec<Option<f64>>,
    pub betas: Vec<Option<f64>>,
    pub flags: Vec<FitFlags>,
    pub window: usize,
}

impl RollingResult {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

pub fn rolling_fit(r: &ReturnSeries, window: usize, config: &EstimationConfig) -> Result<RollingResult> {
    if window < MIN_SAMPLE {
        return Err(StableError::Domain {
            field: "window",
            value: window as f64,
            reason: "must be at least 100",
        });
    }
    if r.len() < window + 1 {
        return Err(StableError::TooShort {
            needed: window + 1,
            got: r.len(),
        });
    }
    config.validate()?;
    let fits: Vec<(Option<(f64, f64)>, FitFlags)> = (window..r.len())
        .into_par_iter()
        .map(|t| match normalize_and_fit(&r.returns[t - window..t], config) {
            Ok(fit) => (Some((fit.params.alpha(), fit.params.beta())), fit.flags),
            Err(e) => (None, FitFlags::from_error(&e)),
        })
        .collect();
    let (estimates, flags): (Vec<_>, Vec<_>) = fits.into_iter().unzip();
    Ok(RollingResult {
        dates: r.dates[window..].to_vec(),
        indices: (window..r.len()).collect(),
        alphas: estimates.iter().map(|e| e.map(|v| v.0)).collect(),
        betas: estimates.iter().map(|e| e.map(|v| v.1)).collect(),
        flags,
        window,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Track {
    Alpha,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalMin {
    pub value: f64,
    pub date: NaiveDate,
    pub index: usize,
}

fn min_in_range(
    points: impl Iterator<Item = (NaiveDate, usize, Option<f64>)>,
    from: NaiveDate,
    to: NaiveDate,
) -> Result<LocalMin> {
    let mut best: Option<LocalMin> = None;
    for (date, index, value) in points {
        if date < from || date > to {
            continue;
        }
        let Some(value) = value else { continue };
        // strict comparison keeps the earliest of equal values
        if best.is_none_or(|b| value < b.value) {
            best = Some(LocalMin { value, date, index });
        }
    }
    best.ok_or_else(|| StableError::EmptyRange(format!("no valid values between {from} and {to}")))
}

/// Minimum of a rolling track over `[from, to]`; `index` is the return index.
pub fn find_local_min(res: &RollingResult, track: Track, from: NaiveDate, to: NaiveDate) -> Result<LocalMin> {
    let values = match track {
        Track::Alpha => &res.alphas,
        Track::Beta => &res.betas,
    };
    min_in_range(
        res.dates.iter().zip(&res.indices).zip(values).map(|((d, i), v)| (*d, *i, *v)),
        from,
        to,
    )
}

/// Minimum price over `[from, to]`; `index` is the price index.
pub fn find_price_min(p: &PriceSeries, from: NaiveDate, to: NaiveDate) -> Result<LocalMin> {
    min_in_range(
        p.dates.iter().zip(&p.prices).enumerate().map(|(i, (d, v))| (*d, i, Some(*v))),
        from,
        to,
    )
}
