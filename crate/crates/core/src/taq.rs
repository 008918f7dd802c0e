//! Trade-file ingestion: parsing, same-timestamp aggregation, per-day pair alignment,
//! inter-arrival statistics and saturation scaling of empirical curves.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Leg, Result};
use crate::estimators::Method;
use crate::experiments::EppsCurve;
use crate::sampling::{align_at_first_common, ArrivalSet, TickSeries};

/// Length of the trading session in seconds.
pub const SESSION_LENGTH: f64 = 28_200.0;

pub const HEADER: [&str; 5] = ["date", "ticker", "timestamp", "price", "volume"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    /// ISO date `YYYY-MM-DD`.
    pub date: String,
    pub ticker: String,
    /// Seconds since the start of the day.
    pub timestamp: f64,
    pub price: f64,
    pub volume: f64,
}

/// A rejected input row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowWarning {
    /// 1-based line number in the file, header included.
    pub line: u64,
    pub message: String,
}

impl std::fmt::Display for RowWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimestampFormat {
    /// Decimal seconds, e.g. `34200.125`.
    Seconds,
    /// Wall clock `HH:MM:SS[.fff]`.
    Clock,
}

/// Records keyed by `(ticker, date)`, each list sorted by timestamp.
pub type TradeBook = BTreeMap<(String, String), Vec<TradeRecord>>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedTrades {
    pub book: TradeBook,
    pub warnings: Vec<RowWarning>,
    /// Format detected from the first data row; absent for an empty file.
    pub format: Option<TimestampFormat>,
}

impl ParsedTrades {
    /// Merges another parse result, re-sorting touched lists.
    pub fn merge(&mut self, other: ParsedTrades) {
        for (key, mut records) in other.book {
            let list = self.book.entry(key).or_default();
            list.append(&mut records);
            list.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        }
        self.warnings.extend(other.warnings);
        self.format = self.format.or(other.format);
    }

    pub fn tickers(&self) -> Vec<&str> {
        let mut t: Vec<&str> = self.book.keys().map(|(t, _)| t.as_str()).collect();
        t.dedup();
        t
    }

    pub fn records(&self, ticker: &str, date: &str) -> Option<&[TradeRecord]> {
        self.book.get(&(ticker.to_string(), date.to_string())).map(Vec::as_slice)
    }

    /// Dates on which `ticker` traded, ascending.
    pub fn dates(&self, ticker: &str) -> Vec<&str> {
        self.book
            .keys()
            .filter(|(t, _)| t == ticker)
            .map(|(_, d)| d.as_str())
            .collect()
    }
}

fn detect_format(field: &str) -> TimestampFormat {
    if field.contains(':') {
        TimestampFormat::Clock
    } else {
        TimestampFormat::Seconds
    }
}

fn parse_timestamp(field: &str, format: TimestampFormat) -> std::result::Result<f64, String> {
    let value = match format {
        TimestampFormat::Seconds => field
            .parse::<f64>()
            .map_err(|_| format!("timestamp '{field}' is not decimal seconds"))?,
        TimestampFormat::Clock => {
            let parts: Vec<&str> = field.split(':').collect();
            let [h, m, s] = parts[..] else {
                return Err(format!("timestamp '{field}' is not HH:MM:SS[.fff]"));
            };
            let h: u32 = h.parse().map_err(|_| format!("bad hour in '{field}'"))?;
            let m: u32 = m.parse().map_err(|_| format!("bad minute in '{field}'"))?;
            let s: f64 = s.parse().map_err(|_| format!("bad second in '{field}'"))?;
            if m >= 60 || !(0.0..60.0).contains(&s) {
                return Err(format!("timestamp '{field}' out of range"));
            }
            f64::from(h * 3600 + m * 60) + s
        }
    };
    if !(0.0..86_400.0).contains(&value) {
        return Err(format!("timestamp '{field}' outside the day"));
    }
    Ok(value)
}

fn parse_row(row: &csv::StringRecord, format: TimestampFormat) -> std::result::Result<TradeRecord, String> {
    if row.len() != HEADER.len() {
        return Err(format!("expected {} fields, found {}", HEADER.len(), row.len()));
    }
    let date = row[0].trim();
    NaiveDate::parse_from_str(date, "%Y-%m-%d").map_err(|_| format!("date '{date}' is not YYYY-MM-DD"))?;
    let ticker = row[1].trim();
    if ticker.is_empty() {
        return Err("empty ticker".into());
    }
    let timestamp = parse_timestamp(row[2].trim(), format)?;
    let positive = |name: &str, field: &str| -> std::result::Result<f64, String> {
        let v: f64 = field.trim().parse().map_err(|_| format!("{name} '{field}' is not a number"))?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(format!("{name} must be positive, got {field}"))
        }
    };
    Ok(TradeRecord {
        date: date.to_string(),
        ticker: ticker.to_string(),
        timestamp,
        price: positive("price", &row[3])?,
        volume: positive("volume", &row[4])?,
    })
}

/// Parses a trade CSV with header `date,ticker,timestamp,price,volume`.
///
/// Malformed rows are skipped with a line-numbered warning; a wrong header is an error.
/// Records are sorted stably by timestamp within each `(ticker, date)` and trades sharing a
/// timestamp are merged by [`aggregate_same_timestamp`].
pub fn parse_trades<R: Read>(reader: R) -> Result<ParsedTrades> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_error("<input>", e))?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != HEADER {
        return Err(Error::Input {
            path: "<input>".into(),
            message: format!("header must be '{}', found '{}'", HEADER.join(","), names.join(",")),
        });
    }

    let mut out = ParsedTrades::default();
    let mut raw: TradeBook = BTreeMap::new();
    for row in rdr.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                out.warnings.push(RowWarning {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        if row.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let format = *out
            .format
            .get_or_insert_with(|| detect_format(row.get(2).unwrap_or("").trim()));
        match parse_row(&row, format) {
            Ok(rec) => raw.entry((rec.ticker.clone(), rec.date.clone())).or_default().push(rec),
            Err(message) => out.warnings.push(RowWarning { line, message }),
        }
    }
    for (key, mut records) in raw {
        records.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        out.book.insert(key, aggregate_same_timestamp(&records));
    }
    Ok(out)
}

fn csv_error(path: &str, e: csv::Error) -> Error {
    Error::Input {
        path: path.into(),
        message: e.to_string(),
    }
}

pub fn parse_trades_file(path: &Path) -> Result<ParsedTrades> {
    let file = std::fs::File::open(path).map_err(|e| Error::Input {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_trades(std::io::BufReader::new(file)).map_err(|e| match e {
        Error::Input { message, .. } => Error::Input {
            path: path.display().to_string(),
            message,
        },
        other => other,
    })
}

/// Merges runs of equal timestamps in a sorted list into one trade at the volume-weighted mean
/// price carrying the summed volume. Timestamps are compared bit for bit.
pub fn aggregate_same_timestamp(records: &[TradeRecord]) -> Vec<TradeRecord> {
    let mut out: Vec<TradeRecord> = Vec::with_capacity(records.len());
    let mut notional = 0.0;
    for r in records {
        match out.last_mut() {
            Some(last) if last.timestamp == r.timestamp => {
                notional += r.price * r.volume;
                last.volume += r.volume;
                last.price = notional / last.volume;
            }
            _ => {
                notional = r.price * r.volume;
                out.push(r.clone());
            }
        }
    }
    out
}

/// Writes records in the input layout with decimal-second timestamps.
pub fn write_trades<W: Write>(records: &[TradeRecord], mut out: W) -> Result<()> {
    writeln!(out, "{}", HEADER.join(","))?;
    for r in records {
        writeln!(out, "{},{},{},{},{}", r.date, r.ticker, r.timestamp, r.price, r.volume)?;
    }
    Ok(())
}

/// Trading window within a day's timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Session {
    /// Session start in seconds since day start.
    pub open: f64,
    pub length: f64,
}

impl Default for Session {
    fn default() -> Self {
        Session {
            open: 0.0,
            length: SESSION_LENGTH,
        }
    }
}

impl Session {
    pub fn close(&self) -> f64 {
        self.open + self.length
    }
}

/// Log-price tick series of two assets on one day, on a clock that starts once both have traded.
#[derive(Debug, Clone, PartialEq)]
pub struct DayPair {
    pub date: String,
    pub first: TickSeries,
    pub second: TickSeries,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum SkipDay {
    /// A leg has no trade inside the session.
    NoTrades { leg: Leg },
}

impl std::fmt::Display for SkipDay {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SkipDay::NoTrades { leg } => write!(f, "no trades in session ({leg} leg)"),
        }
    }
}

fn in_session(records: &[TradeRecord], session: Session) -> Vec<&TradeRecord> {
    records
        .iter()
        .filter(|r| r.timestamp >= session.open && r.timestamp <= session.close())
        .collect()
}

fn session_series(records: &[&TradeRecord], session: Session) -> TickSeries {
    let times = records.iter().map(|r| r.timestamp - session.open).collect();
    let arrivals = ArrivalSet::new(times, session.length).expect("sorted in-session timestamps");
    TickSeries::new(arrivals, records.iter().map(|r| r.price.ln()).collect()).expect("matching lengths")
}

/// Builds the aligned log-price pair of one day.
///
/// Trades outside the session are dropped. The clock origin is the later of the two first
/// trades; on the other leg the last trade at or before it becomes the value at time 0. The
/// horizon runs to the session close.
pub fn build_day_pair(
    a: &[TradeRecord],
    b: &[TradeRecord],
    session: Session,
) -> std::result::Result<DayPair, SkipDay> {
    let (ra, rb) = (in_session(a, session), in_session(b, session));
    if let Some(leg) = Leg::from_flags(ra.is_empty(), rb.is_empty()) {
        return Err(SkipDay::NoTrades { leg });
    }
    let (first, second) = align_at_first_common(&session_series(&ra, session), &session_series(&rb, session))
        .expect("both legs non-empty within the session");
    Ok(DayPair {
        date: ra[0].date.clone(),
        first,
        second,
    })
}

/// Day pairs for two tickers over their common dates, with the skipped dates.
pub fn day_pairs(
    trades: &ParsedTrades,
    ticker_a: &str,
    ticker_b: &str,
    session: Session,
) -> (Vec<DayPair>, Vec<(String, SkipDay)>) {
    let mut dates: Vec<&str> = trades.dates(ticker_a);
    dates.extend(trades.dates(ticker_b));
    dates.sort_unstable();
    dates.dedup();
    let (mut pairs, mut skipped) = (Vec::new(), Vec::new());
    for date in dates {
        let a = trades.records(ticker_a, date).unwrap_or(&[]);
        let b = trades.records(ticker_b, date).unwrap_or(&[]);
        match build_day_pair(a, b, session) {
            Ok(p) => pairs.push(p),
            Err(reason) => skipped.push((date.to_string(), reason)),
        }
    }
    (pairs, skipped)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterarrivalStats {
    /// Mean time between consecutive trades, seconds.
    pub mean: f64,
    /// Sample standard deviation of the inter-arrival times.
    pub sd: f64,
    pub intervals: usize,
    /// Days that contributed at least one interval.
    pub days: usize,
}

/// Pooled inter-arrival statistics over days; intervals never span two days.
pub fn interarrival_stats<'a>(days: impl IntoIterator<Item = &'a [TradeRecord]>) -> Result<InterarrivalStats> {
    let mut gaps = Vec::new();
    let mut used = 0;
    for day in days {
        if day.len() >= 2 {
            used += 1;
            gaps.extend(day.windows(2).map(|w| w[1].timestamp - w[0].timestamp));
        }
    }
    let n = gaps.len();
    if n == 0 {
        return Err(Error::InsufficientData("no day with two or more trades".into()));
    }
    let mean = gaps.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (gaps.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(InterarrivalStats {
        mean,
        sd,
        intervals: n,
        days: used,
    })
}

/// Divides every mean and half-width by the saturation level: the average measured
/// correlation over the largest tenth of the sampling-interval grid.
pub fn saturation_scale(curve: &EppsCurve) -> Result<EppsCurve> {
    let measured = curve.series(Method::Measured.label());
    if measured.is_empty() {
        return Err(Error::InsufficientData("curve has no measured series".into()));
    }
    let top = measured.len().div_ceil(10);
    let tail: Vec<f64> = measured[measured.len() - top..].iter().filter_map(|p| p.mean).collect();
    if tail.is_empty() {
        return Err(Error::InsufficientData("no measured estimate in the top decile".into()));
    }
    let level = tail.iter().sum::<f64>() / tail.len() as f64;
    if !(level > 0.0 && level.is_finite()) {
        return Err(Error::Scaling(level));
    }
    let mut scaled = curve.clone();
    for p in &mut scaled.points {
        p.mean = p.mean.map(|m| m / level);
        p.half_width = p.half_width.map(|h| h / level);
    }
    for r in &mut scaled.reference {
        r.value /= level;
    }
    scaled.saturation_level = Some(level);
    scaled.notes.push(format!(
        "scaled by saturation level {level}: mean measured correlation over the top {top} grid point(s)"
    ));
    Ok(scaled)
}
