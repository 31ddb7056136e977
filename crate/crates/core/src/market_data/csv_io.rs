//! CSV ingestion and export.
//!
//! Two layouts are accepted:
//!
//! * a directory with one `<TICKER>.csv` per asset, header
//!   `date,open,high,low,close,volume`;
//! * a single long-format file with header
//!   `ticker,date,open,high,low,close,volume`.
//!
//! A row whose `close` is empty (or `NaN`/`NA`/`null`) is a missing day. Missing
//! days before a ticker's first close stay absent; later ones are
//! forward-filled (open = high = low = previous close, volume = 0).

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;

use super::{check_bar, OhlcvPanel};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

const HEADER: [&str; 6] = ["date", "open", "high", "low", "close", "volume"];

/// Raw bar as read from disk; `None` marks a missing day.
#[derive(Clone, Copy, Debug)]
struct Bar {
    open: f64,
    high: f64,
    low: f64,
    close: f64,
    volume: f64,
}

type Series = BTreeMap<NaiveDate, Option<Bar>>;

/// Loads a panel from a directory of per-ticker files or a long-format file.
///
/// With `universe` set only those tickers are loaded (in the given order);
/// otherwise every ticker found, sorted by name.
pub fn load_panel(path: &Path, universe: Option<&[String]>) -> Result<OhlcvPanel> {
    let mut series: BTreeMap<String, Series> = if path.is_dir() {
        read_dir(path, universe)?
    } else {
        read_long(path)?
    };
    let tickers: Vec<String> = match universe {
        Some(u) => {
            if let Some(missing) = u.iter().find(|t| !series.contains_key(*t)) {
                return Err(Error::UnknownName(missing.clone()));
            }
            u.to_vec()
        }
        None => series.keys().cloned().collect(),
    };
    if tickers.is_empty() {
        return Err(Error::EmptyIntersection);
    }

    let mut common: Option<BTreeSet<NaiveDate>> = None;
    for t in &tickers {
        let dates: BTreeSet<NaiveDate> = series[t].keys().copied().collect();
        common = Some(match common {
            None => dates,
            Some(c) => c.intersection(&dates).copied().collect(),
        });
    }
    let dates: Vec<NaiveDate> = common.unwrap_or_default().into_iter().collect();
    if dates.is_empty() {
        return Err(Error::EmptyIntersection);
    }

    let (p, s) = (dates.len(), tickers.len());
    let mut m = [(); 5].map(|_| Matrix::filled(p, s, f64::NAN));
    for (i, t) in tickers.iter().enumerate() {
        let bars = series.remove(t).unwrap_or_default();
        let mut last_close: Option<f64> = None;
        let mut valid = 0;
        for (d, date) in dates.iter().enumerate() {
            let bar = match (bars.get(date).copied().flatten(), last_close) {
                (Some(b), _) => {
                    valid += 1;
                    b
                }
                (None, Some(c)) => Bar {
                    open: c,
                    high: c,
                    low: c,
                    close: c,
                    volume: 0.0,
                },
                (None, None) => continue,
            };
            last_close = Some(bar.close);
            for (k, v) in [bar.open, bar.high, bar.low, bar.close, bar.volume]
                .into_iter()
                .enumerate()
            {
                m[k][(d, i)] = v;
            }
        }
        if valid < 2 {
            return Err(Error::InsufficientCloses {
                ticker: t.clone(),
                count: valid,
            });
        }
    }
    let [open, high, low, close, volume] = m;
    OhlcvPanel::new(dates, tickers, open, high, low, close, volume)
}

fn read_dir(dir: &Path, universe: Option<&[String]>) -> Result<BTreeMap<String, Series>> {
    let mut out = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        let Some(ticker) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        if universe.is_some_and(|u| !u.iter().any(|t| t == ticker)) {
            continue;
        }
        files.push((ticker.to_string(), path));
    }
    files.sort();
    for (ticker, path) in files {
        let mut rdr = open_reader(&path)?;
        let label = path.display().to_string();
        check_header(&mut rdr, &label, &HEADER)?;
        let mut series = Series::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_error(&label, e))?;
            let line = rec.position().map_or(0, |p| p.line());
            let fields: Vec<&str> = rec.iter().collect();
            insert_row(&mut series, &fields, &label, line)?;
        }
        out.insert(ticker, series);
    }
    Ok(out)
}

fn read_long(path: &Path) -> Result<BTreeMap<String, Series>> {
    let mut rdr = open_reader(path)?;
    let label = path.display().to_string();
    let header: Vec<&str> = std::iter::once("ticker").chain(HEADER).collect();
    check_header(&mut rdr, &label, &header)?;
    let mut out: BTreeMap<String, Series> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(&label, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let fields: Vec<&str> = rec.iter().collect();
        let ticker = fields.first().copied().unwrap_or_default().trim();
        if ticker.is_empty() {
            return Err(malformed(&label, line, "empty ticker"));
        }
        let series = out.entry(ticker.to_string()).or_default();
        insert_row(series, &fields[1..], &label, line)?;
    }
    Ok(out)
}

fn open_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file))
}

fn check_header(rdr: &mut csv::Reader<fs::File>, label: &str, expected: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(|e| csv_error(label, e))?;
    let got: Vec<String> = header.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
    if got != expected {
        return Err(malformed(
            label,
            1,
            &format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn insert_row(series: &mut Series, fields: &[&str], label: &str, line: u64) -> Result<()> {
    if fields.len() != HEADER.len() {
        return Err(malformed(
            label,
            line,
            &format!("expected {} fields, found {}", HEADER.len(), fields.len()),
        ));
    }
    let date: NaiveDate = fields[0]
        .trim()
        .parse()
        .map_err(|e| malformed(label, line, &format!("bad date `{}`: {e}", fields[0])))?;
    let mut values = [0.0; 5];
    let mut missing_close = false;
    for (k, raw) in fields[1..].iter().enumerate() {
        match parse_number(raw) {
            Ok(Some(v)) => values[k] = v,
            Ok(None) if k == 3 => missing_close = true,
            Ok(None) => values[k] = f64::NAN,
            Err(msg) => return Err(malformed(label, line, &msg)),
        }
    }
    let bar = if missing_close {
        None
    } else {
        let [open, high, low, close, volume] = values;
        let volume = if volume.is_nan() { 0.0 } else { volume };
        check_bar(open, high, low, close, volume).map_err(|m| malformed(label, line, &m))?;
        Some(Bar {
            open,
            high,
            low,
            close,
            volume,
        })
    };
    if series.insert(date, bar).is_some() {
        return Err(malformed(label, line, &format!("duplicate date {date}")));
    }
    Ok(())
}

fn parse_number(raw: &str) -> std::result::Result<Option<f64>, String> {
    let t = raw.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("nan") || t.eq_ignore_ascii_case("na") || t == "null" {
        return Ok(None);
    }
    t.parse::<f64>()
        .map(Some)
        .map_err(|_| format!("bad number `{t}`"))
}

fn malformed(label: &str, line: u64, message: &str) -> Error {
    Error::MalformedRow {
        file: label.to_string(),
        line,
        message: message.to_string(),
    }
}

fn csv_error(label: &str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    malformed(label, line, &e.to_string())
}

fn format_cell(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

/// Writes one `<TICKER>.csv` per asset into `dir` (created if needed).
pub fn write_panel_dir(panel: &OhlcvPanel, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, ticker) in panel.tickers().iter().enumerate() {
        let path = dir.join(format!("{ticker}.csv"));
        let mut out = String::new();
        out.push_str(&HEADER.join(","));
        out.push('\n');
        for (d, date) in panel.dates().iter().enumerate() {
            push_bar(&mut out, panel, d, i, &date.to_string());
        }
        fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Writes the whole panel as one long-format file.
pub fn write_panel_long(panel: &OhlcvPanel, path: &Path) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = String::from("ticker,");
    out.push_str(&HEADER.join(","));
    out.push('\n');
    for (i, ticker) in panel.tickers().iter().enumerate() {
        for (d, date) in panel.dates().iter().enumerate() {
            push_bar(&mut out, panel, d, i, &format!("{ticker},{date}"));
        }
    }
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

fn push_bar(out: &mut String, panel: &OhlcvPanel, d: usize, i: usize, prefix: &str) {
    use super::Field::*;
    out.push_str(prefix);
    for f in [Open, High, Low, Close, Volume] {
        out.push(',');
        out.push_str(&format_cell(panel.field(f)[(d, i)]));
    }
    out.push('\n');
}
