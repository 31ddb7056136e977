//! Daily OHLCV panels, simple returns, CSV ingestion and a seeded synthetic
//! generator.
//!
//! Absent cells (an asset that has not started trading yet) are stored as
//! `NaN` in every matrix. Interior gaps are forward-filled at load time, so
//! once an asset has a first close it stays present.

mod csv_io;
mod synthetic;

pub use csv_io::{load_panel, write_panel_dir, write_panel_long};
pub use synthetic::{generate_synthetic, SyntheticSpec};
pub(crate) use synthetic::weekdays_from;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Debug)]
pub struct OhlcvPanel {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    open: Matrix,
    high: Matrix,
    low: Matrix,
    close: Matrix,
    volume: Matrix,
}

/// One of the five primitive series of a panel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Field {
    Open,
    High,
    Low,
    Close,
    Volume,
}

impl Field {
    pub const ALL: [Field; 5] = [
        Field::Open,
        Field::High,
        Field::Low,
        Field::Close,
        Field::Volume,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::Open => "open",
            Field::High => "high",
            Field::Low => "low",
            Field::Close => "close",
            Field::Volume => "volume",
        }
    }

    pub fn from_name(name: &str) -> Option<Field> {
        Field::ALL.into_iter().find(|f| f.name() == name)
    }
}

impl OhlcvPanel {
    /// Assembles a panel and checks every invariant.
    pub fn new(
        dates: Vec<NaiveDate>,
        tickers: Vec<String>,
        open: Matrix,
        high: Matrix,
        low: Matrix,
        close: Matrix,
        volume: Matrix,
    ) -> Result<Self> {
        let panel = Self {
            dates,
            tickers,
            open,
            high,
            low,
            close,
            volume,
        };
        panel.validate()?;
        Ok(panel)
    }

    pub fn validate(&self) -> Result<()> {
        let shape = (self.dates.len(), self.tickers.len());
        for (name, m) in [
            ("open", &self.open),
            ("high", &self.high),
            ("low", &self.low),
            ("close", &self.close),
            ("volume", &self.volume),
        ] {
            if m.shape() != shape {
                return Err(Error::InvalidShape(format!(
                    "{name} matrix is {:?}, expected {shape:?}",
                    m.shape()
                )));
            }
        }
        if let Some(w) = self.dates.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::InvalidShape(format!(
                "dates not strictly increasing at {}",
                self.dates[w + 1]
            )));
        }
        for d in 0..shape.0 {
            for i in 0..shape.1 {
                let c = self.close[(d, i)];
                if c.is_nan() {
                    continue;
                }
                let (o, h, l, v) = (
                    self.open[(d, i)],
                    self.high[(d, i)],
                    self.low[(d, i)],
                    self.volume[(d, i)],
                );
                check_bar(o, h, l, c, v).map_err(|message| {
                    Error::InvalidShape(format!(
                        "{} on {}: {message}",
                        self.tickers[i], self.dates[d]
                    ))
                })?;
            }
        }
        Ok(())
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    /// Number of days `p`.
    pub fn days(&self) -> usize {
        self.dates.len()
    }

    /// Number of assets `s`.
    pub fn assets(&self) -> usize {
        self.tickers.len()
    }

    pub fn field(&self, field: Field) -> &Matrix {
        match field {
            Field::Open => &self.open,
            Field::High => &self.high,
            Field::Low => &self.low,
            Field::Close => &self.close,
            Field::Volume => &self.volume,
        }
    }

    pub fn close(&self) -> &Matrix {
        &self.close
    }

    pub fn is_present(&self, day: usize, asset: usize) -> bool {
        !self.close[(day, asset)].is_nan()
    }

    /// Bitwise comparison that treats absent cells as equal.
    pub fn identical(&self, other: &OhlcvPanel) -> bool {
        self.dates == other.dates
            && self.tickers == other.tickers
            && Field::ALL
                .iter()
                .all(|&f| same_values(self.field(f), other.field(f)))
    }
}

fn same_values(a: &Matrix, b: &Matrix) -> bool {
    a.shape() == b.shape()
        && a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .all(|(x, y)| x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()))
}

pub(crate) fn check_bar(o: f64, h: f64, l: f64, c: f64, v: f64) -> std::result::Result<(), String> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(format!("close must be positive, got {c}"));
    }
    if !(o.is_finite() && h.is_finite() && l.is_finite()) {
        return Err("open/high/low must be finite".into());
    }
    if h < o.max(c) {
        return Err(format!("high {h} below max(open, close) {}", o.max(c)));
    }
    if l > o.min(c) {
        return Err(format!("low {l} above min(open, close) {}", o.min(c)));
    }
    if !(v >= 0.0) {
        return Err(format!("volume must be non-negative, got {v}"));
    }
    Ok(())
}

/// Simple close-to-close returns; row `k` holds the returns of day `k + 1`.
#[derive(Clone, Debug)]
pub struct ReturnsPanel {
    dates: Vec<NaiveDate>,
    returns: Matrix,
}

impl ReturnsPanel {
    pub fn from_matrix(dates: Vec<NaiveDate>, returns: Matrix) -> Result<Self> {
        if dates.len() != returns.rows() {
            return Err(Error::ShapeMismatch(format!(
                "{} dates for {} return rows",
                dates.len(),
                returns.rows()
            )));
        }
        Ok(Self { dates, returns })
    }

    /// Dates of days `2..=p`.
    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn matrix(&self) -> &Matrix {
        &self.returns
    }

    pub fn assets(&self) -> usize {
        self.returns.cols()
    }

    /// Returns of panel day `day` (zero-based, `day >= 1`).
    pub fn on_day(&self, day: usize) -> &[f64] {
        assert!(day >= 1, "day 0 has no return");
        self.returns.row(day - 1)
    }
}

pub fn compute_returns(panel: &OhlcvPanel) -> Result<ReturnsPanel> {
    let (p, s) = (panel.days(), panel.assets());
    if p < 2 {
        return Err(Error::InsufficientHistory {
            needed: 2,
            available: p,
        });
    }
    let close = panel.close();
    for i in 0..s {
        let present = (0..p).filter(|&d| !close[(d, i)].is_nan()).count();
        if present < 2 {
            return Err(Error::InsufficientCloses {
                ticker: panel.tickers()[i].clone(),
                count: present,
            });
        }
    }
    let mut returns = Matrix::filled(p - 1, s, f64::NAN);
    for d in 1..p {
        for i in 0..s {
            let (prev, cur) = (close[(d - 1, i)], close[(d, i)]);
            for (day, value) in [(d - 1, prev), (d, cur)] {
                if value <= 0.0 {
                    return Err(Error::NonPositiveClose {
                        ticker: panel.tickers()[i].clone(),
                        day,
                        value,
                    });
                }
            }
            if !prev.is_nan() && !cur.is_nan() {
                returns[(d - 1, i)] = cur / prev - 1.0;
            }
        }
    }
    ReturnsPanel::from_matrix(panel.dates()[1..].to_vec(), returns)
}
