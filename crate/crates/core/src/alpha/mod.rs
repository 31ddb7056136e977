//! Alpha evaluation: raw signal, cross-sectional post-operations, then
//! neutralization and L1 normalization into daily position vectors.
//!
//! Undefined signal cells (warmup, absent assets, division by zero) get a
//! zero position. A day with no defined cell is [`DayStatus::Undefined`]; a
//! day whose neutralized signal vanishes is [`DayStatus::Flat`] and holds
//! all-zero positions.

mod expr;
pub mod ops;
mod parser;

pub use expr::{AlphaExpr, BinOp, Expr, PostOp};
pub use parser::parse_alpha;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::market_data::OhlcvPanel;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DayStatus {
    /// No defined signal cell; positions are `NaN`.
    Undefined,
    /// Signal defined but constant across assets; positions are zero.
    Flat,
    /// Neutral, unit-L1 positions.
    Active,
}

/// Daily money positions of one alpha in book-fraction units.
#[derive(Clone, Debug, PartialEq)]
pub struct PositionPanel {
    positions: Matrix,
    status: Vec<DayStatus>,
}

impl PositionPanel {
    pub fn new(positions: Matrix, status: Vec<DayStatus>) -> Result<Self> {
        if positions.rows() != status.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} position rows but {} day statuses",
                positions.rows(),
                status.len()
            )));
        }
        for (d, st) in status.iter().enumerate() {
            let row = positions.row(d);
            let ok = match st {
                DayStatus::Undefined => true,
                DayStatus::Flat => row.iter().all(|&v| v == 0.0),
                DayStatus::Active => row.iter().all(|v| v.is_finite()),
            };
            if !ok {
                return Err(Error::InvalidArgument(format!(
                    "day {d} positions inconsistent with status {st:?}"
                )));
            }
        }
        let mut positions = positions;
        for (d, st) in status.iter().enumerate() {
            if *st == DayStatus::Undefined {
                positions.row_mut(d).fill(f64::NAN);
            }
        }
        Ok(Self { positions, status })
    }

    /// Panel with every day defined, taken verbatim (no neutralization).
    /// An all-zero row is `Flat`.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let positions = Matrix::from_rows(rows);
        let status = (0..positions.rows())
            .map(|d| {
                if positions.row(d).iter().all(|&v| v == 0.0) {
                    DayStatus::Flat
                } else {
                    DayStatus::Active
                }
            })
            .collect();
        Self::new(positions, status)
    }

    pub fn days(&self) -> usize {
        self.positions.rows()
    }

    pub fn assets(&self) -> usize {
        self.positions.cols()
    }

    pub fn positions(&self) -> &Matrix {
        &self.positions
    }

    pub fn status(&self, day: usize) -> DayStatus {
        self.status[day]
    }

    pub fn is_defined(&self, day: usize) -> bool {
        self.status[day] != DayStatus::Undefined
    }

    /// Positions on `day`, or `None` when the day is undefined.
    pub fn day(&self, day: usize) -> Option<&[f64]> {
        self.is_defined(day).then(|| self.positions.row(day))
    }

    /// First day index with a defined position.
    pub fn first_defined(&self) -> Option<usize> {
        (0..self.days()).find(|&d| self.is_defined(d))
    }

    pub fn scaled(&self, lambda: f64) -> PositionPanel {
        let mut out = self.clone();
        for (d, st) in self.status.iter().enumerate() {
            if *st != DayStatus::Undefined {
                out.positions.row_mut(d).iter_mut().for_each(|v| *v *= lambda);
            }
        }
        out
    }
}

/// Evaluates `alpha` over `panel`.
pub fn evaluate_alpha(alpha: &AlphaExpr, panel: &OhlcvPanel) -> Result<PositionPanel> {
    alpha.validate()?;
    let needed = alpha.warmup_days();
    if panel.days() < needed {
        return Err(Error::InsufficientHistory {
            needed,
            available: panel.days(),
        });
    }
    let mut raw = alpha.signal.eval(panel);
    for d in 0..panel.days() {
        for i in 0..panel.assets() {
            if !panel.is_present(d, i) {
                raw[(d, i)] = f64::NAN;
            }
        }
    }
    positions_from_signal(&raw, &alpha.post)
}

/// Turns a raw `days × assets` signal (`NaN` = undefined) into positions.
///
/// Decay and cut operations run in the listed order before neutralization;
/// truncation runs afterwards on the normalized weights.
pub fn positions_from_signal(raw: &Matrix, post: &[PostOp]) -> Result<PositionPanel> {
    post.iter().try_for_each(PostOp::validate)?;
    let mut signal = raw.clone();
    for op in post {
        match *op {
            PostOp::Decay(k) => signal = ops::decay(&signal, k),
            PostOp::CutExtremes(q) => cut(&mut signal, |u| u < q || u > 1.0 - q),
            PostOp::CutMiddle(q) => cut(&mut signal, |u| (u - 0.5).abs() < q),
            PostOp::Truncate(_) => {}
        }
    }

    let (p, s) = signal.shape();
    let mut positions = Matrix::zeros(p, s);
    let mut status = vec![DayStatus::Undefined; p];
    for d in 0..p {
        let Some(w) = neutral_unit(signal.row(d)) else {
            continue;
        };
        let mut w = w;
        let mut flat = w.iter().all(|&v| v == 0.0);
        if !flat {
            for op in post {
                if let PostOp::Truncate(limit) = *op {
                    let clipped: Vec<f64> = w
                        .iter()
                        .zip(signal.row(d))
                        .map(|(&v, r)| if r.is_nan() { f64::NAN } else { v.clamp(-limit, limit) })
                        .collect();
                    match neutral_unit(&clipped) {
                        Some(n) => w = n,
                        None => unreachable!("clipped row keeps its defined cells"),
                    }
                    if w.iter().all(|&v| v == 0.0) {
                        flat = true;
                        break;
                    }
                }
            }
        }
        positions.row_mut(d).copy_from_slice(&w);
        status[d] = if flat { DayStatus::Flat } else { DayStatus::Active };
    }
    PositionPanel::new(positions, status)
}

/// Demeans over defined cells and scales to unit L1. Undefined cells get 0.
/// Returns `None` if no cell is defined and all zeros if the demeaned
/// vector is negligible relative to the input.
fn neutral_unit(row: &[f64]) -> Option<Vec<f64>> {
    let defined: Vec<f64> = row.iter().copied().filter(|v| !v.is_nan()).collect();
    if defined.is_empty() {
        return None;
    }
    let mean = defined.iter().sum::<f64>() / defined.len() as f64;
    let scale: f64 = defined.iter().map(|v| v.abs()).sum();
    let mut out: Vec<f64> = row
        .iter()
        .map(|&v| if v.is_nan() { 0.0 } else { v - mean })
        .collect();
    let l1: f64 = out.iter().map(|v| v.abs()).sum();
    if l1 <= 1e-12 * scale || l1 == 0.0 {
        out.fill(0.0);
    } else {
        out.iter_mut().for_each(|v| *v /= l1);
    }
    Some(out)
}

/// Marks cells undefined where `drop(u)` holds, `u` being the mid-rank
/// quantile `(rank + 0.5) / m` among the day's `m` defined cells (ties share
/// their average rank).
fn cut(signal: &mut Matrix, drop: impl Fn(f64) -> bool) {
    for d in 0..signal.rows() {
        let row = signal.row_mut(d);
        let mut idx: Vec<usize> = (0..row.len()).filter(|&i| !row[i].is_nan()).collect();
        let m = idx.len();
        if m == 0 {
            continue;
        }
        idx.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
        let mut cut_cells = Vec::new();
        let mut start = 0;
        while start < m {
            let mut end = start + 1;
            while end < m && row[idx[end]] == row[idx[start]] {
                end += 1;
            }
            let rank = (start + end - 1) as f64 / 2.0;
            let u = (rank + 0.5) / m as f64;
            if drop(u) {
                cut_cells.extend_from_slice(&idx[start..end]);
            }
            start = end;
        }
        for i in cut_cells {
            row[i] = f64::NAN;
        }
    }
}

const BUILTINS: [(&str, &str); 4] = [
    ("paper1", "sum(volume,4)*sqrt(high*low)/sum(close*volume,4) - 1"),
    ("paper2", "(delay(close,14)/close - 1)*(volume/sum(volume,30))"),
    ("paper3", "correlation(close,volume,20)*(1 - delay(close,10)/close)"),
    ("paper4", "-rsi(close,14)"),
];

/// The four reference alphas, named `paper1` .. `paper4`.
pub fn builtin_alphas() -> Vec<(String, AlphaExpr)> {
    BUILTINS
        .iter()
        .map(|(name, text)| {
            let alpha = parse_alpha(text).expect("builtin alpha parses");
            (name.to_string(), alpha)
        })
        .collect()
}

/// Resolves a builtin name or parses an expression.
pub fn resolve_alpha(text: &str) -> Result<AlphaExpr> {
    let text = text.trim();
    match BUILTINS.iter().find(|(name, _)| *name == text) {
        Some((_, src)) => parse_alpha(src),
        None => parse_alpha(text),
    }
}
