use std::fmt;

use super::ops;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::market_data::{Field, OhlcvPanel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    fn apply(self, a: f64, b: f64) -> f64 {
        let v = match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div if b == 0.0 => f64::NAN,
            BinOp::Div => a / b,
        };
        ops::defined(v)
    }
}

/// Raw signal expression over the panel's primitive series.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Series(Field),
    Const(f64),
    Neg(Box<Expr>),
    Sqrt(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Delay(Box<Expr>, usize),
    Sum(Box<Expr>, usize),
    Correlation(Box<Expr>, Box<Expr>, usize),
    Rsi(Box<Expr>, usize),
}

impl Expr {
    /// Number of past days needed before the first defined value.
    pub fn lookback(&self) -> usize {
        match self {
            Expr::Series(_) | Expr::Const(_) => 0,
            Expr::Neg(e) | Expr::Sqrt(e) => e.lookback(),
            Expr::Binary(_, a, b) => a.lookback().max(b.lookback()),
            Expr::Delay(e, k) | Expr::Rsi(e, k) => e.lookback() + k,
            Expr::Sum(e, k) => e.lookback() + k - 1,
            Expr::Correlation(a, b, k) => a.lookback().max(b.lookback()) + k - 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let window = |k: usize, what: &str| {
            if k == 0 {
                Err(Error::InvalidArgument(format!("{what} window must be >= 1")))
            } else {
                Ok(())
            }
        };
        match self {
            Expr::Series(_) => Ok(()),
            Expr::Const(c) if c.is_finite() => Ok(()),
            Expr::Const(c) => Err(Error::InvalidArgument(format!("non-finite constant {c}"))),
            Expr::Neg(e) | Expr::Sqrt(e) | Expr::Delay(e, _) => e.validate(),
            Expr::Binary(_, a, b) => {
                a.validate()?;
                b.validate()
            }
            Expr::Sum(e, k) => {
                window(*k, "sum")?;
                e.validate()
            }
            Expr::Rsi(e, k) => {
                window(*k, "rsi")?;
                e.validate()
            }
            Expr::Correlation(a, b, k) => {
                window(*k, "correlation")?;
                a.validate()?;
                b.validate()
            }
        }
    }

    /// Evaluates to a `days × assets` matrix; undefined cells are `NaN`.
    pub fn eval(&self, panel: &OhlcvPanel) -> Matrix {
        match self {
            Expr::Series(f) => panel.field(*f).clone(),
            Expr::Const(c) => Matrix::filled(panel.days(), panel.assets(), *c),
            Expr::Neg(e) => map(e.eval(panel), |v| -v),
            Expr::Sqrt(e) => map(e.eval(panel), |v| if v >= 0.0 { v.sqrt() } else { f64::NAN }),
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval(panel), b.eval(panel));
                let data = a
                    .as_slice()
                    .iter()
                    .zip(b.as_slice())
                    .map(|(&x, &y)| op.apply(x, y))
                    .collect();
                Matrix::from_vec(a.rows(), a.cols(), data)
            }
            Expr::Delay(e, k) => ops::delay(&e.eval(panel), *k),
            Expr::Sum(e, k) => ops::rolling_sum(&e.eval(panel), *k),
            Expr::Correlation(a, b, k) => {
                ops::rolling_correlation(&a.eval(panel), &b.eval(panel), *k)
            }
            Expr::Rsi(e, k) => ops::rolling_rsi(&e.eval(panel), *k),
        }
    }
}

fn map(m: Matrix, f: impl Fn(f64) -> f64) -> Matrix {
    let (r, c) = m.shape();
    Matrix::from_vec(r, c, m.as_slice().iter().map(|&v| ops::defined(f(v))).collect())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Series(s) => write!(f, "{}", s.name()),
            Expr::Const(c) if *c < 0.0 => write!(f, "({c:?})"),
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Sqrt(e) => write!(f, "sqrt({e})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Delay(e, k) => write!(f, "delay({e}, {k})"),
            Expr::Sum(e, k) => write!(f, "sum({e}, {k})"),
            Expr::Correlation(a, b, k) => write!(f, "correlation({a}, {b}, {k})"),
            Expr::Rsi(e, k) => write!(f, "rsi({e}, {k})"),
        }
    }
}

/// Cross-sectional operation applied on top of the raw signal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PostOp {
    /// Clip final weights to `±limit` of the book, then re-neutralize and
    /// re-normalize.
    Truncate(f64),
    /// Linear-decay average of the last `k` raw signal vectors.
    Decay(usize),
    /// Drop assets whose signal lies in the outer `q` tails on either side.
    CutExtremes(f64),
    /// Drop assets whose signal lies within `q` of the cross-sectional median
    /// in quantile terms.
    CutMiddle(f64),
}

impl PostOp {
    pub fn validate(&self) -> Result<()> {
        let quantile = |q: f64| {
            if q > 0.0 && q < 0.5 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("quantile {q} outside (0, 0.5)")))
            }
        };
        match *self {
            PostOp::Truncate(limit) if limit > 0.0 && limit.is_finite() => Ok(()),
            PostOp::Truncate(limit) => Err(Error::InvalidArgument(format!(
                "truncate limit must be positive, got {limit}"
            ))),
            PostOp::Decay(0) => Err(Error::InvalidArgument("decay window must be >= 1".into())),
            PostOp::Decay(_) => Ok(()),
            PostOp::CutExtremes(q) | PostOp::CutMiddle(q) => quantile(q),
        }
    }
}

impl fmt::Display for PostOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PostOp::Truncate(l) => write!(f, "truncate({l:?})"),
            PostOp::Decay(k) => write!(f, "decay({k})"),
            PostOp::CutExtremes(q) => write!(f, "cut_extremes({q:?})"),
            PostOp::CutMiddle(q) => write!(f, "cut_middle({q:?})"),
        }
    }
}

/// A complete alpha: raw signal plus post-operations. Neutralization and
/// normalization are always applied and are not listed here.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaExpr {
    pub signal: Expr,
    pub post: Vec<PostOp>,
}

impl AlphaExpr {
    pub fn new(signal: Expr) -> Self {
        Self {
            signal,
            post: Vec::new(),
        }
    }

    pub fn with(mut self, op: PostOp) -> Self {
        self.post.push(op);
        self
    }

    /// Days of history needed to produce the first position.
    pub fn warmup_days(&self) -> usize {
        let decay: usize = self
            .post
            .iter()
            .map(|op| match op {
                PostOp::Decay(k) => k - 1,
                _ => 0,
            })
            .sum();
        self.signal.lookback() + decay + 1
    }

    pub fn validate(&self) -> Result<()> {
        self.signal.validate()?;
        self.post.iter().try_for_each(PostOp::validate)
    }
}

impl fmt::Display for AlphaExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.signal)?;
        for op in &self.post {
            write!(f, " | {op}")?;
        }
        Ok(())
    }
}
