//! Recursive-descent parser for the alpha expression language.
//!
//! ```text
//! alpha   := expr ( '|' post )*
//! post    := 'truncate' '(' number ')' | 'decay' '(' int ')'
//!          | 'cut_extremes' '(' number ')' | 'cut_middle' '(' number ')'
//! expr    := term ( ('+' | '-') term )*
//! term    := unary ( ('*' | '/') unary )*
//! unary   := '-' unary | primary
//! primary := number | series | call | '(' expr ')'
//! series  := 'open' | 'high' | 'low' | 'close' | 'volume'
//! call    := 'delay' '(' expr ',' int ')' | 'sum' '(' expr ',' int ')'
//!          | 'correlation' '(' expr ',' expr ',' int ')'
//!          | 'rsi' '(' expr ',' int ')' | 'sqrt' '(' expr ')'
//! ```
//!
//! A minus sign directly in front of a number literal yields a negative
//! constant; in front of anything else it yields a negation node.

use super::expr::{AlphaExpr, BinOp, Expr, PostOp};
use crate::error::{Error, Result};
use crate::market_data::Field;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(usize, Tok)>> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (at, tok) = lx.next()?;
            let end = tok == Tok::End;
            out.push((at, tok));
            if end {
                return Ok(out);
            }
        }
    }

    fn next(&mut self) -> Result<(usize, Tok)> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            return Ok((start, Tok::End));
        };
        if c.is_ascii_digit() || c == b'.' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut e = end + 1;
                if e < bytes.len() && (bytes[e] == b'+' || bytes[e] == b'-') {
                    e += 1;
                }
                if e < bytes.len() && bytes[e].is_ascii_digit() {
                    while e < bytes.len() && bytes[e].is_ascii_digit() {
                        e += 1;
                    }
                    end = e;
                }
            }
            let text = &self.src[start..end];
            self.pos = end;
            let v = text.parse::<f64>().map_err(|_| Error::Parse {
                offset: start,
                message: format!("bad number `{text}`"),
            })?;
            return Ok((start, Tok::Num(v)));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((start, Tok::Ident(self.src[start..end].to_string())));
        }
        if b"+-*/(),|".contains(&c) {
            self.pos += 1;
            return Ok((start, Tok::Sym(c as char)));
        }
        Err(Error::Parse {
            offset: start,
            message: format!("unexpected character `{}`", c as char),
        })
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn offset(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if t != Tok::End {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{c}`, found {:?}", self.peek()))
        }
    }

    fn alpha(&mut self) -> Result<AlphaExpr> {
        let signal = self.expr()?;
        let mut post = Vec::new();
        while *self.peek() == Tok::Sym('|') {
            self.bump();
            post.push(self.post_op()?);
        }
        if *self.peek() != Tok::End {
            return self.err(format!("unexpected trailing {:?}", self.peek()));
        }
        Ok(AlphaExpr { signal, post })
    }

    fn post_op(&mut self) -> Result<PostOp> {
        let Tok::Ident(name) = self.bump() else {
            return self.err("expected post-operation name");
        };
        self.expect('(')?;
        let op = match name.as_str() {
            "truncate" => PostOp::Truncate(self.number()?),
            "decay" => PostOp::Decay(self.window()?),
            "cut_extremes" => PostOp::CutExtremes(self.number()?),
            "cut_middle" => PostOp::CutMiddle(self.number()?),
            other => return self.err(format!("unknown post-operation `{other}`")),
        };
        self.expect(')')?;
        Ok(op)
    }

    fn number(&mut self) -> Result<f64> {
        let neg = *self.peek() == Tok::Sym('-');
        if neg {
            self.bump();
        }
        match self.bump() {
            Tok::Num(v) => Ok(if neg { -v } else { v }),
            t => self.err(format!("expected number, found {t:?}")),
        }
    }

    fn window(&mut self) -> Result<usize> {
        match self.bump() {
            Tok::Num(v) if v >= 0.0 && v.fract() == 0.0 && v < 1e9 => Ok(v as usize),
            t => self.err(format!("expected non-negative integer window, found {t:?}")),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Sym('-') {
            self.bump();
            if let Tok::Num(v) = *self.peek() {
                self.bump();
                return Ok(Expr::Const(-v));
            }
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(field) = Field::from_name(&name) {
                    return Ok(Expr::Series(field));
                }
                self.call(&name)
            }
            t => self.err(format!("unexpected {t:?}")),
        }
    }

    fn call(&mut self, name: &str) -> Result<Expr> {
        self.expect('(')?;
        let e = match name {
            "sqrt" => Expr::Sqrt(Box::new(self.expr()?)),
            "delay" | "sum" | "rsi" => {
                let x = Box::new(self.expr()?);
                self.expect(',')?;
                let k = self.window()?;
                match name {
                    "delay" => Expr::Delay(x, k),
                    "sum" => Expr::Sum(x, k),
                    _ => Expr::Rsi(x, k),
                }
            }
            "correlation" => {
                let x = Box::new(self.expr()?);
                self.expect(',')?;
                let y = Box::new(self.expr()?);
                self.expect(',')?;
                Expr::Correlation(x, y, self.window()?)
            }
            _ => return Err(Error::UnknownName(name.to_string())),
        };
        self.expect(')')?;
        Ok(e)
    }
}

/// Parses an alpha, e.g. `-rsi(close, 14) | decay(3) | truncate(0.1)`.
pub fn parse_alpha(src: &str) -> Result<AlphaExpr> {
    let toks = Lexer::tokens(src)?;
    let alpha = Parser { toks, at: 0 }.alpha()?;
    alpha.validate()?;
    Ok(alpha)
}
