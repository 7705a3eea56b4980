//! Text syntax for operators and coefficient expressions.
//!
//! The grammar (lowest precedence first):
//!
//! ```text
//! operator := sum ('@' sum)*            composition
//! sum      := product (('+'|'-') product)*
//! product  := factor ('*' factor)*      composition / multiplication
//! factor   := '-' factor | power
//! power    := primary ('^' exponent)?
//! exponent := '-'? NUMBER | '(' '-'? NUMBER ')'
//! primary  := NUMBER | IDENT | IDENT '(' operator ')' | '(' operator ')'
//! ```
//!
//! `NUMBER` is an exact rational literal `p` or `p/q` (no spaces around the
//! slash; there is no division operator). Identifiers resolve to chart
//! coordinates (`x1…xn` by default), derivative symbols `d1…dn`, the weight
//! symbol `w`, the functions `sin cos exp log`, and `adj(…)` for the
//! adjoint. `*` and `@` both mean operator composition; they differ only in
//! precedence.

use crate::expr::{Chart, Expression};
use crate::operators::DiffOperator;
use crate::rational::Rational;
use thiserror::Error;

/// A parse failure, with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub message: String,
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

fn err_at(src: &str, offset: usize, message: impl Into<String>) -> ParseError {
    let mut line = 1;
    let mut column = 1;
    for (i, ch) in src.char_indices() {
        if i >= offset {
            break;
        }
        if ch == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    ParseError {
        message: message.into(),
        offset,
        line,
        column,
    }
}

/// Parses an operator in the DSL over the given chart.
pub fn parse_operator(src: &str, chart: &Chart) -> Result<DiffOperator, ParseError> {
    Parser::new(src, chart, Mode::Operator)?.parse()
}

/// Parses a pure coefficient expression: differential symbols (`d<k>`, `w`,
/// `adj`) are rejected at their position.
pub fn parse_expression(src: &str, chart: &Chart) -> Result<Expression, ParseError> {
    let op = Parser::new(src, chart, Mode::Scalar)?.parse()?;
    match as_scalar(&op) {
        Some(e) => Ok(e),
        // unreachable in scalar mode, but keep a defensive error
        None => Err(err_at(src, 0, "expression is not a scalar")),
    }
}

/// `Some(f)` when the operator is multiplication by `f`.
fn as_scalar(op: &DiffOperator) -> Option<Expression> {
    if op.is_zero() {
        return Some(Expression::zero());
    }
    if op.order() == 0 && op.w_degree() == 0 {
        let (_, c) = op.terms().next().unwrap();
        Some(c.clone())
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    At,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '+' => {
                toks.push((Tok::Plus, i));
                i += 1;
            }
            '-' => {
                toks.push((Tok::Minus, i));
                i += 1;
            }
            '*' => {
                toks.push((Tok::Star, i));
                i += 1;
            }
            '^' => {
                toks.push((Tok::Caret, i));
                i += 1;
            }
            '@' => {
                toks.push((Tok::At, i));
                i += 1;
            }
            '(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                // optional '/q' continuation makes an exact rational literal
                if i < bytes.len() && bytes[i] == b'/' {
                    let mut j = i + 1;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    if j == i + 1 {
                        return Err(err_at(
                            src,
                            i,
                            "expected digits after '/' in a rational literal",
                        ));
                    }
                    i = j;
                }
                let text = &src[start..i];
                let value: Rational = text.parse().map_err(|_| {
                    err_at(src, start, format!("invalid rational literal {text:?}"))
                })?;
                toks.push((Tok::Num(value), start));
            }
            '.' => {
                return Err(err_at(
                    src,
                    i,
                    "decimal literals are not supported; use an exact rational like 1/2",
                ))
            }
            '/' => {
                return Err(err_at(
                    src,
                    i,
                    "there is no division operator; write rational literals as p/q \
                     without spaces, or multiply by a '^-1' power",
                ))
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => {
                return Err(err_at(src, i, format!("unexpected character {c:?}")));
            }
        }
    }
    Ok(toks)
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Operator,
    Scalar,
}

struct Parser<'a> {
    src: &'a str,
    chart: &'a Chart,
    mode: Mode,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, chart: &'a Chart, mode: Mode) -> Result<Self, ParseError> {
        Ok(Parser {
            src,
            chart,
            mode,
            toks: lex(src)?,
            pos: 0,
        })
    }

    fn parse(mut self) -> Result<DiffOperator, ParseError> {
        if self.toks.is_empty() {
            return Err(err_at(self.src, 0, "empty expression"));
        }
        let op = self.compose()?;
        if let Some((_, at)) = self.toks.get(self.pos) {
            return Err(err_at(self.src, *at, "unexpected trailing input"));
        }
        Ok(op)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(_, at)| *at)
            .unwrap_or(self.src.len())
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect_rparen(&mut self, open_at: usize) -> Result<(), ParseError> {
        match self.bump() {
            Some((Tok::RParen, _)) => Ok(()),
            Some((_, at)) => Err(err_at(self.src, at, "expected ')'")),
            None => Err(err_at(
                self.src,
                open_at,
                "unclosed '(' — expected ')' before end of input",
            )),
        }
    }

    fn compose(&mut self) -> Result<DiffOperator, ParseError> {
        let mut acc = self.sum()?;
        while matches!(self.peek(), Some(Tok::At)) {
            self.bump();
            let rhs = self.sum()?;
            acc = acc.compose(&rhs);
        }
        Ok(acc)
    }

    fn sum(&mut self) -> Result<DiffOperator, ParseError> {
        let mut acc = self.product()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    acc = acc.add(&self.product()?);
                }
                Some(Tok::Minus) => {
                    self.bump();
                    acc = acc.sub(&self.product()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn product(&mut self) -> Result<DiffOperator, ParseError> {
        let mut acc = self.factor()?;
        while matches!(self.peek(), Some(Tok::Star)) {
            self.bump();
            acc = acc.compose(&self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<DiffOperator, ParseError> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump();
            return Ok(self.factor()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<DiffOperator, ParseError> {
        let base = self.primary()?;
        if !matches!(self.peek(), Some(Tok::Caret)) {
            return Ok(base);
        }
        let caret_at = self.here();
        self.bump();
        let exp = self.exponent()?;
        if let Some(scalar) = as_scalar(&base) {
            let value = scalar
                .rat_pow(&exp)
                .map_err(|e| err_at(self.src, caret_at, format!("invalid power: {e}")))?;
            return Ok(DiffOperator::scalar(base.dim(), value));
        }
        match exp.to_integer() {
            Some(k) if k >= 0 => {
                let mut acc = DiffOperator::identity(base.dim());
                for _ in 0..k {
                    acc = acc.compose(&base);
                }
                Ok(acc)
            }
            _ => Err(err_at(
                self.src,
                caret_at,
                format!("operator powers must be nonnegative integers, got {exp}"),
            )),
        }
    }

    fn exponent(&mut self) -> Result<Rational, ParseError> {
        let mut negative = false;
        let mut parens: Option<usize> = None;
        if let Some(Tok::LParen) = self.peek() {
            parens = Some(self.here());
            self.bump();
        }
        if matches!(self.peek(), Some(Tok::Minus)) {
            negative = true;
            self.bump();
        }
        let value = match self.bump() {
            Some((Tok::Num(v), _)) => v,
            Some((_, at)) => {
                return Err(err_at(self.src, at, "expected a rational literal exponent"))
            }
            None => {
                return Err(err_at(
                    self.src,
                    self.src.len(),
                    "expected an exponent after '^'",
                ))
            }
        };
        if let Some(open_at) = parens {
            self.expect_rparen(open_at)?;
        }
        Ok(if negative { -value } else { value })
    }

    fn primary(&mut self) -> Result<DiffOperator, ParseError> {
        let dim = self.chart.dim();
        match self.bump() {
            Some((Tok::Num(v), _)) => Ok(DiffOperator::scalar(dim, Expression::constant(v))),
            Some((Tok::LParen, open_at)) => {
                let inner = self.compose()?;
                self.expect_rparen(open_at)?;
                Ok(inner)
            }
            Some((Tok::Ident(name), at)) => self.resolve_ident(&name, at),
            Some((_, at)) => Err(err_at(self.src, at, "expected a value")),
            None => Err(err_at(self.src, self.src.len(), "unexpected end of input")),
        }
    }

    fn call_argument(&mut self, name: &str, at: usize) -> Result<DiffOperator, ParseError> {
        match self.bump() {
            Some((Tok::LParen, open_at)) => {
                let arg = self.compose()?;
                self.expect_rparen(open_at)?;
                Ok(arg)
            }
            _ => Err(err_at(
                self.src,
                at,
                format!("'{name}' needs a parenthesized argument"),
            )),
        }
    }

    fn scalar_argument(&mut self, name: &str, at: usize) -> Result<Expression, ParseError> {
        let arg_at = self.here();
        let op = self.call_argument(name, at)?;
        as_scalar(&op).ok_or_else(|| {
            err_at(
                self.src,
                arg_at,
                format!("argument of '{name}' must be a scalar expression"),
            )
        })
    }

    fn resolve_ident(&mut self, name: &str, at: usize) -> Result<DiffOperator, ParseError> {
        let dim = self.chart.dim();
        let reject_in_scalar = |this: &Self| -> Result<(), ParseError> {
            if this.mode == Mode::Scalar {
                Err(err_at(
                    this.src,
                    at,
                    format!("'{name}' is an operator symbol; this context needs a scalar"),
                ))
            } else {
                Ok(())
            }
        };
        match name {
            "w" => {
                reject_in_scalar(self)?;
                Ok(DiffOperator::weight(dim))
            }
            "adj" => {
                reject_in_scalar(self)?;
                let arg = self.call_argument(name, at)?;
                Ok(arg.adjoint())
            }
            "sin" | "cos" | "exp" | "log" => {
                let arg = self.scalar_argument(name, at)?;
                let value = match name {
                    "sin" => arg.sin(),
                    "cos" => arg.cos(),
                    "exp" => arg.exp(),
                    _ => arg
                        .log()
                        .map_err(|e| err_at(self.src, at, format!("invalid log: {e}")))?,
                };
                Ok(DiffOperator::scalar(dim, value))
            }
            _ => {
                if let Some(i) = self.chart.index_of(name) {
                    return Ok(DiffOperator::scalar(dim, Expression::coord(i)));
                }
                if let Some(rest) = name.strip_prefix('d') {
                    if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
                        reject_in_scalar(self)?;
                        let k: usize = rest.parse().map_err(|_| {
                            err_at(
                                self.src,
                                at,
                                format!("invalid derivative index in '{name}'"),
                            )
                        })?;
                        if k == 0 {
                            return Err(err_at(
                                self.src,
                                at,
                                "derivative indices are 1-based: use d1…dn",
                            ));
                        }
                        if k > dim {
                            return Err(err_at(
                                self.src,
                                at,
                                format!(
                                    "derivative d{k} is out of range for a chart of dimension {dim}"
                                ),
                            ));
                        }
                        return Ok(
                            DiffOperator::partial(dim, k - 1).expect("index was range-checked")
                        );
                    }
                }
                Err(err_at(self.src, at, format!("unknown identifier '{name}'")))
            }
        }
    }
}
