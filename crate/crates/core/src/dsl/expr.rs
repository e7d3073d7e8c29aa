//! Arithmetic over unit-carrying literals and parameter symbols.
//!
//! Dimensions track powers of time and of "cycles": `MHz` is cycles per
//! second and only becomes an angular frequency after `2pi*`, which is
//! radians per cycle. `pi` on its own is a plain number.

use std::f64::consts::{PI, TAU};

use super::DiagnosticCode;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dim {
    pub time: i8,
    pub cycle: i8,
}

impl Dim {
    pub const NONE: Dim = Dim { time: 0, cycle: 0 };
    pub const TIME: Dim = Dim { time: 1, cycle: 0 };
    /// Angular frequency, rad/s.
    pub const FREQUENCY: Dim = Dim { time: -1, cycle: 0 };
    const CYCLIC: Dim = Dim { time: -1, cycle: 1 };
    const PER_CYCLE: Dim = Dim { time: 0, cycle: -1 };

    fn mul(self, o: Dim) -> Dim {
        Dim { time: self.time.saturating_add(o.time), cycle: self.cycle.saturating_add(o.cycle) }
    }

    fn div(self, o: Dim) -> Dim {
        Dim { time: self.time.saturating_sub(o.time), cycle: self.cycle.saturating_sub(o.cycle) }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Dim::NONE => "a plain number",
            Dim::TIME => "a time",
            Dim::FREQUENCY => "an angular frequency",
            Dim::CYCLIC => "a frequency in Hz",
            _ => "a compound quantity",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unit {
    Ns,
    Us,
    Ms,
    S,
    Hz,
    KHz,
    MHz,
    GHz,
    RadPerS,
}

impl Unit {
    fn from_suffix(s: &str) -> Option<Unit> {
        Some(match s {
            "ns" => Unit::Ns,
            "us" | "µs" | "μs" => Unit::Us,
            "ms" => Unit::Ms,
            "s" => Unit::S,
            "Hz" => Unit::Hz,
            "kHz" => Unit::KHz,
            "MHz" => Unit::MHz,
            "GHz" => Unit::GHz,
            "rad/s" => Unit::RadPerS,
            _ => return None,
        })
    }

    /// Power of ten relative to seconds, Hz or rad/s.
    pub fn exponent(self) -> i32 {
        match self {
            Unit::Ns => -9,
            Unit::Us => -6,
            Unit::Ms => -3,
            Unit::S | Unit::Hz | Unit::RadPerS => 0,
            Unit::KHz => 3,
            Unit::MHz => 6,
            Unit::GHz => 9,
        }
    }

    pub fn dim(self) -> Dim {
        match self {
            Unit::Ns | Unit::Us | Unit::Ms | Unit::S => Dim::TIME,
            Unit::Hz | Unit::KHz | Unit::MHz | Unit::GHz => Dim::CYCLIC,
            Unit::RadPerS => Dim::FREQUENCY,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Number(f64),
    /// The literal in base units, correctly rounded from its decimal text.
    Quantity { value: f64, unit: Unit },
    TwoPi,
    Pi,
    /// Name and char offset within the expression text.
    Symbol(String, usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

/// Problem inside an expression; `offset` and `len` are in chars relative to
/// the start of the expression text.
#[derive(Clone, Debug, PartialEq)]
pub struct ExprError {
    pub code: DiagnosticCode,
    pub offset: usize,
    pub len: usize,
    pub message: String,
}

impl ExprError {
    fn new(code: DiagnosticCode, offset: usize, len: usize, message: impl Into<String>) -> Self {
        ExprError { code, offset, len: len.max(1), message: message.into() }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num { value: f64, unit: Option<Unit>, two_pi: bool },
    Ident(String),
    Op(char),
    Open,
    Close,
}

fn lex(chars: &[char]) -> Result<Vec<(Tok, usize, usize)>, ExprError> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent, only when followed by digits so `5e` stays a unit error
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value: f64 = text
                .parse()
                .map_err(|_| ExprError::new(DiagnosticCode::BadNumber, start, i - start, format!("malformed number `{text}`")))?;
            let ustart = i;
            while i < chars.len() && chars[i].is_alphabetic() {
                i += 1;
            }
            if chars[ustart..i] == ['r', 'a', 'd'] && chars.get(i) == Some(&'/') && chars.get(i + 1) == Some(&'s') {
                i += 2;
            }
            let suffix: String = chars[ustart..i].iter().collect();
            let tok = if suffix.is_empty() {
                Tok::Num { value, unit: None, two_pi: false }
            } else if suffix == "pi" {
                if text != "2" {
                    return Err(ExprError::new(
                        DiagnosticCode::UnitMismatch,
                        start,
                        i - start,
                        format!("`{text}pi` is not supported; only `2pi` converts Hz to rad/s (write `{text}*pi` for a plain multiple)"),
                    ));
                }
                Tok::Num { value, unit: None, two_pi: true }
            } else {
                let unit = Unit::from_suffix(&suffix).ok_or_else(|| {
                    ExprError::new(
                        DiagnosticCode::UnitMismatch,
                        ustart,
                        i - ustart,
                        format!("unknown unit `{suffix}` (expected ns, us, ms, s, Hz, kHz, MHz, GHz or rad/s)"),
                    )
                })?;
                Tok::Num { value: scaled(&text, unit.exponent()).unwrap_or(value), unit: Some(unit), two_pi: false }
            };
            out.push((tok, start, i - start));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), start, i - start));
            continue;
        }
        let tok = match c {
            '+' | '-' | '*' | '/' => Tok::Op(c),
            '(' => Tok::Open,
            ')' => Tok::Close,
            _ => return Err(ExprError::new(DiagnosticCode::Syntax, i, 1, format!("unexpected character `{c}`"))),
        };
        out.push((tok, i, 1));
        i += 1;
    }
    Ok(out)
}

/// Parses decimal `text` shifted by `10^shift` with a single rounding, so
/// `3ns` is exactly the double nearest 3e-9.
fn scaled(text: &str, shift: i32) -> Option<f64> {
    let (digits, exp) = match text.find(['e', 'E']) {
        Some(p) => (&text[..p], text[p + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    format!("{digits}e{}", exp.checked_add(shift)?).parse().ok()
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    end: usize,
    depth: usize,
}

const MAX_DEPTH: usize = 64;

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or((self.end, 1), |t| (t.1, t.2))
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            let (o, l) = self.here();
            return Err(ExprError::new(DiagnosticCode::Syntax, o, l, "expression nested too deeply"));
        }
        let out = if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            Expr::Neg(Box::new(self.unary()?))
        } else {
            self.primary()?
        };
        self.depth -= 1;
        Ok(out)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let (offset, len) = self.here();
        let Some((tok, _, _)) = self.toks.get(self.pos).cloned() else {
            return Err(ExprError::new(DiagnosticCode::Syntax, offset, len, "expected a value"));
        };
        self.pos += 1;
        match tok {
            Tok::Num { two_pi: true, .. } => Ok(Expr::TwoPi),
            Tok::Num { value, unit: None, .. } => Ok(Expr::Number(value)),
            Tok::Num { value, unit: Some(unit), .. } => Ok(Expr::Quantity { value, unit }),
            Tok::Ident(name) if name == "pi" => Ok(Expr::Pi),
            Tok::Ident(name) => Ok(Expr::Symbol(name, offset)),
            Tok::Open => {
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::Close) {
                    let (o, l) = self.here();
                    return Err(ExprError::new(DiagnosticCode::Syntax, o, l, "expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Tok::Op(c) => Err(ExprError::new(DiagnosticCode::Syntax, offset, len, format!("unexpected `{c}`"))),
            Tok::Close => Err(ExprError::new(DiagnosticCode::Syntax, offset, len, "unexpected `)`")),
        }
    }
}

/// Parses an expression. The whole text must be consumed.
pub fn parse_expr(text: &str) -> Result<Expr, ExprError> {
    let chars: Vec<char> = text.chars().collect();
    let toks = lex(&chars)?;
    let mut p = Parser { toks, pos: 0, end: chars.len(), depth: 0 };
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        let (o, l) = p.here();
        return Err(ExprError::new(DiagnosticCode::Syntax, o, l, "unexpected trailing input"));
    }
    Ok(e)
}

impl Expr {
    /// Dimension of the expression given the dimensions of known symbols.
    pub fn dim(&self, lookup: &dyn Fn(&str) -> Option<Dim>) -> Result<Dim, ExprError> {
        Ok(match self {
            Expr::Number(_) | Expr::Pi => Dim::NONE,
            Expr::Quantity { unit, .. } => unit.dim(),
            Expr::TwoPi => Dim::PER_CYCLE,
            Expr::Symbol(name, offset) => lookup(name).ok_or_else(|| {
                ExprError::new(DiagnosticCode::UnknownSymbol, *offset, name.chars().count(), format!("unknown symbol `{name}`"))
            })?,
            Expr::Neg(e) => e.dim(lookup)?,
            Expr::Binary(op, a, b) => {
                let (da, db) = (a.dim(lookup)?, b.dim(lookup)?);
                match op {
                    BinOp::Mul => da.mul(db),
                    BinOp::Div => da.div(db),
                    BinOp::Add | BinOp::Sub => {
                        if da != db {
                            // spans the whole expression
                            return Err(ExprError::new(
                                DiagnosticCode::UnitMismatch,
                                0,
                                usize::MAX,
                                format!("cannot add {} and {}", da.describe(), db.describe()),
                            ));
                        }
                        da
                    }
                }
            }
        })
    }

    /// Evaluates left to right; symbols must resolve.
    pub fn eval(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Option<f64> {
        Some(match self {
            Expr::Number(v) => *v,
            Expr::Quantity { value, .. } => *value,
            Expr::TwoPi => TAU,
            Expr::Pi => PI,
            Expr::Symbol(name, _) => lookup(name)?,
            Expr::Neg(e) => -e.eval(lookup)?,
            Expr::Binary(op, a, b) => {
                let (x, y) = (a.eval(lookup)?, b.eval(lookup)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                }
            }
        })
    }

    /// Names of referenced symbols, in order of appearance.
    pub fn symbols(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Symbol(n, _) => out.push(n),
            Expr::Neg(e) => e.collect(out),
            Expr::Binary(_, a, b) => {
                a.collect(out);
                b.collect(out);
            }
            _ => {}
        }
    }
}

/// Evaluates a symbol-free expression.
pub fn eval_literal(text: &str) -> Option<f64> {
    parse_expr(text).ok()?.eval(&|_| None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn none(_: &str) -> Option<Dim> {
        None
    }

    #[test]
    fn angular_from_mhz() {
        let e = parse_expr("2pi*50MHz").unwrap();
        assert_eq!(e.dim(&none).unwrap(), Dim::FREQUENCY);
        assert_eq!(e.eval(&|_| None).unwrap(), TAU * 50e6);
    }

    #[test]
    fn bare_hz_is_not_angular() {
        assert_eq!(parse_expr("50MHz").unwrap().dim(&none).unwrap(), Dim::CYCLIC);
        assert_eq!(parse_expr("2*pi*50MHz").unwrap().dim(&none).unwrap(), Dim::CYCLIC);
    }

    #[test]
    fn times_and_symbols() {
        let e = parse_expr("3ns + tau_a*2").unwrap();
        let d = e.dim(&|s| (s == "tau_a").then_some(Dim::TIME)).unwrap();
        assert_eq!(d, Dim::TIME);
        assert_eq!(e.eval(&|_| Some(1e-9)).unwrap(), 3e-9 + 2e-9);
        let e = parse_expr("2*pi/lambda").unwrap();
        assert_eq!(e.dim(&|_| Some(Dim::FREQUENCY)).unwrap(), Dim::TIME);
    }

    #[test]
    fn errors_point_at_tokens() {
        let err = parse_expr("3 furlongs").unwrap_err();
        assert_eq!(err.code, DiagnosticCode::Syntax);
        let err = parse_expr("3parsec").unwrap_err();
        assert_eq!((err.code, err.offset, err.len), (DiagnosticCode::UnitMismatch, 1, 6));
        let err = parse_expr("1..2ns").unwrap_err();
        assert_eq!(err.code, DiagnosticCode::BadNumber);
        let err = parse_expr("(1ns").unwrap_err();
        assert_eq!(err.offset, 4);
        let err = parse_expr("mu + 1ns").unwrap().dim(&none).unwrap_err();
        assert_eq!((err.code, err.offset, err.len), (DiagnosticCode::UnknownSymbol, 0, 2));
        assert!(parse_expr(&"(".repeat(10_000)).is_err());
        assert!(parse_expr(&"-".repeat(10_000)).is_err());
    }

    #[test]
    fn exponents() {
        assert_eq!(eval_literal("1.5e-3s").unwrap(), 1.5e-3);
        assert_eq!(eval_literal("2E2"), Some(200.0));
        assert_eq!(eval_literal("6ns/2"), Some(6e-9 / 2.0));
        assert_eq!(eval_literal("4rad/s/2"), Some(2.0));
    }
}
