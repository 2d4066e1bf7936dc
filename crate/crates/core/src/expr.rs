//! The potential expression language.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'pi' | 'i' | 't' | 'x'N | func '(' sum ')' | '(' sum ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x1^2`
//! is `-(x1^2)` and `2^-1` is `0.5`.

use num_complex::Complex64;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Tanh,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "tanh" => Func::Tanh,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
        }
    }

    fn apply(self, z: Complex64) -> Complex64 {
        match self {
            Func::Sin => z.sin(),
            Func::Cos => z.cos(),
            Func::Exp => z.exp(),
            Func::Sqrt => {
                if z.im == 0.0 && z.re >= 0.0 {
                    Complex64::new(z.re.sqrt(), 0.0)
                } else {
                    z.sqrt()
                }
            }
            Func::Tanh => z.tanh(),
            Func::Abs => Complex64::new(z.norm(), 0.0),
        }
    }

    fn apply_real(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Sqrt => v.sqrt(),
            Func::Tanh => v.tanh(),
            Func::Abs => v.abs(),
        }
    }
}

/// Parsed expression. Variables are stored zero-based (`x1` is `Var(0)`).
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    I,
    Var(usize),
    Time,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Differentiation target.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wrt {
    Var(usize),
    Time,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => out.push((Tok::Plus, start)),
            b'-' => out.push((Tok::Minus, start)),
            b'*' => out.push((Tok::Star, start)),
            b'/' => out.push((Tok::Slash, start)),
            b'^' => out.push((Tok::Caret, start)),
            b'(' => out.push((Tok::LParen, start)),
            b')' => out.push((Tok::RParen, start)),
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let v: f64 = lit.parse().map_err(|_| Error::Syntax {
                    offset: start,
                    message: format!("malformed number `{lit}`"),
                })?;
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(Error::Syntax { offset: start, message: format!("unexpected character `{ch}`") });
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    end: usize,
    n: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Syntax { offset: self.offset(), message: format!("expected {what}") })
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(match self.unary()? {
                Expr::Num(v) => Expr::Num(-v),
                e => Expr::Neg(Box::new(e)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let offset = self.offset();
        let Some((tok, _)) = self.toks.get(self.pos) else {
            return Err(Error::Syntax { offset, message: "unexpected end of input".into() });
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::Num(*v)),
            Tok::LParen => {
                let e = self.sum()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => self.identifier(name, offset),
            _ => Err(Error::Syntax { offset, message: "expected a value".into() }),
        }
    }

    fn identifier(&mut self, name: &str, offset: usize) -> Result<Expr> {
        if let Some(f) = Func::from_name(name) {
            self.expect(Tok::LParen, &format!("`(` after `{name}`"))?;
            let arg = self.sum()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Expr::Call(f, Box::new(arg)));
        }
        match name {
            "pi" => return Ok(Expr::Pi),
            "i" => return Ok(Expr::I),
            "t" => return Ok(Expr::Time),
            _ => {}
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) && !digits.starts_with('0') {
                let index: usize = digits.parse().map_err(|_| Error::UnknownIdentifier {
                    name: name.to_string(),
                    offset,
                })?;
                if index > self.n {
                    return Err(Error::VariableOutOfRange { index, n: self.n, offset });
                }
                return Ok(Expr::Var(index - 1));
            }
        }
        Err(Error::UnknownIdentifier { name: name.to_string(), offset })
    }
}

/// Parses `text` as an expression in `x1..xn` and `t`.
pub fn parse_expression(text: &str, n: usize) -> Result<Expr> {
    if text.trim().is_empty() {
        return Err(Error::Syntax { offset: 0, message: "empty expression".into() });
    }
    let toks = tokenize(text)?;
    let mut p = Parser { toks: &toks, pos: 0, end: text.len(), n };
    let e = p.sum()?;
    if p.pos != toks.len() {
        return Err(Error::Syntax { offset: p.offset(), message: "unexpected trailing input".into() });
    }
    Ok(e)
}

fn integer_exponent(e: &Expr) -> Option<i32> {
    match e {
        Expr::Num(v) if v.fract() == 0.0 && v.abs() <= 1024.0 => Some(*v as i32),
        _ => None,
    }
}

impl Expr {
    /// Complex value at `(x, t)`.
    pub fn eval(&self, x: &[f64], t: f64) -> Complex64 {
        match self {
            Expr::Num(v) => Complex64::new(*v, 0.0),
            Expr::Pi => Complex64::new(std::f64::consts::PI, 0.0),
            Expr::I => Complex64::new(0.0, 1.0),
            Expr::Var(j) => Complex64::new(x[*j], 0.0),
            Expr::Time => Complex64::new(t, 0.0),
            Expr::Neg(a) => -a.eval(x, t),
            Expr::Add(a, b) => a.eval(x, t) + b.eval(x, t),
            Expr::Sub(a, b) => a.eval(x, t) - b.eval(x, t),
            Expr::Mul(a, b) => a.eval(x, t) * b.eval(x, t),
            Expr::Div(a, b) => {
                let d = b.eval(x, t);
                let nu = a.eval(x, t);
                if d.im == 0.0 && nu.im == 0.0 {
                    Complex64::new(nu.re / d.re, 0.0)
                } else {
                    nu / d
                }
            }
            Expr::Pow(a, b) => {
                let base = a.eval(x, t);
                if let Some(n) = integer_exponent(b) {
                    return base.powi(n);
                }
                let e = b.eval(x, t);
                if base.im == 0.0 && e.im == 0.0 && base.re >= 0.0 {
                    Complex64::new(base.re.powf(e.re), 0.0)
                } else {
                    base.powc(e)
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(x, t)),
        }
    }

    /// Real-arithmetic evaluation; `NaN` wherever the complex value would
    /// leave the real line. Expressions containing `i` yield `NaN`.
    pub fn eval_real(&self, x: &[f64], t: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Pi => std::f64::consts::PI,
            Expr::I => f64::NAN,
            Expr::Var(j) => x[*j],
            Expr::Time => t,
            Expr::Neg(a) => -a.eval_real(x, t),
            Expr::Add(a, b) => a.eval_real(x, t) + b.eval_real(x, t),
            Expr::Sub(a, b) => a.eval_real(x, t) - b.eval_real(x, t),
            Expr::Mul(a, b) => a.eval_real(x, t) * b.eval_real(x, t),
            Expr::Div(a, b) => a.eval_real(x, t) / b.eval_real(x, t),
            Expr::Pow(a, b) => {
                let base = a.eval_real(x, t);
                match integer_exponent(b) {
                    Some(n) => base.powi(n),
                    None => base.powf(b.eval_real(x, t)),
                }
            }
            Expr::Call(f, a) => f.apply_real(a.eval_real(x, t)),
        }
    }

    /// Largest one-based variable index referenced (0 if none).
    pub fn max_variable(&self) -> usize {
        let mut best = 0;
        self.visit(&mut |e| {
            if let Expr::Var(j) = e {
                best = best.max(j + 1);
            }
        });
        best
    }

    pub fn contains_imaginary_literal(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, Expr::I));
        found
    }

    pub fn depends_on(&self, wrt: Wrt) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            found |= match (e, wrt) {
                (Expr::Var(j), Wrt::Var(k)) => *j == k,
                (Expr::Time, Wrt::Time) => true,
                _ => false,
            }
        });
        found
    }

    pub fn depends_on_time(&self) -> bool {
        self.depends_on(Wrt::Time)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Neg(a) | Expr::Call(_, a) => a.visit(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    /// Symbolic partial derivative. `None` when a rule is unavailable
    /// (`abs` of a dependent argument, exponents depending on `wrt`).
    pub fn derivative(&self, wrt: Wrt) -> Option<Expr> {
        if !self.depends_on(wrt) {
            return Some(Expr::Num(0.0));
        }
        Some(match self {
            Expr::Num(_) | Expr::Pi | Expr::I => Expr::Num(0.0),
            Expr::Var(_) | Expr::Time => Expr::Num(1.0),
            Expr::Neg(a) => neg(a.derivative(wrt)?),
            Expr::Add(a, b) => add(a.derivative(wrt)?, b.derivative(wrt)?),
            Expr::Sub(a, b) => sub(a.derivative(wrt)?, b.derivative(wrt)?),
            Expr::Mul(a, b) => add(
                mul(a.derivative(wrt)?, (**b).clone()),
                mul((**a).clone(), b.derivative(wrt)?),
            ),
            Expr::Div(a, b) => {
                let da = a.derivative(wrt)?;
                let db = b.derivative(wrt)?;
                if db.is_zero() {
                    div(da, (**b).clone())
                } else {
                    div(
                        sub(mul(da, (**b).clone()), mul((**a).clone(), db)),
                        pow((**b).clone(), Expr::Num(2.0)),
                    )
                }
            }
            Expr::Pow(a, b) => {
                if b.depends_on(wrt) {
                    return None;
                }
                let lowered = match **b {
                    Expr::Num(v) => Expr::Num(v - 1.0),
                    _ => sub((**b).clone(), Expr::Num(1.0)),
                };
                mul(mul((**b).clone(), pow((**a).clone(), lowered)), a.derivative(wrt)?)
            }
            Expr::Call(f, a) => {
                let da = a.derivative(wrt)?;
                let inner = (**a).clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, inner),
                    Func::Cos => neg(call(Func::Sin, inner)),
                    Func::Exp => call(Func::Exp, inner),
                    Func::Sqrt => div(Expr::Num(1.0), mul(Expr::Num(2.0), call(Func::Sqrt, inner))),
                    Func::Tanh => sub(Expr::Num(1.0), pow(call(Func::Tanh, inner), Expr::Num(2.0))),
                    Func::Abs => return None,
                };
                mul(outer, da)
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Num(v) if v.is_sign_negative() => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Pi => write!(f, "pi"),
            Expr::I => write!(f, "i"),
            Expr::Var(j) => write!(f, "x{}", j + 1),
            Expr::Time => write!(f, "t"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.write_at(f, 4)
            }
            Expr::Add(a, b) => {
                a.write_at(f, 1)?;
                write!(f, " + ")?;
                b.write_at(f, 2)
            }
            Expr::Sub(a, b) => {
                a.write_at(f, 1)?;
                write!(f, " - ")?;
                b.write_at(f, 2)
            }
            Expr::Mul(a, b) => {
                a.write_at(f, 2)?;
                write!(f, "*")?;
                b.write_at(f, 3)
            }
            Expr::Div(a, b) => {
                a.write_at(f, 2)?;
                write!(f, "/")?;
                b.write_at(f, 3)
            }
            Expr::Pow(a, b) => {
                a.write_at(f, 5)?;
                write!(f, "^")?;
                b.write_at(f, 3)
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write_at(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

fn num(e: &Expr) -> Option<f64> {
    match e {
        Expr::Num(v) => Some(*v),
        _ => None,
    }
}

pub(crate) fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        a => Expr::Neg(Box::new(a)),
    }
}

pub(crate) fn add(a: Expr, b: Expr) -> Expr {
    match (num(&a), num(&b)) {
        (Some(x), Some(y)) => Expr::Num(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn sub(a: Expr, b: Expr) -> Expr {
    match (num(&a), num(&b)) {
        (Some(x), Some(y)) => Expr::Num(x - y),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn mul(a: Expr, b: Expr) -> Expr {
    match (num(&a), num(&b)) {
        (Some(x), Some(y)) => Expr::Num(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Num(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        (Some(x), _) if x == -1.0 => neg(b),
        (_, Some(y)) if y == -1.0 => neg(a),
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn div(a: Expr, b: Expr) -> Expr {
    match (num(&a), num(&b)) {
        (Some(x), _) if x == 0.0 => Expr::Num(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn pow(a: Expr, b: Expr) -> Expr {
    match num(&b) {
        Some(y) if y == 1.0 => a,
        Some(y) if y == 0.0 => Expr::Num(1.0),
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(text: &str, x: &[f64], t: f64) -> Complex64 {
        parse_expression(text, x.len()).unwrap().eval(x, t)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("x1^2 - x2^2", &[3.0, 2.0], 0.0).re, 5.0);
        assert_eq!(ev("-x1^2", &[3.0, 0.0], 0.0).re, -9.0);
        assert_eq!(ev("2^3^2", &[0.0, 0.0], 0.0).re, 512.0);
        assert_eq!(ev("2^-1", &[0.0, 0.0], 0.0).re, 0.5);
        assert_eq!(ev("8/4/2", &[0.0, 0.0], 0.0).re, 1.0);
        assert_eq!(ev("1 - 2 - 3", &[0.0, 0.0], 0.0).re, -4.0);
        assert_eq!(ev("2*3 + 4*5", &[0.0, 0.0], 0.0).re, 26.0);
    }

    #[test]
    fn gaussian_value() {
        let v = ev("exp(-(x1^2+x2^2))", &[1.0, 0.0], 0.0);
        assert!((v.re - (-1.0f64).exp()).abs() < 1e-16);
        assert!((v.re - 0.367879441).abs() < 1e-9);
    }

    #[test]
    fn errors_carry_offsets() {
        match parse_expression("sin(pi*t)*x3", 2) {
            Err(Error::VariableOutOfRange { index: 3, n: 2, offset: 10 }) => {}
            other => panic!("{other:?}"),
        }
        match parse_expression("x1 +", 2) {
            Err(Error::Syntax { offset: 4, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_expression("foo(x1)", 2), Err(Error::UnknownIdentifier { offset: 0, .. })));
        assert!(matches!(parse_expression("x0", 2), Err(Error::UnknownIdentifier { .. })));
        assert!(matches!(parse_expression("(x1", 2), Err(Error::Syntax { offset: 3, .. })));
        assert!(matches!(parse_expression("x1 $ 2", 2), Err(Error::Syntax { offset: 3, .. })));
        assert!(parse_expression("  ", 2).is_err());
    }

    #[test]
    fn round_trip_examples() {
        for text in ["-3", "2^-3", "x1 - -3", "-(x1 + x2)*t", "(-2)^2", "-x1^2", "sqrt(abs(x1))/(1 + x2^2)"] {
            let e = parse_expression(text, 2).unwrap();
            let once = e.to_string();
            let e2 = parse_expression(&once, 2).unwrap();
            assert_eq!(e2.to_string(), once, "{text}");
            let x = [0.7, -1.3];
            assert_eq!(e.eval(&x, 0.4), e2.eval(&x, 0.4), "{text}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let e = parse_expression("sin(x1*x2)^3 + tanh(t*x1)/sqrt(2 + x2^2) - exp(-x1)*cos(x2)", 2).unwrap();
        let x = [0.3, -0.8];
        let t = 0.6;
        let h = 1e-5;
        for wrt in [Wrt::Var(0), Wrt::Var(1), Wrt::Time] {
            let d = e.derivative(wrt).unwrap();
            let (mut xp, mut xm, mut tp, mut tm) = (x, x, t, t);
            match wrt {
                Wrt::Var(j) => {
                    xp[j] += h;
                    xm[j] -= h;
                }
                Wrt::Time => {
                    tp += h;
                    tm -= h;
                }
            }
            let fd = (e.eval_real(&xp, tp) - e.eval_real(&xm, tm)) / (2.0 * h);
            assert!((d.eval_real(&x, t) - fd).abs() < 1e-8, "{wrt:?}");
        }
        assert!(parse_expression("abs(x1)", 1).unwrap().derivative(Wrt::Var(0)).is_none());
        assert!(parse_expression("2^x1", 1).unwrap().derivative(Wrt::Var(0)).is_none());
        assert!(parse_expression("abs(x1)", 2).unwrap().derivative(Wrt::Var(1)).unwrap().is_zero());
    }

    #[test]
    fn complex_slots() {
        let v = ev("i*x1 + 2", &[3.0, 0.0], 0.0);
        assert_eq!(v, Complex64::new(2.0, 3.0));
        let e = parse_expression("i", 2).unwrap();
        assert!(e.contains_imaginary_literal());
        assert!(e.eval_real(&[0.0, 0.0], 0.0).is_nan());
    }
}
