//! Arithmetic expressions in one variable with symbolic differentiation.
//!
//! Grammar:
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | var | func '(' expr ')' | '(' expr ')'
//! ```
//! `^` is right-associative and binds tighter than unary minus, so
//! `-x^2 = -(x^2)`. Functions: exp, log, sqrt, sin, cos, sinh, cosh, tanh.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("{message} at column {column}")]
pub struct ParseError {
    pub message: String,
    /// 1-based.
    pub column: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Tanh,
}

impl Func {
    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "exp" => Self::Exp,
            "log" | "ln" => Self::Log,
            "sqrt" => Self::Sqrt,
            "sin" => Self::Sin,
            "cos" => Self::Cos,
            "sinh" => Self::Sinh,
            "cosh" => Self::Cosh,
            "tanh" => Self::Tanh,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Self::Exp => "exp",
            Self::Log => "log",
            Self::Sqrt => "sqrt",
            Self::Sin => "sin",
            Self::Cos => "cos",
            Self::Sinh => "sinh",
            Self::Cosh => "cosh",
            Self::Tanh => "tanh",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Self::Exp => v.exp(),
            Self::Log => v.ln(),
            Self::Sqrt => v.sqrt(),
            Self::Sin => v.sin(),
            Self::Cos => v.cos(),
            Self::Sinh => v.sinh(),
            Self::Cosh => v.cosh(),
            Self::Tanh => v.tanh(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

use Expr::*;

fn num(v: f64) -> Expr {
    Num(v)
}

// Constructors with light constant folding so derivatives stay readable.
fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), Num(y)) => Num(x + y),
        (Num(z), _) if *z == 0.0 => b,
        (_, Num(z)) if *z == 0.0 => a,
        _ => Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), Num(y)) => Num(x - y),
        (_, Num(z)) if *z == 0.0 => a,
        (Num(z), _) if *z == 0.0 => neg(b),
        _ => Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), Num(y)) => Num(x * y),
        (Num(z), _) | (_, Num(z)) if *z == 0.0 => Num(0.0),
        (Num(o), _) if *o == 1.0 => b,
        (_, Num(o)) if *o == 1.0 => a,
        _ => Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(z), _) if *z == 0.0 => Num(0.0),
        (_, Num(o)) if *o == 1.0 => a,
        _ => Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Num(x) => Num(-x),
        Neg(inner) => *inner,
        other => Neg(Box::new(other)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Num(o)) if *o == 1.0 => a,
        (_, Num(z)) if *z == 0.0 => Num(1.0),
        _ => Pow(Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    Call(f, Box::new(a))
}

impl Expr {
    pub fn parse(src: &str, var: &str) -> Result<Self, ParseError> {
        let mut p = Parser { src, pos: 0, var };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Num(v) => *v,
            Var => x,
            Neg(a) => -a.eval(x),
            Add(a, b) => a.eval(x) + b.eval(x),
            Sub(a, b) => a.eval(x) - b.eval(x),
            Mul(a, b) => a.eval(x) * b.eval(x),
            Div(a, b) => a.eval(x) / b.eval(x),
            Pow(a, b) => {
                let base = a.eval(x);
                match **b {
                    Num(n) if n.fract() == 0.0 && n.abs() <= i32::MAX as f64 => base.powi(n as i32),
                    _ => base.powf(b.eval(x)),
                }
            }
            Call(f, a) => f.apply(a.eval(x)),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Num(_) => true,
            Var => false,
            Neg(a) | Call(_, a) => a.is_constant(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// Symbolic derivative with respect to the variable.
    pub fn derivative(&self) -> Expr {
        match self {
            Num(_) => num(0.0),
            Var => num(1.0),
            Neg(a) => neg(a.derivative()),
            Add(a, b) => add(a.derivative(), b.derivative()),
            Sub(a, b) => sub(a.derivative(), b.derivative()),
            Mul(a, b) => add(mul(a.derivative(), (**b).clone()), mul((**a).clone(), b.derivative())),
            Div(a, b) => div(
                sub(mul(a.derivative(), (**b).clone()), mul((**a).clone(), b.derivative())),
                pow((**b).clone(), num(2.0)),
            ),
            Pow(a, b) if b.is_constant() => {
                let n = (**b).clone();
                mul(mul(n.clone(), pow((**a).clone(), sub(n, num(1.0)))), a.derivative())
            }
            Pow(a, b) => {
                // d(a^b) = a^b (b' ln a + b a'/a)
                let this = self.clone();
                mul(
                    this,
                    add(
                        mul(b.derivative(), call(Func::Log, (**a).clone())),
                        div(mul((**b).clone(), a.derivative()), (**a).clone()),
                    ),
                )
            }
            Call(f, a) => {
                let u = (**a).clone();
                let outer = match f {
                    Func::Exp => call(Func::Exp, u),
                    Func::Log => div(num(1.0), u),
                    Func::Sqrt => div(num(0.5), call(Func::Sqrt, u)),
                    Func::Sin => call(Func::Cos, u),
                    Func::Cos => neg(call(Func::Sin, u)),
                    Func::Sinh => call(Func::Cosh, u),
                    Func::Cosh => call(Func::Sinh, u),
                    Func::Tanh => sub(num(1.0), pow(call(Func::Tanh, u), num(2.0))),
                };
                mul(outer, a.derivative())
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num(v) => write!(f, "{v}"),
            Var => write!(f, "x"),
            Neg(a) => write!(f, "(-{a})"),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "({a} * {b})"),
            Div(a, b) => write!(f, "({a} / {b})"),
            Pow(a, b) => write!(f, "({a} ^ {b})"),
            Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    var: &'a str,
}

impl Parser<'_> {
    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            message: msg.into(),
            column: self.src[..self.pos].chars().count() + 1,
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.error("unexpected end of expression")),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.') {
                    self.pos += 1;
                }
                // exponent part
                if matches!(self.peek(), Some('e' | 'E')) {
                    let save = self.pos;
                    self.pos += 1;
                    if matches!(self.peek(), Some('+' | '-')) {
                        self.pos += 1;
                    }
                    if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                            self.pos += 1;
                        }
                    } else {
                        self.pos = save;
                    }
                }
                let text = &self.src[start..self.pos];
                text.parse::<f64>().map(Num).map_err(|_| {
                    self.pos = start;
                    self.error(format!("invalid number '{text}'"))
                })
            }
            Some(c) if c.is_alphabetic() || c == '_' => {
                while matches!(self.peek(), Some(c) if c.is_alphanumeric() || c == '_') {
                    self.pos += 1;
                }
                let name = &self.src[start..self.pos];
                if name == self.var {
                    return Ok(Var);
                }
                match name {
                    "pi" => return Ok(Num(std::f64::consts::PI)),
                    "e" => return Ok(Num(std::f64::consts::E)),
                    _ => {}
                }
                let Some(func) = Func::from_name(name) else {
                    self.pos = start;
                    return Err(self.error(format!("unknown identifier '{name}' (the variable is '{}')", self.var)));
                };
                if !self.eat('(') {
                    return Err(self.error(format!("expected '(' after {name}")));
                }
                let arg = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(Call(func, Box::new(arg)))
            }
            Some(c) => Err(self.error(format!("unexpected character '{c}'"))),
        }
    }
}
