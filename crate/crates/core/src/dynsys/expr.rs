//! Expression trees for vector-field components.

use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::setcore::{Interval, IntervalVector};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Zero-based state index.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

/// Shorthand for the `i`-th state variable, one-based like `x1`.
pub fn x(i: usize) -> Expr {
    Expr::Var(i - 1)
}

pub fn c(v: f64) -> Expr {
    Expr::Const(v)
}

impl Expr {
    pub fn pow(self, p: u32) -> Expr {
        Expr::Pow(Box::new(self), p)
    }

    pub fn sin(self) -> Expr {
        Expr::Sin(Box::new(self))
    }

    pub fn cos(self) -> Expr {
        Expr::Cos(Box::new(self))
    }

    pub fn exp(self) -> Expr {
        Expr::Exp(Box::new(self))
    }

    /// Largest variable index used plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => {
                a.arity()
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.arity().max(b.arity())
            }
        }
    }

    /// Pointwise evaluation.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(match self {
            Expr::Const(v) => *v,
            Expr::Var(i) => *x
                .get(*i)
                .ok_or_else(|| invalid(format!("variable x{} out of range", i + 1)))?,
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Expr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Expr::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Expr::Div(a, b) => {
                let d = b.eval(x)?;
                if d == 0.0 {
                    return Err(Error::NumericDomain(format!("division by zero in {self}")));
                }
                a.eval(x)? / d
            }
            Expr::Pow(a, p) => a.eval(x)?.powi(*p as i32),
            Expr::Sin(a) => a.eval(x)?.sin(),
            Expr::Cos(a) => a.eval(x)?.cos(),
            Expr::Exp(a) => a.eval(x)?.exp(),
        })
    }

    /// Natural interval extension: an interval containing `{e(x) | x ∈ box}`.
    pub fn range(&self, dom: &IntervalVector) -> Result<Interval> {
        Ok(match self {
            Expr::Const(v) => Interval::point(*v),
            Expr::Var(i) => {
                if *i >= dom.dim() {
                    return Err(invalid(format!("variable x{} out of range", i + 1)));
                }
                dom[*i]
            }
            Expr::Neg(a) => -a.range(dom)?,
            Expr::Add(a, b) => a.range(dom)? + b.range(dom)?,
            Expr::Sub(a, b) => a.range(dom)? - b.range(dom)?,
            Expr::Mul(a, b) => a.range(dom)? * b.range(dom)?,
            Expr::Div(a, b) => a.range(dom)?.div(&b.range(dom)?)?,
            Expr::Pow(a, p) => a.range(dom)?.powi(*p),
            Expr::Sin(a) => a.range(dom)?.sin(),
            Expr::Cos(a) => a.range(dom)?.cos(),
            Expr::Exp(a) => a.range(dom)?.exp(),
        })
    }

    /// Coefficients `(a, k)` with `e(x) = a·x + k` when the expression is affine.
    pub fn affine_coeffs(&self, n: usize) -> Option<(Vec<f64>, f64)> {
        match self {
            Expr::Const(v) => Some((vec![0.0; n], *v)),
            Expr::Var(i) if *i < n => {
                let mut a = vec![0.0; n];
                a[*i] = 1.0;
                Some((a, 0.0))
            }
            Expr::Var(_) => None,
            Expr::Neg(a) => a.affine_coeffs(n).map(|(v, k)| scaled(v, k, -1.0)),
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let (va, ka) = a.affine_coeffs(n)?;
                let (vb, kb) = b.affine_coeffs(n)?;
                let s = if matches!(self, Expr::Add(..)) { 1.0 } else { -1.0 };
                Some((
                    va.iter().zip(&vb).map(|(x, y)| x + s * y).collect(),
                    ka + s * kb,
                ))
            }
            Expr::Mul(a, b) => {
                let (va, ka) = a.affine_coeffs(n)?;
                let (vb, kb) = b.affine_coeffs(n)?;
                match (is_zero(&va), is_zero(&vb)) {
                    (true, _) => Some(scaled(vb, kb, ka)),
                    (_, true) => Some(scaled(va, ka, kb)),
                    _ => None,
                }
            }
            Expr::Div(a, b) => {
                let (va, ka) = a.affine_coeffs(n)?;
                let (vb, kb) = b.affine_coeffs(n)?;
                (is_zero(&vb) && kb != 0.0).then(|| scaled(va, ka, 1.0 / kb))
            }
            Expr::Pow(a, p) => {
                let (va, ka) = a.affine_coeffs(n)?;
                match p {
                    0 => Some((vec![0.0; n], 1.0)),
                    1 => Some((va, ka)),
                    _ if is_zero(&va) => Some((va, ka.powi(*p as i32))),
                    _ => None,
                }
            }
            Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => {
                let (va, ka) = a.affine_coeffs(n)?;
                if !is_zero(&va) {
                    return None;
                }
                let k = match self {
                    Expr::Sin(_) => ka.sin(),
                    Expr::Cos(_) => ka.cos(),
                    _ => ka.exp(),
                };
                Some((va, k))
            }
        }
    }
}

fn scaled(v: Vec<f64>, k: f64, s: f64) -> (Vec<f64>, f64) {
    (v.into_iter().map(|x| x * s).collect(), k * s)
}

fn is_zero(v: &[f64]) -> bool {
    v.iter().all(|&x| x == 0.0)
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) if *v < 0.0 => write!(f, "({v})"),
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, p) => write!(f, "{a}^{p}"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

/// Parses the dynamics grammar: `x1..xn`, numeric literals, `+ - * / ^`,
/// `sin`, `cos`, `exp` and parentheses. `^` takes a non-negative integer
/// exponent and binds tighter than unary minus (`-x1^2 = -(x1^2)`).
pub fn parse(src: &str) -> Result<Expr> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.sum()?;
    match p.peek() {
        None => Ok(e),
        Some(t) => Err(invalid(format!("unexpected token {t:?} in '{src}'"))),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part: 1e-3, 2.5E+4
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit: String = chars[start..i].iter().collect();
            let v = lit
                .parse::<f64>()
                .map_err(|_| invalid(format!("bad numeric literal '{lit}'")))?;
            out.push(Tok::Num(v));
        } else if ch.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(ch) {
            out.push(Tok::Op(ch));
            i += 1;
        } else {
            return Err(invalid(format!("unexpected character '{ch}' in '{src}'")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            if self.eat('+') {
                lhs = lhs + self.product()?;
            } else if self.eat('-') {
                lhs = lhs - self.product()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = lhs * self.unary()?;
            } else if self.eat('/') {
                lhs = lhs / self.unary()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        match self.next() {
            Some(Tok::Num(p)) if p >= 0.0 && p.fract() == 0.0 && p <= u32::MAX as f64 => {
                Ok(base.pow(p as u32))
            }
            other => Err(invalid(format!(
                "exponent must be a non-negative integer literal, got {other:?}"
            ))),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Expr::Const(v)),
            Some(Tok::Op('(')) => {
                let e = self.sum()?;
                if !self.eat(')') {
                    return Err(invalid("missing closing parenthesis"));
                }
                Ok(e)
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "sin" | "cos" | "exp" => {
                    if !self.eat('(') {
                        return Err(invalid(format!("'{name}' must be followed by '('")));
                    }
                    let arg = self.sum()?;
                    if !self.eat(')') {
                        return Err(invalid("missing closing parenthesis"));
                    }
                    Ok(match name.as_str() {
                        "sin" => arg.sin(),
                        "cos" => arg.cos(),
                        _ => arg.exp(),
                    })
                }
                _ => {
                    let idx = name
                        .strip_prefix('x')
                        .and_then(|d| d.parse::<usize>().ok())
                        .filter(|&i| i >= 1)
                        .ok_or_else(|| invalid(format!("unknown identifier '{name}'")))?;
                    Ok(Expr::Var(idx - 1))
                }
            },
            other => Err(invalid(format!("unexpected token {other:?}"))),
        }
    }
}
