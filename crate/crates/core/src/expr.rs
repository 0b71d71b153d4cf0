//! Expressions in the coordinates `x1, …, xn`, used for custom metric and
//! 1-form entries.
//!
//! Grammar:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'x' index | 'sqrt' '(' expr ')' | 'exp' '(' expr ')' | '(' expr ')'
//! ```
//!
//! Integer exponents are evaluated by repeated multiplication, so they stay
//! exact at the origin on every carrier.

use std::fmt;
use std::sync::Arc;

use crate::error::{GeomError, Result};
use crate::field::{AnalyticForm, AnalyticMetric};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Zero-based coordinate index.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Sqrt(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser { s: src.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.s.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    /// Largest coordinate index used, plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Sqrt(a) | Expr::Exp(a) => a.arity(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.arity().max(b.arity())
            }
        }
    }

    pub fn eval<S: Scalar<Real = f64>>(&self, x: &[S]) -> S {
        match self {
            Expr::Num(v) => S::from_real(*v),
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => {
                let base = a.eval(x);
                match **b {
                    Expr::Num(v) if v.fract() == 0.0 && v.abs() <= 64.0 => base.powi(v as i32),
                    _ => base.powf(b.eval(x)),
                }
            }
            Expr::Sqrt(a) => a.eval(x).sqrt(),
            Expr::Exp(a) => a.eval(x).exp(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a}^{b})"),
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> GeomError {
        GeomError::InvalidParameter(format!("expression: {msg} at position {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
                match word {
                    "sqrt" | "exp" => {
                        if !self.eat(b'(') {
                            return Err(self.error("expected '(' after function name"));
                        }
                        let arg = Box::new(self.expr()?);
                        if !self.eat(b')') {
                            return Err(self.error("expected ')'"));
                        }
                        Ok(if word == "sqrt" { Expr::Sqrt(arg) } else { Expr::Exp(arg) })
                    }
                    _ => match word.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
                        Some(i) if i >= 1 => Ok(Expr::Var(i - 1)),
                        _ => {
                            self.pos = start;
                            Err(self.error(&format!("unknown identifier '{word}'")))
                        }
                    },
                }
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.s.len() && (p.s[p.pos].is_ascii_digit() || p.s[p.pos] == b'.') {
                p.pos += 1;
            }
        };
        digits(self);
        if self.pos < self.s.len() && (self.s[self.pos] == b'e' || self.s[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.s.len() && (self.s[self.pos] == b'+' || self.s[self.pos] == b'-') {
                self.pos += 1;
            }
            if self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                digits(self);
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| GeomError::InvalidParameter(format!("expression: bad number '{text}'")))
    }
}

fn parse_list(src: &str) -> Result<Vec<Expr>> {
    src.split(';').map(Expr::parse).collect()
}

/// Metric with expression entries, symmetrized as `(E + Eᵀ)/2`.
#[derive(Clone, Debug)]
pub struct ExprMetric {
    n: usize,
    entries: Vec<Expr>,
    radius: f64,
}

impl ExprMetric {
    /// `src` lists the `n²` entries row by row, separated by `;`.
    pub fn parse(src: &str, n: usize, radius: f64) -> Result<Self> {
        let entries = parse_list(src)?;
        if entries.len() != n * n {
            return Err(GeomError::InvalidParameter(format!(
                "metric needs {} entries for dimension {n}, got {}",
                n * n,
                entries.len()
            )));
        }
        check_arity(&entries, n)?;
        if !(radius > 0.0) {
            return Err(GeomError::InvalidParameter(format!("radius must be positive, got {radius}")));
        }
        let m = ExprMetric { n, entries, radius };
        if !m.matrix::<f64>(&vec![0.0; n]).is_positive_definite() {
            return Err(GeomError::InvalidParameter("metric is not positive definite at the origin".into()));
        }
        Ok(m)
    }
}

impl AnalyticMetric<f64> for ExprMetric {
    fn dim(&self) -> usize {
        self.n
    }
    fn domain_radius(&self) -> f64 {
        self.radius
    }
    fn matrix<S: Scalar<Real = f64>>(&self, x: &[S]) -> Matrix<S> {
        let e = Matrix::from_fn(self.n, |i, j| self.entries[i * self.n + j].eval(x));
        e.symmetric_part()
    }
}

/// 1-form with expression entries.
#[derive(Clone, Debug)]
pub struct ExprForm {
    entries: Vec<Expr>,
}

impl ExprForm {
    /// `src` lists the `n` entries separated by `;`.
    pub fn parse(src: &str, n: usize) -> Result<Self> {
        let entries = parse_list(src)?;
        if entries.len() != n {
            return Err(GeomError::InvalidParameter(format!(
                "form needs {n} entries, got {}",
                entries.len()
            )));
        }
        check_arity(&entries, n)?;
        Ok(ExprForm { entries })
    }
}

impl AnalyticForm<f64> for ExprForm {
    fn dim(&self) -> usize {
        self.entries.len()
    }
    fn covector<S: Scalar<Real = f64>>(&self, x: &[S]) -> Vec<S> {
        self.entries.iter().map(|e| e.eval(x)).collect()
    }
}

fn check_arity(entries: &[Expr], n: usize) -> Result<()> {
    match entries.iter().map(Expr::arity).max() {
        Some(k) if k > n => Err(GeomError::InvalidParameter(format!("x{k} used in dimension {n}"))),
        _ => Ok(()),
    }
}

/// Parses a custom `(a, b)` pair.
pub fn custom_pair(metric: &str, form: &str, n: usize, radius: f64) -> Result<(crate::field::Metric, crate::field::Form)> {
    Ok((Arc::new(ExprMetric::parse(metric, n, radius)?), Arc::new(ExprForm::parse(form, n)?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Dual;

    #[test]
    fn precedence_and_functions() {
        let e = Expr::parse("1 + 2*x1^2 - x2/4 + sqrt(4) * exp(0)").unwrap();
        assert!((e.eval::<f64>(&[3.0, 2.0]) - (1.0 + 18.0 - 0.5 + 2.0)).abs() < 1e-15);
        assert_eq!(Expr::parse("-x1^2").unwrap().eval(&[3.0]), -9.0);
        assert_eq!(Expr::parse("2^-1").unwrap().eval::<f64>(&[]), 0.5);
        assert_eq!(Expr::parse("1.5e-1*x1").unwrap().eval(&[2.0]), 0.3);
    }

    #[test]
    fn derivatives_through_carriers() {
        let e = Expr::parse("x1^3 + exp(x1*x2)").unwrap();
        let d = e.eval(&[Dual::var(1.0), Dual::constant(0.5)]);
        assert!((d.eps - (3.0 + 0.5 * 0.5f64.exp())).abs() < 1e-14);
    }

    #[test]
    fn errors() {
        for bad in ["", "1 +", "(x1", "y1", "x0", "sqrt 2", "1 2"] {
            assert!(Expr::parse(bad).is_err(), "{bad}");
        }
        assert!(ExprMetric::parse("1;0;0", 2, 1.0).is_err());
        assert!(ExprMetric::parse("-1;0;0;1", 2, 1.0).is_err());
        assert!(ExprForm::parse("x3;0", 2).is_err());
    }

    #[test]
    fn metric_symmetrized() {
        let m = ExprMetric::parse("1; x1; 0; 1", 2, 1.0).unwrap();
        let a = m.matrix(&[0.4, 0.0]);
        assert_eq!(a[(0, 1)], 0.2);
        assert_eq!(a[(1, 0)], 0.2);
    }
}
