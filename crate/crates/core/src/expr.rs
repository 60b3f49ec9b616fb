//! Complex scalar expressions in `s` and `t`.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := ['-'] atom
//! atom   := number | number 'i' | 'pi' | 's' | 't' | func '(' expr ')' | '(' expr ')'
//! func   := 'sin' | 'cos' | 'exp' | 'sqrt'
//! ```
//!
//! The Unicode minus `−` is accepted wherever `-` is.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{c, CMat, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Real(f64),
    Imag(f64),
    Pi,
    S,
    T,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, s: f64, t: f64) -> C64 {
        match self {
            Expr::Real(x) => c(*x, 0.0),
            Expr::Imag(y) => c(0.0, *y),
            Expr::Pi => c(std::f64::consts::PI, 0.0),
            Expr::S => c(s, 0.0),
            Expr::T => c(t, 0.0),
            // 0 - x keeps a +0 imaginary part off the sqrt branch cut.
            Expr::Neg(e) => c(0.0, 0.0) - e.eval(s, t),
            Expr::Binary(op, a, b) => {
                let (x, y) = (a.eval(s, t), b.eval(s, t));
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                }
            }
            Expr::Call(f, e) => {
                let x = e.eval(s, t);
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Sqrt => x.sqrt(),
                }
            }
        }
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesized; re-parses to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Real(x) => write!(f, "{x:?}"),
            Expr::Imag(y) => write!(f, "{y:?}i"),
            Expr::Pi => write!(f, "pi"),
            Expr::S => write!(f, "s"),
            Expr::T => write!(f, "t"),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Binary(op, a, b) => {
                let o = match op {
                    BinOp::Add => '+',
                    BinOp::Sub => '-',
                    BinOp::Mul => '*',
                    BinOp::Div => '/',
                };
                write!(f, "({a} {o} {b})")
            }
            Expr::Call(func, e) => {
                let name = match func {
                    Func::Sin => "sin",
                    Func::Cos => "cos",
                    Func::Exp => "exp",
                    Func::Sqrt => "sqrt",
                };
                write!(f, "{name}({e})")
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while let Some(ch) = self.peek() {
            if ch.is_whitespace() {
                self.pos += ch.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn err<T>(&self, message: &str) -> Result<T> {
        Err(Error::Syntax { offset: self.pos, message: message.to_string() })
    }

    fn minus(ch: char) -> bool {
        ch == '-' || ch == '\u{2212}'
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            self.skip_ws();
            let op = match self.peek() {
                Some('+') => BinOp::Add,
                Some(ch) if Self::minus(ch) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += self.peek().unwrap().len_utf8();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            self.skip_ws();
            let op = match self.peek() {
                Some('*') => BinOp::Mul,
                Some('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        self.skip_ws();
        match self.peek() {
            Some(ch) if Self::minus(ch) => {
                self.pos += ch.len_utf8();
                Ok(Expr::Neg(Box::new(self.atom()?)))
            }
            _ => self.atom(),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let digits = |p: &mut usize| {
            let s = *p;
            while *p < bytes.len() && bytes[*p].is_ascii_digit() {
                *p += 1;
            }
            *p > s
        };
        let mut p = self.pos;
        let int = digits(&mut p);
        let mut frac = false;
        if p < bytes.len() && bytes[p] == b'.' {
            p += 1;
            frac = digits(&mut p);
        }
        if !int && !frac {
            return self.err("malformed number");
        }
        if p < bytes.len() && (bytes[p] == b'e' || bytes[p] == b'E') {
            let mut q = p + 1;
            if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) {
                p = q;
            } else {
                self.pos = q;
                return self.err("malformed exponent");
            }
        }
        let value: f64 = self.src[start..p].parse().map_err(|_| Error::Syntax {
            offset: start,
            message: "malformed number".into(),
        })?;
        self.pos = p;
        if self.peek() == Some('i') {
            let after = self.src[p + 1..].chars().next();
            if !after.is_some_and(|ch| ch.is_alphanumeric() || ch == '_') {
                self.pos += 1;
                return Ok(Expr::Imag(value));
            }
        }
        Ok(Expr::Real(value))
    }

    fn atom(&mut self) -> Result<Expr> {
        self.skip_ws();
        let Some(ch) = self.peek() else {
            return self.err("unexpected end of input");
        };
        if ch.is_ascii_digit() || ch == '.' {
            return self.number();
        }
        if ch == '(' {
            self.pos += 1;
            let e = self.expr()?;
            self.skip_ws();
            if self.peek() != Some(')') {
                return self.err("expected ')'");
            }
            self.pos += 1;
            return Ok(e);
        }
        if ch.is_alphabetic() || ch == '_' {
            let start = self.pos;
            while let Some(ch) = self.peek() {
                if ch.is_alphanumeric() || ch == '_' {
                    self.pos += ch.len_utf8();
                } else {
                    break;
                }
            }
            let name = &self.src[start..self.pos];
            let func = match name {
                "pi" => return Ok(Expr::Pi),
                "s" => return Ok(Expr::S),
                "t" => return Ok(Expr::T),
                "sin" => Func::Sin,
                "cos" => Func::Cos,
                "exp" => Func::Exp,
                "sqrt" => Func::Sqrt,
                _ => return Err(Error::UnknownIdentifier { offset: start, name: name.to_string() }),
            };
            self.skip_ws();
            if self.peek() != Some('(') {
                return self.err("expected '(' after function name");
            }
            self.pos += 1;
            let arg = self.expr()?;
            self.skip_ws();
            if self.peek() != Some(')') {
                return self.err("expected ')'");
            }
            self.pos += 1;
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        self.err("unexpected character")
    }
}

/// Parses one scalar expression; offsets in errors are byte offsets into `src`.
pub fn parse_expression(src: &str) -> Result<Expr> {
    let mut p = Parser { src, pos: 0 };
    p.skip_ws();
    if p.peek().is_none() {
        return p.err("empty expression");
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.peek().is_some() {
        return p.err("unexpected trailing input");
    }
    Ok(e)
}

/// Rectangular array of expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Expr>,
}

impl ExprMatrix {
    /// Parses row-major string entries; ragged input is rejected.
    pub fn parse(rows: &[Vec<String>]) -> Result<ExprMatrix> {
        let r = rows.len();
        let cols = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != cols) {
            return Err(Error::Config("ragged expression matrix".into()));
        }
        let entries = rows.iter().flatten().map(|e| parse_expression(e)).collect::<Result<Vec<_>>>()?;
        Ok(ExprMatrix { rows: r, cols, entries })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn eval(&self, s: f64, t: f64) -> CMat {
        CMat::from_iterator(self.cols, self.rows, self.entries.iter().map(|e| e.eval(s, t))).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_examples() {
        let e = parse_expression("i*(1 + 0.5*s*sin(pi*t))");
        assert!(matches!(e, Err(Error::UnknownIdentifier { offset: 0, .. })));
        let e = parse_expression("1i*(1 + 0.5*s*sin(pi*t))").unwrap();
        assert!((e.eval(1.0, 0.5) - c(0.0, 1.5)).norm() < 1e-15);
        assert_eq!(parse_expression("0").unwrap().eval(0.3, 0.7), c(0.0, 0.0));
    }

    #[test]
    fn syntax_offsets() {
        assert!(matches!(parse_expression("s +* t"), Err(Error::Syntax { offset: 3, .. })));
        assert!(matches!(parse_expression(""), Err(Error::Syntax { offset: 0, .. })));
        assert!(matches!(parse_expression("sin s"), Err(Error::Syntax { offset: 4, .. })));
        assert!(matches!(parse_expression("(s"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse_expression("1e+"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expression("s t"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse_expression("foo(s)"), Err(Error::UnknownIdentifier { offset: 0, .. })));
    }

    #[test]
    fn literals() {
        assert_eq!(parse_expression("2i").unwrap(), Expr::Imag(2.0));
        assert_eq!(parse_expression("1.5e-3").unwrap(), Expr::Real(1.5e-3));
        assert_eq!(parse_expression(".5").unwrap(), Expr::Real(0.5));
        assert!((parse_expression("\u{2212}s").unwrap().eval(2.0, 0.0) - c(-2.0, 0.0)).norm() == 0.0);
        assert!(matches!(parse_expression("2in"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn precedence_and_pretty() {
        let e = parse_expression("1 - 2 - 3 * 4 / 2").unwrap();
        assert_eq!(e.eval(0.0, 0.0), c(-7.0, 0.0));
        assert_eq!(e.to_string(), "((1.0 - 2.0) - ((3.0 * 4.0) / 2.0))");
        assert_eq!(parse_expression(&e.to_string()).unwrap(), e);
        let e = parse_expression("-sqrt(-1)").unwrap();
        assert!((e.eval(0.0, 0.0) - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn matrix_layout() {
        let rows = vec![vec!["1".to_string(), "s".to_string()], vec!["t".to_string(), "2i".to_string()]];
        let m = ExprMatrix::parse(&rows).unwrap().eval(3.0, 4.0);
        assert_eq!(m[(0, 1)], c(3.0, 0.0));
        assert_eq!(m[(1, 0)], c(4.0, 0.0));
        assert_eq!(m[(1, 1)], c(0.0, 2.0));
        let ragged = vec![vec!["1".to_string()], vec![]];
        assert!(matches!(ExprMatrix::parse(&ragged), Err(Error::Config(_))));
    }
}
