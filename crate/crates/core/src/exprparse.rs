//! Arithmetic expressions over reals and jets.
//!
//! Grammar, loosest to tightest:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?        right-associative
//! primary := number | ident | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! `-x^2` parses as `-(x^2)`. Functions: exp, log, sin, cos, sqrt, atan, abs.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jets::{jet_pow, JetScalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Atan,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "atan" => Func::Atan,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Atan => "atan",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprAst {
    Const(f64),
    Var(String),
    Neg(Box<ExprAst>),
    Binary(BinOp, Box<ExprAst>, Box<ExprAst>),
    Call(Func, Box<ExprAst>),
}

/// Canonical fully parenthesized form; parsing it yields the same tree.
impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprAst::Const(c) => write!(f, "{c:?}"),
            ExprAst::Var(v) => write!(f, "{v}"),
            ExprAst::Neg(a) => write!(f, "(-{a})"),
            ExprAst::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            ExprAst::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl ExprAst {
    /// Names of all variables referenced.
    pub fn variables(&self) -> HashSet<String> {
        let mut out = HashSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut HashSet<String>) {
        match self {
            ExprAst::Const(_) => {}
            ExprAst::Var(v) => {
                out.insert(v.clone());
            }
            ExprAst::Neg(a) | ExprAst::Call(_, a) => a.collect_vars(out),
            ExprAst::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

/// A parsed expression together with its source text.
#[derive(Debug, Clone)]
pub struct Expr {
    ast: Arc<ExprAst>,
    source: String,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.ast == other.ast
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.source)
    }
}

impl Expr {
    pub fn parse(text: &str, allowed_vars: &[&str]) -> Result<Self> {
        Ok(Expr {
            ast: Arc::new(parse(text, allowed_vars)?),
            source: text.to_string(),
        })
    }

    pub fn ast(&self) -> &ExprAst {
        &self.ast
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval_real(&self, bindings: &[(&str, f64)]) -> Result<f64> {
        eval_real(&self.ast, bindings)
    }

    pub fn eval_jet(&self, bindings: &[(&str, JetScalar)], proto: &JetScalar) -> Result<JetScalar> {
        eval_jet(&self.ast, bindings, proto)
    }
}

/// Identifier names `prefix1..prefixN`.
pub fn indexed_names(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

pub fn parse(text: &str, allowed_vars: &[&str]) -> Result<ExprAst> {
    if text.trim().is_empty() {
        return Err(Error::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        allowed: allowed_vars,
        end: text.len(),
    };
    let ast = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(Error::Syntax {
            offset: t.offset,
            message: format!("unexpected {}", t.kind.describe()),
        });
    }
    Ok(ast)
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl TokKind {
    fn describe(&self) -> String {
        match self {
            TokKind::Num(v) => format!("number {v}"),
            TokKind::Ident(s) => format!("identifier `{s}`"),
            TokKind::Op(c) => format!("`{c}`"),
            TokKind::LParen => "`(`".into(),
            TokKind::RParen => "`)`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    offset: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit = &text[start..i];
            let v: f64 = lit.parse().map_err(|_| Error::Syntax {
                offset: start,
                message: format!("malformed number `{lit}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::Syntax {
                    offset: start,
                    message: format!("non-finite literal `{lit}`"),
                });
            }
            out.push(Token {
                kind: TokKind::Num(v),
                offset: start,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: TokKind::Ident(text[start..i].to_string()),
                offset: start,
            });
            continue;
        }
        let kind = match c {
            '+' | '-' | '*' | '/' | '^' => TokKind::Op(c),
            '(' => TokKind::LParen,
            ')' => TokKind::RParen,
            _ => {
                return Err(Error::Syntax {
                    offset: start,
                    message: format!("unexpected character `{}`", text[start..].chars().next().unwrap()),
                })
            }
        };
        out.push(Token { kind, offset: start });
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    allowed: &'a [&'a str],
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_op(&self) -> Option<char> {
        match self.peek() {
            Some(Token {
                kind: TokKind::Op(c),
                ..
            }) => Some(*c),
            _ => None,
        }
    }

    fn here(&self) -> usize {
        self.peek().map(|t| t.offset).unwrap_or(self.end)
    }

    fn expr(&mut self) -> Result<ExprAst> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if op == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = ExprAst::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<ExprAst> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if op == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = ExprAst::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<ExprAst> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(ExprAst::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<ExprAst> {
        let base = self.primary()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(ExprAst::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<ExprAst> {
        let offset = self.here();
        let tok = self.peek().cloned().ok_or(Error::Syntax {
            offset,
            message: "unexpected end of input".into(),
        })?;
        self.pos += 1;
        match tok.kind {
            TokKind::Num(v) => Ok(ExprAst::Const(v)),
            TokKind::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            TokKind::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    match self.peek() {
                        Some(Token {
                            kind: TokKind::LParen,
                            ..
                        }) => {
                            self.pos += 1;
                            let arg = self.expr()?;
                            self.expect_rparen()?;
                            Ok(ExprAst::Call(func, Box::new(arg)))
                        }
                        _ => Err(Error::Syntax {
                            offset: self.here(),
                            message: format!("expected `(` after `{name}`"),
                        }),
                    }
                } else if self.allowed.contains(&name.as_str()) {
                    Ok(ExprAst::Var(name))
                } else {
                    Err(Error::UnknownIdentifier(name))
                }
            }
            other => {
                self.pos -= 1;
                Err(Error::Syntax {
                    offset: tok.offset,
                    message: format!("unexpected {}", other.describe()),
                })
            }
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        match self.peek() {
            Some(Token {
                kind: TokKind::RParen,
                ..
            }) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(Error::Syntax {
                offset: self.here(),
                message: "expected `)`".into(),
            }),
        }
    }
}

/// Values an expression can be evaluated over.
trait ExprValue: Sized + Clone {
    fn constant(&self, c: f64) -> Self;
    fn value(&self) -> f64;
    fn add(&self, o: &Self) -> Result<Self>;
    fn sub(&self, o: &Self) -> Result<Self>;
    fn mul(&self, o: &Self) -> Result<Self>;
    fn div(&self, o: &Self) -> Result<Self>;
    fn pow(&self, o: &Self) -> Result<Self>;
    fn neg(&self) -> Self;
    fn call(&self, f: Func) -> Result<Self>;
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{what} produced {v}")))
    }
}

impl ExprValue for f64 {
    fn constant(&self, c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Result<Self> {
        finite(self + o, "addition")
    }
    fn sub(&self, o: &Self) -> Result<Self> {
        finite(self - o, "subtraction")
    }
    fn mul(&self, o: &Self) -> Result<Self> {
        finite(self * o, "multiplication")
    }
    fn div(&self, o: &Self) -> Result<Self> {
        if o.abs() <= crate::jets::MIN_DENOMINATOR {
            return Err(Error::Domain(format!("division by {o:e}")));
        }
        finite(self / o, "division")
    }
    fn pow(&self, o: &Self) -> Result<Self> {
        if o.fract() == 0.0 && o.abs() <= i32::MAX as f64 {
            if *self == 0.0 && *o < 0.0 {
                return Err(Error::Domain("0 raised to a negative power".into()));
            }
            return finite(self.powi(*o as i32), "power");
        }
        if *self <= 0.0 {
            return Err(Error::Domain(format!("{self}^{o} with non-positive base")));
        }
        finite(self.powf(*o), "power")
    }
    fn neg(&self) -> Self {
        -self
    }
    fn call(&self, f: Func) -> Result<Self> {
        let x = *self;
        let v = match f {
            Func::Exp => x.exp(),
            Func::Log => {
                if x <= 0.0 {
                    return Err(Error::Domain(format!("log of {x}")));
                }
                x.ln()
            }
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Sqrt => {
                if x < 0.0 {
                    return Err(Error::Domain(format!("sqrt of {x}")));
                }
                x.sqrt()
            }
            Func::Atan => x.atan(),
            Func::Abs => x.abs(),
        };
        finite(v, f.name())
    }
}

impl ExprValue for JetScalar {
    fn constant(&self, c: f64) -> Self {
        self.lift(c)
    }
    fn value(&self) -> f64 {
        JetScalar::value(self)
    }
    fn add(&self, o: &Self) -> Result<Self> {
        self.try_add(o)
    }
    fn sub(&self, o: &Self) -> Result<Self> {
        self.try_sub(o)
    }
    fn mul(&self, o: &Self) -> Result<Self> {
        self.try_mul(o)
    }
    fn div(&self, o: &Self) -> Result<Self> {
        self.try_div(o)
    }
    fn pow(&self, o: &Self) -> Result<Self> {
        jet_pow(self, o)
    }
    fn neg(&self) -> Self {
        -self
    }
    fn call(&self, f: Func) -> Result<Self> {
        match f {
            Func::Exp => Ok(self.exp()),
            Func::Log => self.ln(),
            Func::Sin => Ok(self.sin()),
            Func::Cos => Ok(self.cos()),
            Func::Sqrt => self.sqrt(),
            Func::Atan => Ok(self.atan()),
            Func::Abs => self.abs(),
        }
    }
}

fn eval_generic<T: ExprValue>(
    ast: &ExprAst,
    lookup: &dyn Fn(&str) -> Option<T>,
    proto: &T,
) -> Result<T> {
    match ast {
        ExprAst::Const(c) => Ok(proto.constant(*c)),
        ExprAst::Var(v) => lookup(v).ok_or_else(|| Error::UnboundVariable(v.clone())),
        ExprAst::Neg(a) => Ok(eval_generic(a, lookup, proto)?.neg()),
        ExprAst::Binary(op, a, b) => {
            let a = eval_generic(a, lookup, proto)?;
            let b = eval_generic(b, lookup, proto)?;
            match op {
                BinOp::Add => a.add(&b),
                BinOp::Sub => a.sub(&b),
                BinOp::Mul => a.mul(&b),
                BinOp::Div => a.div(&b),
                BinOp::Pow => a.pow(&b),
            }
        }
        ExprAst::Call(f, a) => eval_generic(a, lookup, proto)?.call(*f),
    }
}

pub fn eval_real(ast: &ExprAst, bindings: &[(&str, f64)]) -> Result<f64> {
    let lookup = |name: &str| bindings.iter().find(|(n, _)| *n == name).map(|(_, v)| *v);
    let v = eval_generic(ast, &lookup, &0.0)?;
    finite(v.value(), "expression")
}

/// Evaluates over jets; `proto` fixes the jet shape used for constants.
pub fn eval_jet(ast: &ExprAst, bindings: &[(&str, JetScalar)], proto: &JetScalar) -> Result<JetScalar> {
    let lookup = |name: &str| {
        bindings
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| v.clone())
    };
    eval_generic(ast, &lookup, proto)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Box<ExprAst> {
        Box::new(ExprAst::Const(v))
    }
    fn v(n: &str) -> Box<ExprAst> {
        Box::new(ExprAst::Var(n.into()))
    }

    #[test]
    fn precedence_examples() {
        let ast = parse("2/x2^2", &["x1", "x2"]).unwrap();
        assert_eq!(
            ast,
            ExprAst::Binary(BinOp::Div, c(2.0), Box::new(ExprAst::Binary(BinOp::Pow, v("x2"), c(2.0))))
        );
        let ast = parse("exp(2*x1)", &["x1"]).unwrap();
        assert_eq!(
            ast,
            ExprAst::Call(Func::Exp, Box::new(ExprAst::Binary(BinOp::Mul, c(2.0), v("x1"))))
        );
        let ast = parse("-x1^2", &["x1"]).unwrap();
        assert_eq!(
            ast,
            ExprAst::Neg(Box::new(ExprAst::Binary(BinOp::Pow, v("x1"), c(2.0))))
        );
        let ast = parse("2^3^2", &[]).unwrap();
        assert_eq!(eval_real(&ast, &[]).unwrap(), 512.0);
        let ast = parse("8/2/2 - 1 - 1", &[]).unwrap();
        assert_eq!(eval_real(&ast, &[]).unwrap(), 0.0);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        assert_eq!(
            parse("1 + + 2", &[]).unwrap_err(),
            Error::Syntax {
                offset: 4,
                message: "unexpected `+`".into()
            }
        );
        assert!(matches!(parse("(1 + 2", &[]), Err(Error::Syntax { offset: 6, .. })));
        assert!(matches!(parse("1 2", &[]), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse("", &[]), Err(Error::Syntax { offset: 0, .. })));
        assert!(matches!(parse("sqrt 2", &[]), Err(Error::Syntax { .. })));
        assert!(matches!(parse("1e999", &[]), Err(Error::Syntax { .. })));
        assert_eq!(parse("y", &["x1"]).unwrap_err(), Error::UnknownIdentifier("y".into()));
    }

    #[test]
    fn real_evaluation() {
        let e = Expr::parse("x1*x1+1", &["x1"]).unwrap();
        assert_eq!(e.eval_real(&[("x1", 3.0)]).unwrap(), 10.0);
        let e = Expr::parse("1/x1", &["x1"]).unwrap();
        assert!(matches!(e.eval_real(&[("x1", 0.0)]), Err(Error::Domain(_))));
        assert_eq!(e.eval_real(&[]).unwrap_err(), Error::UnboundVariable("x1".into()));
        let e = Expr::parse("(-8)^(1/3)", &[]).unwrap();
        assert!(matches!(e.eval_real(&[]), Err(Error::Domain(_))));
    }

    #[test]
    fn jet_evaluation() {
        let e = Expr::parse("sqrt(x1)", &["x1"]).unwrap();
        let x = JetScalar::variable(0, 4.0, 1, 2).unwrap();
        let j = e.eval_jet(&[("x1", x.clone())], &x).unwrap();
        assert_eq!(j.coeffs(), &[2.0, 0.25, -1.0 / 64.0]);
        let e = Expr::parse("x1^2.5", &["x1"]).unwrap();
        let j = e.eval_jet(&[("x1", x.clone())], &x).unwrap();
        assert!((j.value() - 32.0).abs() < 1e-12);
        assert!((j.coeffs()[1] - 2.5 * 8.0).abs() < 1e-12);
    }

    #[test]
    fn canonical_print_round_trips() {
        for src in ["2/x2^2", "-x1^2 + 3*sin(x1)", "exp(-(x1-1)^2)/2", "1.5e-3*x1 - -2"] {
            let a = parse(src, &["x1", "x2"]).unwrap();
            let b = parse(&a.to_string(), &["x1", "x2"]).unwrap();
            assert_eq!(a, b, "{src}");
        }
    }
}
