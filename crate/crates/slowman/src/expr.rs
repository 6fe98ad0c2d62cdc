//! Parser, evaluator and canonical serializer for user-defined model files.
//!
//! The accepted text format is deliberately small:
//!
//! ```text
//! dim 2;
//! param a = 1;
//! dx = -a * x;
//! dy = -y;
//! ```
//!
//! A file is a `dim` header, any number of `param` declarations, and one
//! equation per state axis. Expressions use the usual precedence
//! `^` (right-associative) > unary `-` > `*`,`/` > `+`,`-`, with parentheses
//! and the functions `sqrt`, `abs`, `exp`, `ln`, `sin`, `cos`. The one
//! deliberate wrinkle: the exponent position accepts a leading minus, so
//! `x^-2` parses as `x^(-2)` while `-x^2` stays `-(x^2)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

/// Names with fixed meaning; parameters may not shadow them.
const RESERVED: &[&str] = &[
    "x", "y", "z", "dx", "dy", "dz", "dim", "param", "sqrt", "abs", "exp", "ln", "sin", "cos",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Abs,
    Exp,
    Ln,
    Sin,
    Cos,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Expression tree. State variables are stored by axis index so evaluation
/// needs no name lookups for them.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Param(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Runtime evaluation failure of a single expression.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain violation: {func}({arg})")]
    DomainViolation { func: &'static str, arg: f64 },
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
}

impl Expr {
    pub fn eval(&self, state: &[f64], params: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => state[*i],
            Expr::Param(name) => *params
                .get(name)
                .ok_or_else(|| EvalError::UnknownParam(name.clone()))?,
            Expr::Neg(e) => -e.eval(state, params)?,
            Expr::Bin(op, l, r) => {
                let a = l.eval(state, params)?;
                match op {
                    BinOp::Add => a + r.eval(state, params)?,
                    BinOp::Sub => a - r.eval(state, params)?,
                    BinOp::Mul => a * r.eval(state, params)?,
                    BinOp::Div => a / r.eval(state, params)?,
                    BinOp::Pow => {
                        // Small integer exponents take the exact-power path;
                        // x^3 etc. should not pick up powf rounding.
                        if let Expr::Const(p) = **r {
                            if p.fract() == 0.0 && p.abs() <= 32.0 {
                                return Ok(a.powi(p as i32));
                            }
                        }
                        a.powf(r.eval(state, params)?)
                    }
                }
            }
            Expr::Call(f, e) => {
                let v = e.eval(state, params)?;
                match f {
                    Func::Sqrt if v < 0.0 => {
                        return Err(EvalError::DomainViolation { func: "sqrt", arg: v })
                    }
                    Func::Sqrt => v.sqrt(),
                    Func::Abs => v.abs(),
                    Func::Exp => v.exp(),
                    Func::Ln if v <= 0.0 => {
                        return Err(EvalError::DomainViolation { func: "ln", arg: v })
                    }
                    Func::Ln => v.ln(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                }
            }
        })
    }

    /// Canonical text form. Composite operands are always parenthesized, so
    /// reparsing reproduces the tree exactly (and therefore evaluates
    /// bit-identically).
    fn write_to(&self, out: &mut String) {
        match self {
            Expr::Const(c) => {
                if *c < 0.0 {
                    let _ = write!(out, "({c})");
                } else {
                    let _ = write!(out, "{c}");
                }
            }
            Expr::Var(i) => out.push_str(["x", "y", "z"][*i]),
            Expr::Param(name) => out.push_str(name),
            Expr::Neg(e) => {
                out.push('-');
                e.write_wrapped(out);
            }
            Expr::Bin(op, l, r) => {
                l.write_wrapped(out);
                let _ = write!(out, " {} ", op.symbol());
                r.write_wrapped(out);
            }
            Expr::Call(f, e) => {
                out.push_str(f.name());
                out.push('(');
                e.write_to(out);
                out.push(')');
            }
        }
    }

    fn write_wrapped(&self, out: &mut String) {
        let atomic = matches!(
            self,
            Expr::Const(c) if *c >= 0.0
        ) || matches!(self, Expr::Var(_) | Expr::Param(_) | Expr::Call(..));
        if atomic {
            self.write_to(out);
        } else {
            out.push('(');
            self.write_to(out);
            out.push(')');
        }
    }
}

/// A parsed model file: dimension, parameters in declaration order, and one
/// component expression per axis (x, y[, z] order regardless of input order).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSource {
    pub dim: usize,
    pub params: Vec<(String, f64)>,
    pub components: Vec<Expr>,
}

impl ModelSource {
    /// Serializes back to the model-file format.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "dim {};\n", self.dim);
        for (name, value) in &self.params {
            if *value < 0.0 {
                let _ = write!(out, "param {name} = -{};\n", -value);
            } else {
                let _ = write!(out, "param {name} = {value};\n");
            }
        }
        for (axis, expr) in self.components.iter().enumerate() {
            let _ = write!(out, "d{} = ", ["x", "y", "z"][axis]);
            expr.write_to(&mut out);
            out.push_str(";\n");
        }
        out
    }
}

/// Syntax or validation failure, pointing at a byte offset in the source.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message} at offset {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

fn err<T>(offset: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { offset, message: message.into() })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    Eof,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer { src: src.as_bytes(), pos: 0 };
        let mut out = Vec::new();
        loop {
            lx.skip_ws();
            let start = lx.pos;
            let Some(&c) = lx.src.get(lx.pos) else {
                out.push((Tok::Eof, start));
                return Ok(out);
            };
            let tok = match c {
                b'0'..=b'9' | b'.' => lx.number(start)?,
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => lx.ident(),
                b'+' | b'-' | b'*' | b'/' | b'^' | b'(' | b')' | b';' | b'=' => {
                    lx.pos += 1;
                    Tok::Sym(c as char)
                }
                _ => return err(start, format!("unexpected character `{}`", c as char)),
            };
            out.push((tok, start));
        }
    }

    fn skip_ws(&mut self) {
        while let Some(&c) = self.src.get(self.pos) {
            match c {
                b' ' | b'\t' | b'\r' | b'\n' => self.pos += 1,
                b'#' => {
                    // Line comments, handy for annotated model files.
                    while let Some(&c) = self.src.get(self.pos) {
                        self.pos += 1;
                        if c == b'\n' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
    }

    fn number(&mut self, start: usize) -> Result<Tok, ParseError> {
        let mut saw_exp = false;
        while let Some(&c) = self.src.get(self.pos) {
            match c {
                b'0'..=b'9' | b'.' => self.pos += 1,
                b'e' | b'E' if !saw_exp => {
                    saw_exp = true;
                    self.pos += 1;
                    if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Tok::Num(v)),
            _ => err(start, format!("invalid number `{text}`")),
        }
    }

    fn ident(&mut self) -> Tok {
        let start = self.pos;
        while let Some(&c) = self.src.get(self.pos) {
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        Tok::Ident(std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string())
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    i: usize,
    dim: usize,
    param_names: Vec<String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn offset(&self) -> usize {
        // Point at the previous token when input ended early, so a trailing
        // operator gets the blame rather than the end of file.
        if matches!(self.toks[self.i].0, Tok::Eof) && self.i > 0 {
            self.toks[self.i - 1].1
        } else {
            self.toks[self.i].1
        }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            err(self.offset(), format!("expected `{c}`"))
        }
    }

    /// Statement terminator: `;`, or end of input after the last statement.
    fn expect_semi(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Sym(';') => {
                self.bump();
                Ok(())
            }
            Tok::Eof => Ok(()),
            _ => err(self.offset(), "expected `;`"),
        }
    }

    fn signed_number(&mut self) -> Result<f64, ParseError> {
        let neg = if *self.peek() == Tok::Sym('-') {
            self.bump();
            true
        } else {
            false
        };
        match self.bump() {
            Tok::Num(v) => Ok(if neg { -v } else { v }),
            _ => err(self.offset(), "expected a number"),
        }
    }

    // expr := term (("+"|"-") term)*
    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    // term := unary (("*"|"/") unary)*
    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    // unary := "-" unary | power
    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Sym('-') {
            self.bump();
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    // power := atom ("^" unary)?   -- right-associative, exponent may carry a sign
    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Sym('^') {
            self.bump();
            let exp = self.unary()?;
            Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::Sym('(') => {
                let inner = self.expr()?;
                self.expect_sym(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    self.expect_sym('(')?;
                    let arg = self.expr()?;
                    self.expect_sym(')')?;
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                if let Some(axis) = ["x", "y", "z"].iter().position(|v| **v == name) {
                    if axis >= self.dim {
                        return err(at, format!("variable `{name}` not available in dim {}", self.dim));
                    }
                    return Ok(Expr::Var(axis));
                }
                if self.param_names.iter().any(|p| *p == name) {
                    return Ok(Expr::Param(name));
                }
                err(at, format!("undeclared variable `{name}`"))
            }
            _ => err(at, "expected expression"),
        }
    }
}

/// Parses a complete model file.
pub fn parse_model_source(src: &str) -> Result<ModelSource, ParseError> {
    let toks = Lexer::tokens(src)?;
    let mut p = Parser { toks, i: 0, dim: 0, param_names: Vec::new() };

    // Header: dim ("2"|"3") ";"
    let at = p.offset();
    match p.bump() {
        Tok::Ident(kw) if kw == "dim" => {}
        _ => return err(at, "expected `dim` header"),
    }
    let at = p.offset();
    p.dim = match p.bump() {
        Tok::Num(v) if v == 2.0 => 2,
        Tok::Num(v) if v == 3.0 => 3,
        _ => return err(at, "dimension must be 2 or 3"),
    };
    p.expect_semi()?;

    // Parameters.
    let mut params: Vec<(String, f64)> = Vec::new();
    while matches!(p.peek(), Tok::Ident(kw) if kw == "param") {
        p.bump();
        let at = p.offset();
        let name = match p.bump() {
            Tok::Ident(n) => n,
            _ => return err(at, "expected parameter name"),
        };
        if RESERVED.contains(&name.as_str()) {
            return err(at, format!("parameter name `{name}` is reserved"));
        }
        if params.iter().any(|(n, _)| *n == name) {
            return err(at, format!("duplicate parameter `{name}`"));
        }
        p.expect_sym('=')?;
        let value = p.signed_number()?;
        p.expect_semi()?;
        params.push((name.clone(), value));
        p.param_names.push(name);
    }

    // Equations, one per axis, any order.
    let mut components: Vec<Option<Expr>> = vec![None; p.dim];
    loop {
        match p.peek().clone() {
            Tok::Eof => break,
            Tok::Ident(kw) if kw == "dx" || kw == "dy" || kw == "dz" => {
                let at = p.offset();
                p.bump();
                let axis = (kw.as_bytes()[1] - b'x') as usize;
                if axis >= p.dim {
                    return err(at, format!("equation `{kw}` not allowed in dim {}", p.dim));
                }
                if components[axis].is_some() {
                    return err(at, format!("duplicate equation `{kw}`"));
                }
                p.expect_sym('=')?;
                let e = p.expr()?;
                p.expect_semi()?;
                components[axis] = Some(e);
            }
            _ => return err(p.offset(), "expected an equation (`dx = ...;`)"),
        }
    }
    for (axis, c) in components.iter().enumerate() {
        if c.is_none() {
            return err(p.offset(), format!("missing equation for axis {}", ["x", "y", "z"][axis]));
        }
    }

    Ok(ModelSource {
        dim: p.dim,
        params,
        components: components.into_iter().map(Option::unwrap).collect(),
    })
}
