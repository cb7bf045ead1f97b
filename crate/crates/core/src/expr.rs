//! A small expression language for momentum-space closed forms.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary (("*" | "/") unary)*
//! unary  := "-" unary | power
//! power  := atom ("^" INT)?
//! atom   := INT | "i" | IDENT index* | IDENT "(" args ")" | "(" expr ")"
//! index  := "[" (INT | IDENT) "]"
//! ```
//!
//! Identifiers with indices are momenta (`p[mu]`) when their name is a bank
//! of the lowering context, and parameters otherwise (`a[0]` is `a0`,
//! `a[0][1]` is `a01`). Indices are integers or the metavariables `mu`, `nu`.
//! Built-ins: `eta(i, j)`, `epsilon(i, j, k)`, `dot(u, v)` for vector names,
//! and `exp`, `ln1p`, `sqrt1p`, `inv1p`, `expm1_over`, `ln1p_over`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::realization::levi_civita;
use crate::scalar::{GaussScalar, Rational};
use crate::series::{AnalyticFn, Series};
use crate::space::{Banks, Space};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Index {
    Fixed(usize),
    Meta(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Int(u64),
    I,
    Symbol(String, Vec<Index>),
    Call(String, Vec<Expr>),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(u64),
    Ident(String),
    Punct(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(n) => format!("'{n}'"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Punct(c) => format!("'{c}'"),
            Tok::End => "end of input".into(),
        }
    }
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
}

fn lex(src: &str) -> Result<Lexer> {
    let mut toks = Vec::new();
    let (mut line, mut col) = (1, 1);
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (l0, c0) = (line, col);
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
        } else if c.is_whitespace() {
            chars.next();
            col += 1;
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                s.push(d);
                chars.next();
                col += 1;
            }
            let n = s.parse().map_err(|_| Error::Syntax {
                line: l0,
                col: c0,
                message: format!("integer literal {s} is too large"),
                expected: vec![],
            })?;
            toks.push((Tok::Int(n), l0, c0));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&d) = chars.peek().filter(|d| d.is_ascii_alphanumeric() || **d == '_') {
                s.push(d);
                chars.next();
                col += 1;
            }
            toks.push((Tok::Ident(s), l0, c0));
        } else if "+-*/^()[],".contains(c) {
            chars.next();
            col += 1;
            toks.push((Tok::Punct(c), l0, c0));
        } else {
            return Err(Error::Syntax {
                line: l0,
                col: c0,
                message: format!("unexpected character '{c}'"),
                expected: vec![],
            });
        }
    }
    toks.push((Tok::End, line, col));
    Ok(Lexer { toks })
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

const OPERAND: &[&str] = &["integer", "identifier", "'('", "'-'"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> Error {
        let (tok, line, col) = &self.toks[self.pos];
        Error::Syntax {
            line: *line,
            col: *col,
            message: format!("unexpected {}, expected {}", tok.describe(), expected.join(" or ")),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Punct(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&[&format!("'{c}'")]))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            match self.bump() {
                Tok::Int(e) if e <= u32::MAX as u64 => Ok(Expr::Pow(Box::new(base), e as u32)),
                _ => {
                    self.pos -= 1;
                    Err(self.error(&["nonnegative integer exponent"]))
                }
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::Punct('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if name == "i" {
                    return Ok(Expr::I);
                }
                if self.eat('(') {
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    if !self.eat(')') {
                        return Err(self.error(&["','", "')'"]));
                    }
                    return Ok(Expr::Call(name, args));
                }
                let mut idx = Vec::new();
                while self.eat('[') {
                    idx.push(match self.bump() {
                        Tok::Int(n) => Index::Fixed(n as usize),
                        Tok::Ident(m) => Index::Meta(m),
                        _ => {
                            self.pos -= 1;
                            return Err(self.error(&["integer", "index name"]));
                        }
                    });
                    self.expect(']')?;
                }
                Ok(Expr::Symbol(name, idx))
            }
            _ => Err(self.error(OPERAND)),
        }
    }
}

pub fn parse(src: &str) -> Result<Expr> {
    let mut p = Parser {
        toks: lex(src)?.toks,
        pos: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}

impl Expr {
    fn prec(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn write_child(&self, f: &mut fmt::Formatter<'_>, child: &Expr, min: u8) -> fmt::Result {
        if child.prec() < min {
            write!(f, "({child})")
        } else {
            write!(f, "{child}")
        }
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Index::Fixed(n) => write!(f, "{n}"),
            Index::Meta(m) => write!(f, "{m}"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(n) => write!(f, "{n}"),
            Expr::I => write!(f, "i"),
            Expr::Symbol(name, idx) => {
                write!(f, "{name}")?;
                for i in idx {
                    write!(f, "[{i}]")?;
                }
                Ok(())
            }
            Expr::Call(name, args) => {
                write!(f, "{name}(")?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Expr::Neg(e) => {
                write!(f, "-")?;
                self.write_child(f, e, 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                self.write_child(f, a, 1)?;
                write!(f, " {} ", if matches!(self, Expr::Add(..)) { '+' } else { '-' })?;
                self.write_child(f, b, 2)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                self.write_child(f, a, 2)?;
                write!(f, "{}", if matches!(self, Expr::Mul(..)) { '*' } else { '/' })?;
                self.write_child(f, b, 3)
            }
            Expr::Pow(b, e) => {
                self.write_child(f, b, 5)?;
                write!(f, "^{e}")
            }
        }
    }
}

/// Where an expression is lowered: the space, the banks its momenta live
/// in, the truncation, and the values of `mu` and `nu`.
#[derive(Clone, Debug)]
pub struct Env {
    pub space: Arc<Space>,
    pub banks: Banks,
    pub order: u32,
    pub pcap: u32,
    pub mu: Option<usize>,
    pub nu: Option<usize>,
}

impl Env {
    pub fn new(space: &Arc<Space>, banks: &Banks, order: u32, pcap: u32) -> Env {
        Env {
            space: space.clone(),
            banks: banks.clone(),
            order,
            pcap,
            mu: None,
            nu: None,
        }
    }

    pub fn with_indices(&self, mu: usize, nu: usize) -> Env {
        Env {
            mu: Some(mu),
            nu: Some(nu),
            ..self.clone()
        }
    }

    fn zero(&self) -> Series {
        Series::zero(&self.space, &self.banks, self.order, self.pcap)
    }

    fn index(&self, i: &Index) -> Result<usize> {
        let v = match i {
            Index::Fixed(n) => *n,
            Index::Meta(m) => match m.as_str() {
                "mu" => self.mu.ok_or_else(|| Error::UnboundIndex(m.clone()))?,
                "nu" => self.nu.ok_or_else(|| Error::UnboundIndex(m.clone()))?,
                _ => return Err(Error::UnboundIndex(m.clone())),
            },
        };
        if v >= self.space.dim() {
            return Err(Error::UnknownSymbol(format!("index {v} out of range")));
        }
        Ok(v)
    }

    fn bank(&self, name: &str) -> Option<usize> {
        self.banks.list().iter().position(|b| b.name == name)
    }

    /// Component `mu` of a vector name: a momentum bank or a parameter stem.
    fn component(&self, name: &str, mu: usize) -> Result<Series> {
        if let Some(b) = self.bank(name) {
            return Ok(Series::var(&self.space, &self.banks, self.order, self.pcap, b, mu));
        }
        self.param(&format!("{name}{mu}"))
    }

    fn param(&self, name: &str) -> Result<Series> {
        let idx = self.space.param(name)?;
        Ok(Series::param(&self.space, &self.banks, self.order, self.pcap, idx))
    }

    fn int_arg(&self, e: &Expr) -> Result<usize> {
        match e {
            Expr::Int(n) => self.index(&Index::Fixed(*n as usize)),
            Expr::Symbol(m, idx) if idx.is_empty() => self.index(&Index::Meta(m.clone())),
            _ => Err(Error::Arity(format!("'{e}' is not an index"))),
        }
    }
}

/// Lowers `e` to a truncated series in `env`.
pub fn lower(e: &Expr, env: &Env) -> Result<Series> {
    Ok(match e {
        Expr::Int(n) => env.zero().constant_like(GaussScalar::real(Rational::from_int(*n as i64))),
        Expr::I => env.zero().constant_like(GaussScalar::i()),
        Expr::Symbol(name, idx) => {
            let idx: Vec<usize> = idx.iter().map(|i| env.index(i)).collect::<Result<_>>()?;
            match (env.bank(name), idx.as_slice()) {
                (Some(b), [mu]) => Series::var(&env.space, &env.banks, env.order, env.pcap, b, *mu),
                (Some(_), _) => return Err(Error::Arity(format!("momentum '{name}' takes one index"))),
                (None, _) => {
                    let full: String = std::iter::once(name.clone())
                        .chain(idx.iter().map(|i| i.to_string()))
                        .collect();
                    env.param(&full)?
                }
            }
        }
        Expr::Call(name, args) => lower_call(name, args, env)?,
        Expr::Neg(a) => -&lower(a, env)?,
        Expr::Add(a, b) => &lower(a, env)? + &lower(b, env)?,
        Expr::Sub(a, b) => &lower(a, env)? - &lower(b, env)?,
        Expr::Mul(a, b) => &lower(a, env)? * &lower(b, env)?,
        Expr::Div(a, b) => {
            let num = lower(a, env)?;
            let den = lower(b, env)?;
            &num * &reciprocal(&den)?
        }
        Expr::Pow(b, k) => lower(b, env)?.pow(*k),
    })
}

/// `1/s` for `s = c (1 + u)` with `c` a nonzero constant.
fn reciprocal(s: &Series) -> Result<Series> {
    let c = s.constant_term();
    let inv = c.recip().ok_or(Error::Division)?;
    let u = &s.scale(&inv) - &s.one_like();
    if u.is_zero() {
        return Ok(s.constant_like(inv));
    }
    // terms of degree zero without parameters would never terminate
    u.expand_fn(AnalyticFn::Inv1p).map(|r| r.scale(&inv)).map_err(|_| Error::Division)
}

fn lower_call(name: &str, args: &[Expr], env: &Env) -> Result<Series> {
    let arity = |k: usize| -> Result<()> {
        if args.len() == k {
            Ok(())
        } else {
            Err(Error::Arity(format!("{name} takes {k} argument(s), got {}", args.len())))
        }
    };
    let constant = |v: i64| env.zero().constant_like(GaussScalar::from_int(v));
    match name {
        "eta" => {
            arity(2)?;
            let (a, b) = (env.int_arg(&args[0])?, env.int_arg(&args[1])?);
            Ok(constant(env.space.metric().entry(a, b)))
        }
        "epsilon" => {
            arity(3)?;
            let (a, b, c) = (env.int_arg(&args[0])?, env.int_arg(&args[1])?, env.int_arg(&args[2])?);
            Ok(constant(levi_civita(a, b, c)))
        }
        "dot" => {
            arity(2)?;
            let vec = |e: &Expr| match e {
                Expr::Symbol(v, idx) if idx.is_empty() => Ok(v.clone()),
                _ => Err(Error::Arity(format!("dot expects vector names, got '{e}'"))),
            };
            let (u, v) = (vec(&args[0])?, vec(&args[1])?);
            let mut out = env.zero();
            for mu in 0..env.space.dim() {
                let t = &env.component(&u, mu)? * &env.component(&v, mu)?;
                out = &out + &t.scale(&GaussScalar::from_int(env.space.metric().diag(mu)));
            }
            Ok(out)
        }
        _ => {
            let f = AnalyticFn::from_name(name).ok_or_else(|| Error::UnknownSymbol(name.to_string()))?;
            arity(1)?;
            lower(&args[0], env)?.expand_fn(f)
        }
    }
}

/// Parses and lowers in one step.
pub fn eval(src: &str, env: &Env) -> Result<Series> {
    lower(&parse(src)?, env)
}
