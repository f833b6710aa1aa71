//! Small arithmetic expression language shared by coefficient and operator
//! fields of scenario files.
//!
//! Precedence, loosest first: `+ -`, `* /`, unary `-`, `^`. Binary operators
//! associate to the left except `^`. A number followed directly by `j` is an
//! imaginary literal (`2j`), as in the Python listings scenarios are usually
//! transcribed from.

use std::collections::BTreeMap;
use std::fmt;

use qdyn::C64;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
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

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

const PREC_UNARY: u8 = 3;
const PREC_ATOM: u8 = 5;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Imaginary literal, the value is the coefficient of `i`.
    Imag(f64),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("syntax error at offset {offset}: {message}")]
pub struct ParseError {
    /// Byte offset into the source.
    pub offset: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("unknown identifier `{0}`")]
    UnknownName(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("`{name}` takes {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("`t` is not available in this field")]
    NoTime,
    #[error("{0}")]
    Value(String),
}

impl Expr {
    /// Every identifier that is read as a variable, in first-use order.
    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Var(name) = e {
                if !out.contains(&name.as_str()) {
                    out.push(name.as_str());
                }
            }
        });
        out
    }

    /// Names of every function called, in first-use order.
    pub fn functions(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Call(name, _) = e {
                if !out.contains(&name.as_str()) {
                    out.push(name.as_str());
                }
            }
        });
        out
    }

    pub fn mentions(&self, name: &str) -> bool {
        self.variables().contains(&name)
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Neg(x) => x.visit(f),
            Expr::Bin(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.visit(f)),
            Expr::Num(_) | Expr::Imag(_) | Expr::Var(_) => {}
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Num(v) if v.is_sign_negative() => PREC_UNARY,
            Expr::Neg(_) => PREC_UNARY,
            Expr::Bin(op, ..) => op.precedence(),
            _ => PREC_ATOM,
        }
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    let a = v.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        write!(f, "{v:e}")
    } else {
        write!(f, "{v}")
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if e.precedence() < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Prints with the fewest parentheses that parse back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write_number(f, *v),
            Expr::Imag(v) => {
                write_number(f, *v)?;
                f.write_str("j")
            }
            Expr::Var(name) => f.write_str(name),
            Expr::Neg(x) => {
                f.write_str("-")?;
                write_child(f, x, PREC_UNARY)
            }
            Expr::Bin(BinOp::Pow, a, b) => {
                write_child(f, a, PREC_ATOM)?;
                f.write_str("^")?;
                write_child(f, b, PREC_UNARY)
            }
            Expr::Bin(op, a, b) => {
                let p = op.precedence();
                write_child(f, a, p)?;
                write!(f, " {} ", op.symbol())?;
                write_child(f, b, p + 1)
            }
            Expr::Call(name, args) => {
                write!(f, "{name}(")?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) | Tok::Imag(v) => format!("number {v}"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Op(c) => format!("`{c}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::End => "end of input".into(),
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
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
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| ParseError {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                })?;
                if i < bytes.len()
                    && bytes[i] == b'j'
                    && !bytes.get(i + 1).is_some_and(|b| is_ident(*b))
                {
                    i += 1;
                    out.push((start, Tok::Imag(v)));
                } else {
                    out.push((start, Tok::Num(v)));
                }
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && is_ident(bytes[i]) {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
                continue;
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => out.push((start, Tok::Op(c as char))),
            b'(' => out.push((start, Tok::LParen)),
            b')' => out.push((start, Tok::RParen)),
            b',' => out.push((start, Tok::Comma)),
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        }
        i += 1;
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

fn is_ident(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, what: &str) -> Result<T, ParseError> {
        Err(ParseError {
            offset: self.offset(),
            message: format!("expected {what}, found {}", describe(self.peek())),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.fail(what)
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            // right operand may itself be signed or a power: 2^-x, 2^3^2
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Imag(v) => {
                self.bump();
                Ok(Expr::Imag(v))
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() != Tok::LParen {
                    return Ok(Expr::Var(name));
                }
                self.bump();
                let mut args = Vec::new();
                if *self.peek() != Tok::RParen {
                    loop {
                        args.push(self.sum()?);
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen, "`,` or `)`")?;
                Ok(Expr::Call(name, args))
            }
            Tok::LParen => {
                self.bump();
                let e = self.sum()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => self.fail("a number, name or `(`"),
        }
    }
}

pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let e = p.sum()?;
    if *p.peek() != Tok::End {
        return p.fail("an operator or end of input");
    }
    Ok(e)
}

/// Names an expression may read besides scenario parameters.
pub const RESERVED: [&str; 2] = ["t", "pi"];

/// Parameters plus, for time-dependent fields, the current time.
#[derive(Clone, Copy, Debug)]
pub struct Scope<'a> {
    pub params: &'a BTreeMap<String, f64>,
    pub t: Option<f64>,
}

impl<'a> Scope<'a> {
    pub fn new(params: &'a BTreeMap<String, f64>) -> Self {
        Scope { params, t: None }
    }

    pub fn at(self, t: f64) -> Self {
        Scope { t: Some(t), ..self }
    }

    pub fn lookup(&self, name: &str) -> Result<f64, EvalError> {
        if let Some(v) = self.params.get(name) {
            return Ok(*v);
        }
        match name {
            "t" => self.t.ok_or(EvalError::NoTime),
            "pi" => Ok(std::f64::consts::PI),
            _ => Err(EvalError::UnknownName(name.to_string())),
        }
    }
}

pub const SCALAR_FUNCTIONS: [&str; 4] = ["sin", "cos", "exp", "sqrt"];

pub fn scalar_function(name: &str, args: &[C64]) -> Result<C64, EvalError> {
    let f: fn(C64) -> C64 = match name {
        "sin" => |z| z.sin(),
        "cos" => |z| z.cos(),
        "exp" => |z| z.exp(),
        "sqrt" => |z| {
            // keep real arguments on the real axis
            if z.im == 0.0 && z.re >= 0.0 {
                C64::new(z.re.sqrt(), 0.0)
            } else {
                z.sqrt()
            }
        },
        _ => return Err(EvalError::UnknownFunction(name.to_string())),
    };
    if args.len() != 1 {
        return Err(EvalError::Arity {
            name: name.to_string(),
            expected: 1,
            got: args.len(),
        });
    }
    Ok(f(args[0]))
}

pub fn power(a: C64, b: C64) -> C64 {
    if a.im == 0.0 && b.im == 0.0 && (a.re >= 0.0 || b.re.fract() == 0.0) {
        C64::new(a.re.powf(b.re), 0.0)
    } else {
        a.powc(b)
    }
}

impl Expr {
    /// Complex value of a scalar expression.
    pub fn eval(&self, scope: &Scope<'_>) -> Result<C64, EvalError> {
        Ok(match self {
            Expr::Num(v) => C64::new(*v, 0.0),
            Expr::Imag(v) => C64::new(0.0, *v),
            Expr::Var(name) => C64::new(scope.lookup(name)?, 0.0),
            Expr::Neg(x) => -x.eval(scope)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(scope)?, b.eval(scope)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => power(a, b),
                }
            }
            Expr::Call(name, args) => {
                let vals = args
                    .iter()
                    .map(|a| a.eval(scope))
                    .collect::<Result<Vec<_>, _>>()?;
                scalar_function(name, &vals)?
            }
        })
    }

    /// Real value, rejecting results with an imaginary part.
    pub fn eval_real(&self, scope: &Scope<'_>) -> Result<f64, EvalError> {
        let v = self.eval(scope)?;
        if v.im != 0.0 {
            return Err(EvalError::Value(format!(
                "`{self}` is complex ({v}), a real number is required"
            )));
        }
        Ok(v.re)
    }
}
