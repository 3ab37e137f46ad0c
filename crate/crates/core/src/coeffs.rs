//! Coefficient expressions and problem parameters.
//!
//! Reaction slopes and the exchange coefficient are given as closed-form
//! expressions in the cross-sectional coordinates. The grammar:
//!
//! ```text
//! expr   := term  (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?          (right-associative)
//! atom   := NUMBER | VAR | FUNC '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Variables: `y1`, `y2` (Cartesian), `r`, `theta` (polar, `theta` in
//! `(-pi, pi]` via `atan2(y2, y1)`). Functions: `exp`, `tanh`, `cos`, `sin`,
//! `sqrt`, `abs` (one argument), `min`, `max` (two arguments). Numbers accept
//! scientific notation. Constant subexpressions are folded at parse time
//! unless folding would fault.

use crate::{Error, Result};
use std::fmt;

/// Variables available to coefficient expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    Y1,
    Y2,
    R,
    Theta,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::Y1 => "y1",
            Var::Y2 => "y2",
            Var::R => "r",
            Var::Theta => "theta",
        }
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

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fn1 {
    Exp,
    Tanh,
    Cos,
    Sin,
    Sqrt,
    Abs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fn2 {
    Min,
    Max,
}

/// Parsed coefficient expression.
#[derive(Debug, Clone, PartialEq)]
pub enum CoeffExpr {
    Const(f64),
    Var(Var),
    Neg(Box<CoeffExpr>),
    Bin(BinOp, Box<CoeffExpr>, Box<CoeffExpr>),
    Call1(Fn1, Box<CoeffExpr>),
    Call2(Fn2, Box<CoeffExpr>, Box<CoeffExpr>),
}

impl CoeffExpr {
    /// Parses expression source text.
    pub fn parse(src: &str) -> Result<CoeffExpr> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0, src };
        let e = p.expr()?;
        if p.pos < p.tokens.len() {
            return Err(Error::Parse {
                offset: p.tokens[p.pos].offset,
                msg: format!("unexpected trailing token `{}`", p.tokens[p.pos].kind.describe()),
            });
        }
        Ok(e)
    }

    /// Evaluates at a cross-sectional point `y = (y1, y2)`.
    pub fn eval(&self, y: [f64; 2]) -> Result<f64> {
        match self {
            CoeffExpr::Const(c) => Ok(*c),
            CoeffExpr::Var(v) => Ok(match v {
                Var::Y1 => y[0],
                Var::Y2 => y[1],
                Var::R => y[0].hypot(y[1]),
                Var::Theta => y[1].atan2(y[0]),
            }),
            CoeffExpr::Neg(a) => Ok(-a.eval(y)?),
            CoeffExpr::Bin(op, a, b) => {
                let (x, z) = (a.eval(y)?, b.eval(y)?);
                match op {
                    BinOp::Add => Ok(x + z),
                    BinOp::Sub => Ok(x - z),
                    BinOp::Mul => Ok(x * z),
                    BinOp::Div => {
                        if z == 0.0 {
                            Err(Error::Eval {
                                expr: self.to_string(),
                                msg: "division by zero".into(),
                            })
                        } else {
                            Ok(x / z)
                        }
                    }
                    BinOp::Pow => Ok(x.powf(z)),
                }
            }
            CoeffExpr::Call1(f, a) => {
                let x = a.eval(y)?;
                match f {
                    Fn1::Exp => Ok(x.exp()),
                    Fn1::Tanh => Ok(x.tanh()),
                    Fn1::Cos => Ok(x.cos()),
                    Fn1::Sin => Ok(x.sin()),
                    Fn1::Sqrt => {
                        if x < 0.0 {
                            Err(Error::Eval {
                                expr: self.to_string(),
                                msg: format!("sqrt of negative value {x}"),
                            })
                        } else {
                            Ok(x.sqrt())
                        }
                    }
                    Fn1::Abs => Ok(x.abs()),
                }
            }
            CoeffExpr::Call2(f, a, b) => {
                let (x, z) = (a.eval(y)?, b.eval(y)?);
                Ok(match f {
                    Fn2::Min => x.min(z),
                    Fn2::Max => x.max(z),
                })
            }
        }
    }

    /// True when the expression contains no variables.
    pub fn is_const(&self) -> bool {
        matches!(self, CoeffExpr::Const(_))
    }

    // Precedence for rendering: atoms 5, `^` 4, unary minus and negative
    // constants 3, `*` `/` 2, `+` `-` 1.
    fn prec(&self) -> u8 {
        match self {
            CoeffExpr::Const(c) if *c < 0.0 => 3,
            CoeffExpr::Const(_) | CoeffExpr::Var(_) | CoeffExpr::Call1(..) | CoeffExpr::Call2(..) => 5,
            CoeffExpr::Bin(BinOp::Pow, ..) => 4,
            CoeffExpr::Neg(_) => 3,
            CoeffExpr::Bin(BinOp::Mul, ..) | CoeffExpr::Bin(BinOp::Div, ..) => 2,
            CoeffExpr::Bin(..) => 1,
        }
    }
}

impl fmt::Display for CoeffExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn paren(f: &mut fmt::Formatter<'_>, e: &CoeffExpr, need: bool) -> fmt::Result {
            if need {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            CoeffExpr::Const(c) => write!(f, "{c}"),
            CoeffExpr::Var(v) => write!(f, "{}", v.name()),
            CoeffExpr::Neg(a) => {
                write!(f, "-")?;
                paren(f, a, a.prec() < 3)
            }
            CoeffExpr::Bin(op, a, b) => {
                let (sym, p) = match op {
                    BinOp::Add => ("+", 1),
                    BinOp::Sub => ("-", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                    BinOp::Pow => ("^", 4),
                };
                if *op == BinOp::Pow {
                    // right-associative: parenthesize the left at equal precedence
                    paren(f, a, a.prec() <= p)?;
                    write!(f, "{sym}")?;
                    paren(f, b, b.prec() < p)
                } else {
                    paren(f, a, a.prec() < p)?;
                    write!(f, "{sym}")?;
                    paren(f, b, b.prec() <= p)
                }
            }
            CoeffExpr::Call1(c, a) => {
                let name = match c {
                    Fn1::Exp => "exp",
                    Fn1::Tanh => "tanh",
                    Fn1::Cos => "cos",
                    Fn1::Sin => "sin",
                    Fn1::Sqrt => "sqrt",
                    Fn1::Abs => "abs",
                };
                write!(f, "{name}({a})")
            }
            CoeffExpr::Call2(c, a, b) => {
                let name = match c {
                    Fn2::Min => "min",
                    Fn2::Max => "max",
                };
                write!(f, "{name}({a},{b})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

impl TokKind {
    fn describe(&self) -> String {
        match self {
            TokKind::Num(v) => format!("{v}"),
            TokKind::Ident(s) => s.clone(),
            TokKind::Plus => "+".into(),
            TokKind::Minus => "-".into(),
            TokKind::Star => "*".into(),
            TokKind::Slash => "/".into(),
            TokKind::Caret => "^".into(),
            TokKind::LParen => "(".into(),
            TokKind::RParen => ")".into(),
            TokKind::Comma => ",".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    offset: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let offset = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '+' => out.push(Token { kind: TokKind::Plus, offset }),
            '-' => out.push(Token { kind: TokKind::Minus, offset }),
            '*' => out.push(Token { kind: TokKind::Star, offset }),
            '/' => out.push(Token { kind: TokKind::Slash, offset }),
            '^' => out.push(Token { kind: TokKind::Caret, offset }),
            '(' => out.push(Token { kind: TokKind::LParen, offset }),
            ')' => out.push(Token { kind: TokKind::RParen, offset }),
            ',' => out.push(Token { kind: TokKind::Comma, offset }),
            '0'..='9' => {
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                if j < bytes.len() && bytes[j] == b'.' {
                    j += 1;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        j = k;
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                    }
                }
                let text = &src[i..j];
                let v: f64 = text.parse().map_err(|_| Error::Parse {
                    offset,
                    msg: format!("malformed number `{text}`"),
                })?;
                out.push(Token { kind: TokKind::Num(v), offset });
                i = j;
                continue;
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let mut j = i;
                while j < bytes.len()
                    && ((bytes[j] as char).is_ascii_alphanumeric() || bytes[j] == b'_')
                {
                    j += 1;
                }
                out.push(Token {
                    kind: TokKind::Ident(src[i..j].to_string()),
                    offset,
                });
                i = j;
                continue;
            }
            _ => {
                return Err(Error::Parse {
                    offset,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&TokKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn end_offset(&self) -> usize {
        self.src.len()
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        self.pos += 1;
        t
    }

    fn expect(&mut self, kind: TokKind, what: &str) -> Result<()> {
        match self.peek() {
            Some(k) if *k == kind => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => Err(Error::Parse {
                offset: self.tokens[self.pos].offset,
                msg: format!("expected {what}, found `{}`", self.tokens[self.pos].kind.describe()),
            }),
            None => Err(Error::Parse {
                offset: self.end_offset(),
                msg: format!("expected {what}, found end of input"),
            }),
        }
    }

    fn expr(&mut self) -> Result<CoeffExpr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(TokKind::Plus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = fold(CoeffExpr::Bin(BinOp::Add, Box::new(acc), Box::new(rhs)));
                }
                Some(TokKind::Minus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = fold(CoeffExpr::Bin(BinOp::Sub, Box::new(acc), Box::new(rhs)));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<CoeffExpr> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(TokKind::Star) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = fold(CoeffExpr::Bin(BinOp::Mul, Box::new(acc), Box::new(rhs)));
                }
                Some(TokKind::Slash) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = fold(CoeffExpr::Bin(BinOp::Div, Box::new(acc), Box::new(rhs)));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<CoeffExpr> {
        if let Some(TokKind::Minus) = self.peek() {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(fold(CoeffExpr::Neg(Box::new(inner))));
        }
        self.power()
    }

    fn power(&mut self) -> Result<CoeffExpr> {
        let base = self.atom()?;
        if let Some(TokKind::Caret) = self.peek() {
            self.pos += 1;
            // exponent takes a full unary so `2^-3` and `2^3^2` work
            let exp = self.unary()?;
            return Ok(fold(CoeffExpr::Bin(BinOp::Pow, Box::new(base), Box::new(exp))));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<CoeffExpr> {
        match self.peek() {
            Some(TokKind::Num(_)) => {
                let t = self.bump();
                if let TokKind::Num(v) = t.kind {
                    Ok(CoeffExpr::Const(v))
                } else {
                    unreachable!()
                }
            }
            Some(TokKind::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(TokKind::RParen, "`)`")?;
                Ok(e)
            }
            Some(TokKind::Ident(_)) => {
                let t = self.bump();
                let name = if let TokKind::Ident(s) = t.kind { s } else { unreachable!() };
                if let Some(TokKind::LParen) = self.peek() {
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while let Some(TokKind::Comma) = self.peek() {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(TokKind::RParen, "`)`")?;
                    self.call(&name, args, t.offset)
                } else {
                    match name.as_str() {
                        "y1" => Ok(CoeffExpr::Var(Var::Y1)),
                        "y2" => Ok(CoeffExpr::Var(Var::Y2)),
                        "r" => Ok(CoeffExpr::Var(Var::R)),
                        "theta" => Ok(CoeffExpr::Var(Var::Theta)),
                        _ => Err(Error::Parse {
                            offset: t.offset,
                            msg: format!("unknown identifier `{name}`"),
                        }),
                    }
                }
            }
            Some(k) => Err(Error::Parse {
                offset: self.tokens[self.pos].offset,
                msg: format!("expected value, found `{}`", k.describe()),
            }),
            None => Err(Error::Parse {
                offset: self.end_offset(),
                msg: "expected value, found end of input".into(),
            }),
        }
    }

    fn call(&self, name: &str, mut args: Vec<CoeffExpr>, offset: usize) -> Result<CoeffExpr> {
        let f1 = match name {
            "exp" => Some(Fn1::Exp),
            "tanh" => Some(Fn1::Tanh),
            "cos" => Some(Fn1::Cos),
            "sin" => Some(Fn1::Sin),
            "sqrt" => Some(Fn1::Sqrt),
            "abs" => Some(Fn1::Abs),
            _ => None,
        };
        if let Some(f) = f1 {
            if args.len() != 1 {
                return Err(Error::Parse {
                    offset,
                    msg: format!("function `{name}` takes 1 argument, got {}", args.len()),
                });
            }
            return Ok(fold(CoeffExpr::Call1(f, Box::new(args.pop().unwrap()))));
        }
        let f2 = match name {
            "min" => Some(Fn2::Min),
            "max" => Some(Fn2::Max),
            _ => None,
        };
        if let Some(f) = f2 {
            if args.len() != 2 {
                return Err(Error::Parse {
                    offset,
                    msg: format!("function `{name}` takes 2 arguments, got {}", args.len()),
                });
            }
            let b = args.pop().unwrap();
            let a = args.pop().unwrap();
            return Ok(fold(CoeffExpr::Call2(f, Box::new(a), Box::new(b))));
        }
        Err(Error::Parse {
            offset,
            msg: format!("unknown function `{name}`"),
        })
    }
}

// Folds a node whose children are all constants, unless evaluation faults
// (e.g. `1/0`), which is left for evaluation time.
fn fold(e: CoeffExpr) -> CoeffExpr {
    let all_const = match &e {
        CoeffExpr::Neg(a) => a.is_const(),
        CoeffExpr::Bin(_, a, b) => a.is_const() && b.is_const(),
        CoeffExpr::Call1(_, a) => a.is_const(),
        CoeffExpr::Call2(_, a, b) => a.is_const() && b.is_const(),
        _ => false,
    };
    if all_const {
        if let Ok(v) = e.eval([0.0, 0.0]) {
            return CoeffExpr::Const(v);
        }
    }
    e
}

/// Physical parameters of the coupled system.
///
/// `d_bulk` and `d_surf` are the bulk and surface diffusivities, `mu`/`nu`
/// the exchange rates (surface gains `mu u - nu v` flips sign into the bulk),
/// `eps` the regularization weight for extending the surface unknown into the
/// bulk. Coefficient expressions: `kappa` (exchange strength, nonnegative on
/// the boundary), `f_lin` (bulk reaction slope at zero), `g_lin` (surface
/// reaction slope at zero).
#[derive(Debug, Clone)]
pub struct ProblemParams {
    pub d_bulk: f64,
    pub d_surf: f64,
    pub mu: f64,
    pub nu: f64,
    pub eps: f64,
    pub kappa: CoeffExpr,
    pub f_lin: CoeffExpr,
    pub g_lin: CoeffExpr,
    /// Coefficients are evaluated at `y / domain_scale`; used by radius sweeps
    /// that dilate a reference cross-section without changing its profile.
    pub domain_scale: f64,
    /// Multiplies `kappa` pointwise; used by exchange-strength sweeps.
    pub kappa_scale: f64,
}

impl ProblemParams {
    pub const DEFAULT_EPS: f64 = 1e-6;

    pub fn new(
        d_bulk: f64,
        d_surf: f64,
        mu: f64,
        nu: f64,
        kappa: CoeffExpr,
        f_lin: CoeffExpr,
        g_lin: CoeffExpr,
    ) -> Result<Self> {
        let p = ProblemParams {
            d_bulk,
            d_surf,
            mu,
            nu,
            eps: Self::DEFAULT_EPS,
            kappa,
            f_lin,
            g_lin,
            domain_scale: 1.0,
            kappa_scale: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Convenience constructor for spatially constant coefficients.
    pub fn constant(
        d_bulk: f64,
        d_surf: f64,
        mu: f64,
        nu: f64,
        kappa: f64,
        f_slope: f64,
        g_slope: f64,
    ) -> Result<Self> {
        Self::new(
            d_bulk,
            d_surf,
            mu,
            nu,
            CoeffExpr::Const(kappa),
            CoeffExpr::Const(f_slope),
            CoeffExpr::Const(g_slope),
        )
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self> {
        self.eps = eps;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d_bulk", self.d_bulk),
            ("d_surf", self.d_surf),
            ("mu", self.mu),
            ("nu", self.nu),
            ("domain_scale", self.domain_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(Error::InvalidParams(format!("eps must be >= 0, got {}", self.eps)));
        }
        if !(self.kappa_scale >= 0.0) || !self.kappa_scale.is_finite() {
            return Err(Error::InvalidParams(format!(
                "kappa_scale must be >= 0, got {}",
                self.kappa_scale
            )));
        }
        Ok(())
    }

    fn scaled(&self, y: [f64; 2]) -> [f64; 2] {
        [y[0] / self.domain_scale, y[1] / self.domain_scale]
    }

    /// Bulk reaction slope at the point `y`.
    pub fn f_at(&self, y: [f64; 2]) -> Result<f64> {
        self.f_lin.eval(self.scaled(y))
    }

    /// Surface reaction slope at the point `y`.
    pub fn g_at(&self, y: [f64; 2]) -> Result<f64> {
        self.g_lin.eval(self.scaled(y))
    }

    /// Exchange coefficient at the point `y` (scaled by `kappa_scale`).
    pub fn kappa_at(&self, y: [f64; 2]) -> Result<f64> {
        Ok(self.kappa_scale * self.kappa.eval(self.scaled(y))?)
    }
}
