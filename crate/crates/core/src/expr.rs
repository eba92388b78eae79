//! Expression language for metric coefficients and field components.
//!
//! Supported surface: numeric literals, the predefined constant `pi`,
//! variables drawn from a declared coordinate list, unary minus, the binary
//! operators `+ - * / ^` and the functions `sin cos exp log sqrt tanh`.
//! Precedence is `^` over unary minus over `* /` over `+ -`; everything is
//! left-associative except `^`, which is right-associative.
//!
//! Evaluation is generic over [`Scalar`], so the same tree yields plain values
//! or exact derivatives (dual mode) without re-parsing.

use std::fmt::Write as _;

use thiserror::Error;

use crate::dual::{Dual, Scalar};

/// Reserved coordinate identifiers accepted in declared coordinate lists.
pub const RESERVED_COORDS: [&str; 11] = [
    "u", "v", "x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8", "x9",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Tanh,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }
}

/// Byte range of a node in the source text.
pub type Span = (usize, usize);

#[derive(Debug, Clone)]
pub enum ExprKind {
    Const(f64),
    /// Index into the declared coordinate list.
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Func(Func, Box<Expr>),
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

/// Value together with exact partial derivatives, one per chart coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub partials: Vec<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: expected {expected}")]
    Syntax { offset: usize, expected: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("division by zero at bytes {}..{}", .span.0, .span.1)]
    DivisionByZero { span: Span },
    #[error("log of non-positive value at bytes {}..{}", .span.0, .span.1)]
    LogDomain { span: Span },
    #[error("sqrt of negative value at bytes {}..{}", .span.0, .span.1)]
    SqrtDomain { span: Span },
    #[error("power with non-positive base at bytes {}..{}", .span.0, .span.1)]
    PowDomain { span: Span },
    #[error("expression references variable {index} but only {supplied} bindings given")]
    MissingBinding { index: usize, supplied: usize },
}

#[derive(Debug, PartialEq)]
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

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next(&mut self) -> Result<Option<(Tok, usize)>, ParseError> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                let mut end = self.pos;
                while end < self.src.len() && (self.src[end].is_ascii_digit() || self.src[end] == b'.') {
                    end += 1;
                }
                if end < self.src.len() && (self.src[end] == b'e' || self.src[end] == b'E') {
                    let mut e = end + 1;
                    if e < self.src.len() && (self.src[e] == b'+' || self.src[e] == b'-') {
                        e += 1;
                    }
                    if e < self.src.len() && self.src[e].is_ascii_digit() {
                        while e < self.src.len() && self.src[e].is_ascii_digit() {
                            e += 1;
                        }
                        end = e;
                    }
                }
                let text = std::str::from_utf8(&self.src[start..end]).unwrap();
                let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    expected: "a numeric literal".into(),
                })?;
                self.pos = end;
                return Ok(Some((Tok::Num(value), start)));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                let name = std::str::from_utf8(&self.src[start..end]).unwrap().to_owned();
                self.pos = end;
                return Ok(Some((Tok::Ident(name), start)));
            }
            _ => {
                return Err(ParseError::Syntax {
                    offset: start,
                    expected: "a term or operator".into(),
                })
            }
        };
        self.pos += 1;
        Ok(Some((tok, start)))
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    coords: &'a [String],
    src_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&(Tok, usize)> {
        self.toks.get(self.idx)
    }

    fn bump(&mut self) -> Option<&(Tok, usize)> {
        let t = self.toks.get(self.idx);
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn here(&self) -> usize {
        self.peek().map(|t| t.1).unwrap_or(self.src_len)
    }

    fn expect_rparen(&mut self) -> Result<usize, ParseError> {
        match self.bump() {
            Some(&(Tok::RParen, at)) => Ok(at),
            other => Err(ParseError::Syntax {
                offset: other.map(|t| t.1).unwrap_or(self.src_len),
                expected: "`)`".into(),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some((tok, _)) = self.peek() {
            let op = match tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.idx += 1;
            let rhs = self.term()?;
            let span = (lhs.span.0, rhs.span.1);
            lhs = Expr {
                kind: ExprKind::Bin(op, Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some((tok, _)) = self.peek() {
            let op = match tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.idx += 1;
            let rhs = self.unary()?;
            let span = (lhs.span.0, rhs.span.1);
            lhs = Expr {
                kind: ExprKind::Bin(op, Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(&(Tok::Minus, at)) = self.peek() {
            self.idx += 1;
            let inner = self.unary()?;
            let span = (at, inner.span.1);
            // Fold a negated literal so `-3` is a single constant node.
            if let ExprKind::Const(c) = inner.kind {
                return Ok(Expr {
                    kind: ExprKind::Const(-c),
                    span,
                });
            }
            return Ok(Expr {
                kind: ExprKind::Neg(Box::new(inner)),
                span,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Some(&(Tok::Caret, _)) = self.peek() {
            self.idx += 1;
            let exponent = self.unary()?;
            let span = (base.span.0, exponent.span.1);
            return Ok(Expr {
                kind: ExprKind::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)),
                span,
            });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.here();
        match self.bump() {
            Some(&(Tok::Num(value), start)) => Ok(Expr {
                kind: ExprKind::Const(value),
                span: (start, self.here_prev_end(start)),
            }),
            Some(&(Tok::LParen, start)) => {
                let inner = self.expr()?;
                let end = self.expect_rparen()?;
                Ok(Expr {
                    kind: inner.kind,
                    span: (start, end + 1),
                })
            }
            Some(&(Tok::Ident(ref name), start)) => {
                let name = name.clone();
                if let Some(&(Tok::LParen, _)) = self.peek() {
                    let func = Func::from_name(&name).ok_or_else(|| ParseError::UnknownIdentifier {
                        name: name.clone(),
                        offset: start,
                    })?;
                    self.idx += 1;
                    let arg = self.expr()?;
                    let end = self.expect_rparen()?;
                    return Ok(Expr {
                        kind: ExprKind::Func(func, Box::new(arg)),
                        span: (start, end + 1),
                    });
                }
                if name == "pi" {
                    return Ok(Expr {
                        kind: ExprKind::Const(std::f64::consts::PI),
                        span: (start, start + 2),
                    });
                }
                match self.coords.iter().position(|c| c == &name) {
                    Some(i) => Ok(Expr {
                        kind: ExprKind::Var(i),
                        span: (start, start + name.len()),
                    }),
                    None => Err(ParseError::UnknownIdentifier { name, offset: start }),
                }
            }
            _ => Err(ParseError::Syntax {
                offset: at,
                expected: "a number, identifier or `(`".into(),
            }),
        }
    }

    fn here_prev_end(&self, start: usize) -> usize {
        // Token end offsets are not tracked individually; the next token's
        // start (or end of input) bounds the literal closely enough for
        // diagnostics.
        self.peek().map(|t| t.1).unwrap_or(self.src_len).max(start + 1)
    }
}

/// Parse `text` against a declared coordinate list.
pub fn parse_expr(text: &str, coords: &[String]) -> Result<Expr, ParseError> {
    let mut lexer = Lexer::new(text);
    let mut toks = Vec::new();
    while let Some(t) = lexer.next()? {
        toks.push(t);
    }
    let mut parser = Parser {
        toks,
        idx: 0,
        coords,
        src_len: text.len(),
    };
    let expr = parser.expr()?;
    if let Some(&(_, at)) = parser.peek() {
        return Err(ParseError::Syntax {
            offset: at,
            expected: "end of input or an operator".into(),
        });
    }
    Ok(expr)
}

impl Expr {
    /// Generic evaluation; `vars` must cover every variable index in the tree.
    pub fn eval<S: Scalar>(&self, vars: &[S]) -> Result<S, EvalError> {
        match &self.kind {
            ExprKind::Const(c) => Ok(S::from_f64(*c)),
            ExprKind::Var(i) => vars.get(*i).copied().ok_or(EvalError::MissingBinding {
                index: *i,
                supplied: vars.len(),
            }),
            ExprKind::Neg(e) => Ok(-e.eval(vars)?),
            ExprKind::Bin(op, a, b) => {
                let x = a.eval(vars)?;
                match op {
                    BinOp::Add => Ok(x + b.eval(vars)?),
                    BinOp::Sub => Ok(x - b.eval(vars)?),
                    BinOp::Mul => Ok(x * b.eval(vars)?),
                    BinOp::Div => {
                        let y = b.eval(vars)?;
                        if y.re() == 0.0 {
                            return Err(EvalError::DivisionByZero { span: self.span });
                        }
                        Ok(x / y)
                    }
                    BinOp::Pow => {
                        // A variable-free exponent is evaluated exactly; an
                        // integer value takes the powi path, which is exact
                        // and accepts negative bases.
                        if b.is_constant() {
                            let c = b.eval_f64(&[])?;
                            if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 {
                                if c < 0.0 && x.re() == 0.0 {
                                    return Err(EvalError::DivisionByZero { span: self.span });
                                }
                                return Ok(x.powi(c as i32));
                            }
                            if x.re() <= 0.0 {
                                return Err(EvalError::PowDomain { span: self.span });
                            }
                            return Ok((S::from_f64(c) * x.ln()).exp());
                        }
                        let y = b.eval(vars)?;
                        if x.re() <= 0.0 {
                            return Err(EvalError::PowDomain { span: self.span });
                        }
                        Ok((y * x.ln()).exp())
                    }
                }
            }
            ExprKind::Func(f, a) => {
                let x = a.eval(vars)?;
                match f {
                    Func::Sin => Ok(x.sin()),
                    Func::Cos => Ok(x.cos()),
                    Func::Exp => Ok(x.exp()),
                    Func::Log => {
                        if x.re() <= 0.0 {
                            return Err(EvalError::LogDomain { span: self.span });
                        }
                        Ok(x.ln())
                    }
                    Func::Sqrt => {
                        if x.re() < 0.0 {
                            return Err(EvalError::SqrtDomain { span: self.span });
                        }
                        Ok(x.sqrt())
                    }
                    Func::Tanh => Ok(x.tanh()),
                }
            }
        }
    }

    pub fn eval_f64(&self, vars: &[f64]) -> Result<f64, EvalError> {
        self.eval(vars)
    }

    /// Value plus exact partials in all coordinate directions.
    pub fn eval_jet(&self, vars: &[f64]) -> Result<Jet, EvalError> {
        let seeded = crate::dual::seed(vars);
        let d: Dual<f64> = self.eval(&seeded)?;
        Ok(Jet {
            value: d.re,
            partials: (0..vars.len()).map(|i| d.partial(i)).collect(),
        })
    }

    /// Dual mode restricted to a direction set: the returned partials are in
    /// the order of `dirs`, seeding only those coordinates.
    pub fn eval_jet_dirs(&self, vars: &[f64], dirs: &[usize]) -> Result<Jet, EvalError> {
        let n = dirs.len();
        let seeded: Vec<Dual<f64>> = vars
            .iter()
            .enumerate()
            .map(|(i, &v)| match dirs.iter().position(|&d| d == i) {
                Some(slot) => Dual::variable(v, slot, n),
                None => Dual::constant(v),
            })
            .collect();
        let d: Dual<f64> = self.eval(&seeded)?;
        Ok(Jet {
            value: d.re,
            partials: (0..n).map(|i| d.partial(i)).collect(),
        })
    }

    /// Whether the subtree references no variables.
    pub fn is_constant(&self) -> bool {
        match &self.kind {
            ExprKind::Const(_) => true,
            ExprKind::Var(_) => false,
            ExprKind::Neg(e) => e.is_constant(),
            ExprKind::Bin(_, a, b) => a.is_constant() && b.is_constant(),
            ExprKind::Func(_, a) => a.is_constant(),
        }
    }

    /// Structural equality ignoring source spans.
    pub fn structural_eq(&self, other: &Expr) -> bool {
        match (&self.kind, &other.kind) {
            (ExprKind::Const(a), ExprKind::Const(b)) => a == b || (a.is_nan() && b.is_nan()),
            (ExprKind::Var(a), ExprKind::Var(b)) => a == b,
            (ExprKind::Neg(a), ExprKind::Neg(b)) => a.structural_eq(b),
            (ExprKind::Bin(op1, a1, b1), ExprKind::Bin(op2, a2, b2)) => {
                op1 == op2 && a1.structural_eq(a2) && b1.structural_eq(b2)
            }
            (ExprKind::Func(f1, a1), ExprKind::Func(f2, a2)) => f1 == f2 && a1.structural_eq(a2),
            _ => false,
        }
    }

    fn precedence(&self) -> u8 {
        match &self.kind {
            ExprKind::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            ExprKind::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            ExprKind::Neg(_) => 3,
            ExprKind::Bin(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }

    /// Render with minimal parentheses; reparsing yields a structurally
    /// identical tree.
    pub fn pretty(&self, coords: &[String]) -> String {
        let mut out = String::new();
        self.write_pretty(&mut out, coords);
        out
    }

    fn write_child(&self, out: &mut String, coords: &[String], child: &Expr, need_above: u8) {
        if child.precedence() < need_above {
            out.push('(');
            child.write_pretty(out, coords);
            out.push(')');
        } else {
            child.write_pretty(out, coords);
        }
    }

    fn write_pretty(&self, out: &mut String, coords: &[String]) {
        match &self.kind {
            ExprKind::Const(c) => {
                if *c < 0.0 || c.is_nan() {
                    // Keep negative literals reparseable as a single constant.
                    let _ = write!(out, "({c})");
                } else {
                    let _ = write!(out, "{c}");
                }
            }
            ExprKind::Var(i) => out.push_str(&coords[*i]),
            ExprKind::Neg(e) => {
                out.push('-');
                self.write_child(out, coords, e, 3);
            }
            ExprKind::Bin(op, a, b) => {
                let (sym, prec) = match op {
                    BinOp::Add => ("+", 1),
                    BinOp::Sub => ("-", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                    BinOp::Pow => ("^", 4),
                };
                match op {
                    BinOp::Pow => {
                        // Right-associative; base must bind tighter than `^`.
                        self.write_child(out, coords, a, 5);
                        out.push_str(sym);
                        self.write_child(out, coords, b, 3);
                    }
                    _ => {
                        // Left-associative: a right child of equal precedence
                        // needs parentheses to reparse with the same shape.
                        self.write_child(out, coords, a, prec);
                        out.push_str(sym);
                        self.write_child(out, coords, b, prec + 1);
                    }
                }
            }
            ExprKind::Func(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.write_pretty(out, coords);
                out.push(')');
            }
        }
    }
}

pub fn coord_names(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords3() -> Vec<String> {
        coord_names(&["u", "v", "x1"])
    }

    #[test]
    fn parses_and_evaluates_linear_combination() {
        let e = parse_expr("2*u + sin(x1)", &coords3()).unwrap();
        let v = e.eval_f64(&[0.5, 0.0, 0.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dual_mode_polynomial_derivative() {
        let e = parse_expr("x1^2", &coords3()).unwrap();
        let jet = e.eval_jet(&[0.0, 0.0, 3.0]).unwrap();
        assert_eq!(jet.value, 9.0);
        assert_eq!(jet.partials[2], 6.0);
    }

    #[test]
    fn malformed_input_reports_offset() {
        match parse_expr("2*+u", &coords3()) {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_is_named() {
        match parse_expr("2*w", &coords3()) {
            Err(ParseError::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "w");
                assert_eq!(offset, 2);
            }
            other => panic!("expected unknown identifier, got {other:?}"),
        }
    }

    #[test]
    fn reciprocal_radius_partials() {
        let coords = coord_names(&["x1", "x2"]);
        let e = parse_expr("1/(x1*x1 + x2*x2)", &coords).unwrap();
        let jet = e.eval_jet(&[1.0, 0.0]).unwrap();
        assert_eq!(jet.value, 1.0);
        assert_eq!(jet.partials[0], -2.0);
        match e.eval_f64(&[0.0, 0.0]) {
            Err(EvalError::DivisionByZero { .. }) => {}
            other => panic!("expected division by zero, got {other:?}"),
        }
    }

    #[test]
    fn jet_with_direction_subset() {
        let coords = coord_names(&["u", "v", "x1"]);
        let e = parse_expr("u*x1 + v^2", &coords).unwrap();
        let jet = e.eval_jet_dirs(&[2.0, 3.0, 5.0], &[2, 0]).unwrap();
        assert_eq!(jet.value, 19.0);
        assert_eq!(jet.partials, vec![2.0, 5.0]);
    }

    #[test]
    fn constant_jet_has_zero_partials() {
        let e = parse_expr("7", &coords3()).unwrap();
        let jet = e.eval_jet(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(jet.value, 7.0);
        assert!(jet.partials.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn pi_is_predefined() {
        let e = parse_expr("sin(2*pi*u)", &coords3()).unwrap();
        let v = e.eval_f64(&[0.25, 0.0, 0.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pow_right_associative_and_unary_binding() {
        let coords = coord_names(&["x1"]);
        let e = parse_expr("2^3^2", &coords).unwrap();
        assert_eq!(e.eval_f64(&[0.0]).unwrap(), 512.0);
        let e = parse_expr("-x1^2", &coords).unwrap();
        assert_eq!(e.eval_f64(&[3.0]).unwrap(), -9.0);
        let e = parse_expr("x1^-2", &coords).unwrap();
        assert_eq!(e.eval_f64(&[2.0]).unwrap(), 0.25);
    }

    #[test]
    fn integer_pow_handles_negative_base() {
        let coords = coord_names(&["x1"]);
        let e = parse_expr("x1^3", &coords).unwrap();
        assert_eq!(e.eval_f64(&[-2.0]).unwrap(), -8.0);
    }

    #[test]
    fn log_domain_error() {
        let coords = coord_names(&["x1"]);
        let e = parse_expr("log(x1)", &coords).unwrap();
        assert!(matches!(
            e.eval_f64(&[-1.0]),
            Err(EvalError::LogDomain { .. })
        ));
    }
}
