//! Expression front end for user-written Lagrangians.
//!
//! Coordinates use flat names `x0 .. x{8n-1}`; the coordinate at block `k`,
//! offset `i` is `x{k*n + i}`. Grammar:
//!
//! ```text
//! expr  := term  (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?            -- right-associative
//! atom  := number | coordinate | function '(' expr ')' | '(' expr ')'
//! ```
//!
//! Unary minus binds tighter than `*` and `/` but looser than `^`, so
//! `-x0^2` is `-(x0^2)`. Functions are `sin`, `cos`, `exp`, `sqrt`, `ln`.
//! Number literals allow an optional fraction and decimal exponent.
//! A constant integer exponent is folded into a dedicated power node that
//! evaluates by repeated multiplication; any other exponent goes through
//! `exp(e * ln(base))` and requires a positive base.

mod eval;

pub use eval::{eval_dual, eval_expr_jet, EvalError, EvalErrorKind};

use std::fmt;

use crate::dim::Dimension;

/// Byte range into the source string an AST node or error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub begin: usize,
    pub end: usize,
}

impl SourceSpan {
    fn join(self, other: SourceSpan) -> SourceSpan {
        SourceSpan {
            begin: self.begin.min(other.begin),
            end: self.end.max(other.end),
        }
    }

    /// The source slice this span covers.
    pub fn snippet<'s>(&self, source: &'s str) -> &'s str {
        source.get(self.begin..self.end).unwrap_or("")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Ln,
}

impl Function {
    fn from_name(name: &str) -> Option<Function> {
        match name {
            "sin" => Some(Function::Sin),
            "cos" => Some(Function::Cos),
            "exp" => Some(Function::Exp),
            "sqrt" => Some(Function::Sqrt),
            "ln" => Some(Function::Ln),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Function::Sin => "sin",
            Function::Cos => "cos",
            Function::Exp => "exp",
            Function::Sqrt => "sqrt",
            Function::Ln => "ln",
        }
    }
}

/// Immutable expression tree; every node keeps its source span.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Constant(f64),
    Coord(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    /// Integer exponent, evaluated by repeated multiplication.
    PowInt(Box<Expr>, i64),
    /// General exponent, evaluated as `exp(e * ln(base))`.
    Pow(Box<Expr>, Box<Expr>),
    Call(Function, Box<Expr>),
}

impl Expr {
    /// Structural equality, ignoring source spans.
    pub fn structural_eq(&self, other: &Expr) -> bool {
        use ExprKind::*;
        match (&self.kind, &other.kind) {
            (Constant(a), Constant(b)) => a == b,
            (Coord(a), Coord(b)) => a == b,
            (Add(a1, a2), Add(b1, b2))
            | (Sub(a1, a2), Sub(b1, b2))
            | (Mul(a1, a2), Mul(b1, b2))
            | (Div(a1, a2), Div(b1, b2))
            | (Pow(a1, a2), Pow(b1, b2)) => a1.structural_eq(b1) && a2.structural_eq(b2),
            (Neg(a), Neg(b)) => a.structural_eq(b),
            (PowInt(a, ea), PowInt(b, eb)) => ea == eb && a.structural_eq(b),
            (Call(fa, a), Call(fb, b)) => fa == fb && a.structural_eq(b),
            _ => false,
        }
    }

    fn precedence(&self) -> u8 {
        match &self.kind {
            ExprKind::Add(..) | ExprKind::Sub(..) => 1,
            ExprKind::Mul(..) | ExprKind::Div(..) => 2,
            ExprKind::Neg(..) => 3,
            ExprKind::Constant(c) if c.is_sign_negative() => 3,
            ExprKind::PowInt(..) | ExprKind::Pow(..) => 4,
            _ => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let me = self.precedence();
        if me < min {
            write!(f, "(")?;
        }
        match &self.kind {
            ExprKind::Constant(c) => write!(f, "{c}")?,
            ExprKind::Coord(i) => write!(f, "x{i}")?,
            ExprKind::Add(l, r) => {
                l.fmt_prec(f, 1)?;
                write!(f, " + ")?;
                r.fmt_prec(f, 2)?;
            }
            ExprKind::Sub(l, r) => {
                l.fmt_prec(f, 1)?;
                write!(f, " - ")?;
                r.fmt_prec(f, 2)?;
            }
            ExprKind::Mul(l, r) => {
                l.fmt_prec(f, 2)?;
                write!(f, "*")?;
                r.fmt_prec(f, 3)?;
            }
            ExprKind::Div(l, r) => {
                l.fmt_prec(f, 2)?;
                write!(f, "/")?;
                r.fmt_prec(f, 3)?;
            }
            ExprKind::Neg(e) => {
                write!(f, "-")?;
                e.fmt_prec(f, 3)?;
            }
            ExprKind::PowInt(b, e) => {
                b.fmt_prec(f, 5)?;
                write!(f, "^{e}")?;
            }
            ExprKind::Pow(b, e) => {
                b.fmt_prec(f, 5)?;
                write!(f, "^")?;
                e.fmt_prec(f, 3)?;
            }
            ExprKind::Call(func, arg) => {
                write!(f, "{}(", func.name())?;
                arg.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
        }
        if me < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("unexpected character `{ch}` at byte {}", span.begin)]
    Lex { span: SourceSpan, ch: char },
    #[error("invalid number literal `{text}`")]
    BadNumber { span: SourceSpan, text: String },
    #[error("unexpected {found}, expected {expected}")]
    Unexpected {
        span: SourceSpan,
        expected: String,
        found: String,
    },
    #[error("coordinate `x{index}` out of range: valid coordinates are x0..x{max}")]
    CoordOutOfRange {
        span: SourceSpan,
        index: usize,
        max: usize,
    },
    #[error("unknown identifier `{name}`")]
    UnknownIdentifier { span: SourceSpan, name: String },
    #[error("function `{name}` takes exactly 1 argument, got {got}")]
    Arity {
        span: SourceSpan,
        name: String,
        got: usize,
    },
}

impl ParseError {
    pub fn span(&self) -> SourceSpan {
        match self {
            ParseError::Lex { span, .. }
            | ParseError::BadNumber { span, .. }
            | ParseError::Unexpected { span, .. }
            | ParseError::CoordOutOfRange { span, .. }
            | ParseError::UnknownIdentifier { span, .. }
            | ParseError::Arity { span, .. } => *span,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
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
    Comma,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number `{v}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Token {
    tok: Tok,
    span: SourceSpan,
}

fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = source.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let begin = i;
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' | b'-' | b'*' | b'/' | b'^' | b'(' | b')' | b',' => {
                let tok = match b {
                    b'+' => Tok::Plus,
                    b'-' => Tok::Minus,
                    b'*' => Tok::Star,
                    b'/' => Tok::Slash,
                    b'^' => Tok::Caret,
                    b'(' => Tok::LParen,
                    b')' => Tok::RParen,
                    _ => Tok::Comma,
                };
                i += 1;
                out.push(Token {
                    tok,
                    span: SourceSpan { begin, end: i },
                });
            }
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
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
                let span = SourceSpan { begin, end: i };
                let text = &source[begin..i];
                let value = text.parse::<f64>().map_err(|_| ParseError::BadNumber {
                    span,
                    text: text.to_string(),
                })?;
                out.push(Token {
                    tok: Tok::Num(value),
                    span,
                });
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(source[begin..i].to_string()),
                    span: SourceSpan { begin, end: i },
                });
            }
            _ => {
                let ch = source[begin..].chars().next().unwrap_or('?');
                return Err(ParseError::Lex {
                    span: SourceSpan {
                        begin,
                        end: begin + ch.len_utf8(),
                    },
                    ch,
                });
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: SourceSpan {
            begin: source.len(),
            end: source.len(),
        },
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    dim: Dimension,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> &Token {
        let t = &self.tokens[self.pos];
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let t = self.peek();
        ParseError::Unexpected {
            span: t.span,
            expected: expected.to_string(),
            found: t.tok.describe(),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<SourceSpan, ParseError> {
        if self.peek().tok == tok {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let make = match self.peek().tok {
                Tok::Plus => ExprKind::Add as fn(_, _) -> _,
                Tok::Minus => ExprKind::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            let span = lhs.span.join(rhs.span);
            lhs = Expr {
                kind: make(Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let make = match self.peek().tok {
                Tok::Star => ExprKind::Mul as fn(_, _) -> _,
                Tok::Slash => ExprKind::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.unary()?;
            let span = lhs.span.join(rhs.span);
            lhs = Expr {
                kind: make(Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek().tok == Tok::Minus {
            let minus_span = self.bump().span;
            let inner = self.unary()?;
            let span = minus_span.join(inner.span);
            // Fold a negated literal into the constant so printing and
            // reparsing agree structurally.
            if let ExprKind::Constant(c) = inner.kind {
                return Ok(Expr {
                    kind: ExprKind::Constant(-c),
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
        if self.peek().tok != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let exponent = self.unary()?;
        let span = base.span.join(exponent.span);
        // Integral constants become repeated-multiplication powers.
        if let ExprKind::Constant(c) = exponent.kind {
            if c.fract() == 0.0 && c.abs() <= i64::MAX as f64 {
                return Ok(Expr {
                    kind: ExprKind::PowInt(Box::new(base), c as i64),
                    span,
                });
            }
        }
        Ok(Expr {
            kind: ExprKind::Pow(Box::new(base), Box::new(exponent)),
            span,
        })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().tok.clone() {
            Tok::Num(value) => {
                let span = self.bump().span;
                Ok(Expr {
                    kind: ExprKind::Constant(value),
                    span,
                })
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let span = self.bump().span;
                if self.peek().tok == Tok::LParen {
                    return self.call(name, span);
                }
                self.coordinate(&name, span)
            }
            _ => Err(self.unexpected("a number, coordinate, function call or `(`")),
        }
    }

    fn call(&mut self, name: String, name_span: SourceSpan) -> Result<Expr, ParseError> {
        let func = Function::from_name(&name).ok_or_else(|| ParseError::UnknownIdentifier {
            span: name_span,
            name: name.clone(),
        })?;
        self.expect(Tok::LParen, "`(`")?;
        let mut args = vec![self.expr()?];
        while self.peek().tok == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        let close = self.expect(Tok::RParen, "`)` or `,`")?;
        let span = name_span.join(close);
        if args.len() != 1 {
            return Err(ParseError::Arity {
                span,
                name,
                got: args.len(),
            });
        }
        Ok(Expr {
            kind: ExprKind::Call(func, Box::new(args.pop().unwrap())),
            span,
        })
    }

    fn coordinate(&mut self, name: &str, span: SourceSpan) -> Result<Expr, ParseError> {
        let index = name
            .strip_prefix('x')
            .filter(|digits| !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|digits| digits.parse::<usize>().ok());
        match index {
            Some(index) if index < self.dim.total() => Ok(Expr {
                kind: ExprKind::Coord(index),
                span,
            }),
            Some(index) => Err(ParseError::CoordOutOfRange {
                span,
                index,
                max: self.dim.total() - 1,
            }),
            None => Err(ParseError::UnknownIdentifier {
                span,
                name: name.to_string(),
            }),
        }
    }
}

/// Parses `source` into an expression over the coordinates of `R^{8n}`.
/// Coordinate indices are bound (checked against the dimension) here.
pub fn parse(source: &str, dim: Dimension) -> Result<Expr, ParseError> {
    let tokens = lex(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        dim,
    };
    let expr = parser.expr()?;
    if parser.peek().tok != Tok::Eof {
        return Err(parser.unexpected("end of input"));
    }
    Ok(expr)
}
