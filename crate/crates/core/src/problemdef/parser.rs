//! Recursive-descent parser for the expression language.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | x | y | v | w | coeff:<name>
//!          | func '(' expr ')' | ml '(' number ',' expr ')'
//!          | mld '(' number ',' integer ',' expr ')' | '(' expr ')'
//! ```

use std::fmt;

use super::expr::{BinaryOp, Expr, UnaryOp, Var};

/// Largest accepted source text, in bytes.
pub const MAX_SOURCE_LEN: usize = 64 * 1024;
/// Maximum nesting depth of the grammar recursion.
pub const MAX_DEPTH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
    UnknownIdentifier,
    Arity,
    Limit,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Lexical => "lexical error",
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::UnknownIdentifier => "unknown identifier",
            ParseErrorKind::Arity => "arity error",
            ParseErrorKind::Limit => "limit exceeded",
        })
    }
}

/// Parse failure located at a byte offset into the source.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
    pub message: String,
}

impl ParseError {
    fn new(offset: usize, kind: ParseErrorKind, message: impl Into<String>) -> Self {
        Self { offset, kind, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Coeff(String),
    Op(char),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Coeff(s) => write!(f, "'coeff:{s}'"),
            Tok::Op(c) => write!(f, "'{c}'"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

fn is_ident_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let value: f64 = text
                .parse()
                .map_err(|_| ParseError::new(start, ParseErrorKind::Lexical, format!("malformed number '{text}'")))?;
            if !value.is_finite() {
                return Err(ParseError::new(start, ParseErrorKind::Lexical, format!("number '{text}' out of range")));
            }
            out.push((start, Tok::Num(value)));
        } else if is_ident_start(c) {
            let start = i;
            while i < bytes.len() && is_ident_char(bytes[i]) {
                i += 1;
            }
            let word = &src[start..i];
            if word == "coeff" && bytes.get(i) == Some(&b':') {
                let name_start = i + 1;
                let mut j = name_start;
                if j < bytes.len() && is_ident_start(bytes[j]) {
                    while j < bytes.len() && is_ident_char(bytes[j]) {
                        j += 1;
                    }
                    out.push((start, Tok::Coeff(src[name_start..j].to_string())));
                    i = j;
                } else {
                    return Err(ParseError::new(name_start, ParseErrorKind::Lexical, "expected coefficient name after 'coeff:'"));
                }
            } else {
                out.push((start, Tok::Ident(word.to_string())));
            }
        } else if b"+-*/^(),".contains(&c) {
            out.push((i, Tok::Op(c as char)));
            i += 1;
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(ParseError::new(i, ParseErrorKind::Lexical, format!("unexpected character {ch:?}")));
        }
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> (usize, Tok) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Op(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        ParseError::new(self.offset(), ParseErrorKind::Syntax, format!("expected {wanted}, found {}", self.peek()))
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{c}'")))
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            Err(ParseError::new(self.offset(), ParseErrorKind::Limit, format!("nesting deeper than {MAX_DEPTH}")))
        } else {
            Ok(())
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinaryOp::Add,
                Tok::Op('-') => BinaryOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinaryOp::Mul,
                Tok::Op('/') => BinaryOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let e = if self.eat('-') {
            Expr::Unary(UnaryOp::Neg, Box::new(self.unary()?))
        } else {
            self.power()?
        };
        self.depth -= 1;
        Ok(e)
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat('^') {
            let exp = self.unary()?;
            Ok(Expr::Binary(BinaryOp::Pow, Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    /// Parses a comma-separated argument list of exactly `n` expressions
    /// after the opening parenthesis has been consumed.
    fn close_args(&mut self, name: &str, n: usize, got: usize) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Op(')') => {
                self.bump();
                Ok(())
            }
            Tok::Op(',') => Err(ParseError::new(
                self.offset(),
                ParseErrorKind::Arity,
                format!("{name} takes {n} argument(s), found more than {got}"),
            )),
            _ => Err(self.unexpected("',' or ')'")),
        }
    }

    fn separator(&mut self, name: &str, n: usize, got: usize) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Op(',') => {
                self.bump();
                Ok(())
            }
            Tok::Op(')') => Err(ParseError::new(
                self.offset(),
                ParseErrorKind::Arity,
                format!("{name} takes {n} arguments, found {got}"),
            )),
            _ => Err(self.unexpected("','")),
        }
    }

    fn literal(&mut self) -> Result<(usize, f64), ParseError> {
        let off = self.offset();
        let neg = self.eat('-');
        match self.bump() {
            (_, Tok::Num(v)) => Ok((off, if neg { -v } else { v })),
            (o, t) => Err(ParseError::new(o, ParseErrorKind::Syntax, format!("expected numeric literal, found {t}"))),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let (off, tok) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::Coeff(name) => Ok(Expr::Coeff(name)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(word) => {
                if let Some(v) = Var::from_name(&word) {
                    return Ok(Expr::Var(v));
                }
                if let Some(op) = UnaryOp::FUNCTIONS.into_iter().find(|op| op.name() == word) {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.close_args(&word, 1, 1)?;
                    return Ok(Expr::Unary(op, Box::new(arg)));
                }
                match word.as_str() {
                    "ml" => {
                        self.expect('(')?;
                        let (aoff, alpha) = self.literal()?;
                        check_alpha(aoff, alpha)?;
                        self.separator("ml", 2, 1)?;
                        let arg = self.expr()?;
                        self.close_args("ml", 2, 2)?;
                        Ok(Expr::Ml { alpha, deriv: 0, arg: Box::new(arg) })
                    }
                    "mld" => {
                        self.expect('(')?;
                        let (aoff, alpha) = self.literal()?;
                        check_alpha(aoff, alpha)?;
                        self.separator("mld", 3, 1)?;
                        let (koff, k) = self.literal()?;
                        if !(k >= 0.0 && k == k.trunc() && k <= 64.0) {
                            return Err(ParseError::new(koff, ParseErrorKind::Syntax, format!("derivative order must be an integer in 0..=64, got {k}")));
                        }
                        self.separator("mld", 3, 2)?;
                        let arg = self.expr()?;
                        self.close_args("mld", 3, 3)?;
                        Ok(Expr::Ml { alpha, deriv: k as u32, arg: Box::new(arg) })
                    }
                    _ => Err(ParseError::new(off, ParseErrorKind::UnknownIdentifier, format!("unknown identifier '{word}'"))),
                }
            }
            t => Err(ParseError::new(off, ParseErrorKind::Syntax, format!("expected operand, found {t}"))),
        }
    }
}

fn check_alpha(off: usize, alpha: f64) -> Result<(), ParseError> {
    if alpha > 0.0 {
        Ok(())
    } else {
        Err(ParseError::new(off, ParseErrorKind::Syntax, format!("Mittag-Leffler parameter must be positive, got {alpha}")))
    }
}

/// Parses `src` into an expression tree.
pub fn parse_expression(src: &str) -> Result<Expr, ParseError> {
    if src.len() > MAX_SOURCE_LEN {
        return Err(ParseError::new(MAX_SOURCE_LEN, ParseErrorKind::Limit, format!("source longer than {MAX_SOURCE_LEN} bytes")));
    }
    let toks = tokenize(src)?;
    if toks.len() == 1 {
        return Err(ParseError::new(0, ParseErrorKind::Syntax, "empty expression"));
    }
    let mut p = Parser { toks, pos: 0, depth: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("operator or end of input"));
    }
    Ok(e)
}
