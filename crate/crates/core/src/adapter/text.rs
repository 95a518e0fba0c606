//! Text form of adapter expressions.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | primary
//! primary := number | string | 'true' | 'false' | 'null'
//!          | '$' path? | '$' string | ident '(' (expr (',' expr)*)? ')' | '(' expr ')'
//! ```
//!
//! A bare `$` stands for the mapping's own source field.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde_json::Value;

use super::{ArithOp, Expr};
use crate::path::Path;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse `{text}` at offset {offset}: {message}")]
pub struct ParseError {
    pub text: String,
    pub offset: usize,
    pub message: String,
}

/// Parses a standalone expression; a bare `$` is rejected.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    Parser::new(text, None).parse_all()
}

/// Parses a mapping transform. Empty text, `identity` and `$` all mean
/// "copy the source field".
pub fn parse_transform(text: &str, source: Option<&Path>) -> Result<Expr, ParseError> {
    let trimmed = text.trim();
    if trimmed.is_empty() || trimmed == "identity" {
        return match source {
            Some(p) => Ok(Expr::Get(p.clone())),
            None => Err(ParseError {
                text: text.to_string(),
                offset: 0,
                message: "identity transform needs a source field".into(),
            }),
        };
    }
    Parser::new(text, source).parse_all()
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    source: Option<&'a Path>,
}

fn is_path_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'.' || b == b'[' || b == b']'
}

/// `$path` when every byte is a plain path byte, `$"..."` otherwise.
pub(crate) fn render_get(path: &Path) -> String {
    let text = path.to_string();
    if text.bytes().all(is_path_byte) {
        alloc::format!("${text}")
    } else {
        alloc::format!("${}", Value::String(text))
    }
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, source: Option<&'a Path>) -> Self {
        Self { text, bytes: text.as_bytes(), pos: 0, source }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { text: self.text.to_string(), offset: self.pos, message: message.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_all(mut self) -> Result<Expr, ParseError> {
        let e = self.expr(0)?;
        if self.peek().is_some() {
            return self.err("trailing input");
        }
        Ok(e)
    }

    fn expr(&mut self, depth: usize) -> Result<Expr, ParseError> {
        if depth > 64 {
            return self.err("expression nested too deeply");
        }
        let mut lhs = self.term(depth)?;
        loop {
            let op = match self.peek() {
                Some(b'+') => ArithOp::Add,
                Some(b'-') => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term(depth)?;
            lhs = Expr::Arith { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
    }

    fn term(&mut self, depth: usize) -> Result<Expr, ParseError> {
        let mut lhs = self.unary(depth)?;
        loop {
            let op = match self.peek() {
                Some(b'*') => ArithOp::Mul,
                Some(b'/') => ArithOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary(depth)?;
            lhs = Expr::Arith { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
    }

    fn unary(&mut self, depth: usize) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            let start = self.pos;
            self.pos += 1;
            if self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
                self.pos = start;
                return self.number();
            }
            let inner = self.unary(depth + 1)?;
            return Ok(Expr::Arith {
                op: ArithOp::Sub,
                lhs: Box::new(Expr::Const(Value::from(0))),
                rhs: Box::new(inner),
            });
        }
        self.primary(depth)
    }

    fn primary(&mut self, depth: usize) -> Result<Expr, ParseError> {
        match self.peek() {
            None => self.err("unexpected end of input"),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr(depth + 1)?;
                if !self.eat(b')') {
                    return self.err("expected `)`");
                }
                Ok(e)
            }
            Some(b'"') => Ok(Expr::Const(Value::String(self.string()?))),
            Some(b'$') => {
                self.pos += 1;
                if self.bytes.get(self.pos) == Some(&b'"') {
                    let text = self.string()?;
                    return self.path(&text);
                }
                let start = self.pos;
                while self.pos < self.bytes.len() && is_path_byte(self.bytes[self.pos]) {
                    self.pos += 1;
                }
                if start == self.pos {
                    return match self.source {
                        Some(p) => Ok(Expr::Get(p.clone())),
                        None => self.err("bare `$` outside a mapping transform"),
                    };
                }
                let text = &self.text[start..self.pos];
                self.path(text)
            }
            Some(b) if b.is_ascii_digit() => self.number(),
            Some(b) if b.is_ascii_alphabetic() || b == b'_' => {
                let start = self.pos;
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let ident = &self.text[start..self.pos];
                match ident {
                    "true" => return Ok(Expr::Const(Value::Bool(true))),
                    "false" => return Ok(Expr::Const(Value::Bool(false))),
                    "null" => return Ok(Expr::Const(Value::Null)),
                    _ => {}
                }
                if !self.eat(b'(') {
                    return self.err(alloc::format!("expected `(` after `{ident}`"));
                }
                let mut args = Vec::new();
                if !self.eat(b')') {
                    loop {
                        args.push(self.expr(depth + 1)?);
                        if self.eat(b')') {
                            break;
                        }
                        if !self.eat(b',') {
                            return self.err("expected `,` or `)`");
                        }
                    }
                }
                Ok(Expr::Call { func: ident.to_string(), args })
            }
            Some(_) => self.err("unexpected character"),
        }
    }

    fn path(&self, text: &str) -> Result<Expr, ParseError> {
        match text.parse::<Path>() {
            Ok(p) => Ok(Expr::Get(p)),
            Err(e) => self.err(e.to_string()),
        }
    }

    fn string(&mut self) -> Result<String, ParseError> {
        // Reuse the JSON string grammar: find the closing quote, then decode.
        let start = self.pos;
        let mut i = start + 1;
        while i < self.bytes.len() {
            match self.bytes[i] {
                b'\\' => i += 2,
                b'"' => {
                    let slice = &self.text[start..=i];
                    self.pos = i + 1;
                    return serde_json::from_str(slice).or_else(|_| self.err("invalid string literal"));
                }
                _ => i += 1,
            }
        }
        self.err("unterminated string")
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        if self.bytes.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_digit() || matches!(self.bytes[self.pos], b'.' | b'e' | b'E'))
        {
            if matches!(self.bytes[self.pos], b'e' | b'E')
                && matches!(self.bytes.get(self.pos + 1), Some(b'+') | Some(b'-'))
            {
                self.pos += 1;
            }
            self.pos += 1;
        }
        let slice = &self.text[start..self.pos];
        match serde_json::from_str::<Value>(slice) {
            Ok(v @ Value::Number(_)) => Ok(Expr::Const(v)),
            _ => {
                self.pos = start;
                self.err(alloc::format!("invalid number `{slice}`"))
            }
        }
    }
}
