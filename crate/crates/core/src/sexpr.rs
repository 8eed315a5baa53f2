//! Shared S-expression reader for the textual program formats.
//!
//! All four languages use the same surface syntax: atoms (symbols and
//! integers) and parenthesised lists. Each language module layers its own
//! grammar on top of [`Sexpr`].

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexpr {
    /// Bare symbol, e.g. `while` or `x`.
    Sym(String, Pos),
    /// Integer literal, possibly negative.
    Int(i64, Pos),
    List(Vec<Sexpr>, Pos),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub pos: Pos,
    pub msg: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.msg)
    }
}

impl Sexpr {
    pub fn pos(&self) -> Pos {
        match self {
            Sexpr::Sym(_, p) | Sexpr::Int(_, p) | Sexpr::List(_, p) => *p,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Sexpr::Sym(s, _) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Sexpr::Int(i, _) => Some(*i),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(xs, _) => Some(xs),
            _ => None,
        }
    }

    pub fn err(&self, msg: impl Into<String>) -> SyntaxError {
        SyntaxError { pos: self.pos(), msg: msg.into() }
    }
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    i: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, bytes: src.as_bytes(), i: 0, line: 1, col: 1 }
    }

    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    fn bump(&mut self) -> Option<u8> {
        let b = *self.bytes.get(self.i)?;
        self.i += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.i).copied()
    }

    fn skip_ws(&mut self) {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b';') => {
                    // Line comment.
                    while let Some(b) = self.peek() {
                        if b == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn atom(&mut self) -> Result<Sexpr, SyntaxError> {
        let pos = self.pos();
        let start = self.i;
        while let Some(b) = self.peek() {
            if b.is_ascii_whitespace() || b == b'(' || b == b')' || b == b';' {
                break;
            }
            self.bump();
        }
        let text = &self.src[start..self.i];
        if text.is_empty() {
            return Err(SyntaxError { pos, msg: "unexpected character".to_string() });
        }
        let first = text.as_bytes()[0];
        if first.is_ascii_digit() || (first == b'-' && text.len() > 1) {
            match text.parse::<i64>() {
                Ok(n) => Ok(Sexpr::Int(n, pos)),
                Err(_) => {
                    Err(SyntaxError { pos, msg: alloc::format!("bad integer literal `{text}`") })
                }
            }
        } else {
            Ok(Sexpr::Sym(text.to_string(), pos))
        }
    }

    fn expr(&mut self) -> Result<Sexpr, SyntaxError> {
        self.skip_ws();
        let pos = self.pos();
        match self.peek() {
            None => Err(SyntaxError { pos, msg: "unexpected end of input".to_string() }),
            Some(b'(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        Some(b')') => {
                            self.bump();
                            return Ok(Sexpr::List(items, pos));
                        }
                        None => {
                            return Err(SyntaxError { pos, msg: "unclosed `(`".to_string() })
                        }
                        _ => items.push(self.expr()?),
                    }
                }
            }
            Some(b')') => Err(SyntaxError { pos, msg: "unmatched `)`".to_string() }),
            _ => self.atom(),
        }
    }
}

/// Parse a single S-expression; trailing input (other than whitespace and
/// comments) is an error.
pub fn parse_one(src: &str) -> Result<Sexpr, SyntaxError> {
    let mut lx = Lexer::new(src);
    let e = lx.expr()?;
    lx.skip_ws();
    if lx.peek().is_some() {
        return Err(SyntaxError { pos: lx.pos(), msg: "trailing input".to_string() });
    }
    Ok(e)
}

/// Parse a whole file as a sequence of S-expressions.
pub fn parse_many(src: &str) -> Result<Vec<Sexpr>, SyntaxError> {
    let mut lx = Lexer::new(src);
    let mut out = Vec::new();
    loop {
        lx.skip_ws();
        if lx.peek().is_none() {
            return Ok(out);
        }
        out.push(lx.expr()?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atoms_and_lists() {
        let e = parse_one("(seq (assign x -3) skip)").unwrap();
        let items = e.as_list().unwrap();
        assert_eq!(items[0].as_sym(), Some("seq"));
        let assign = items[1].as_list().unwrap();
        assert_eq!(assign[2].as_int(), Some(-3));
    }

    #[test]
    fn comments_and_positions() {
        let e = parse_one("; header\n  (output x)").unwrap();
        assert_eq!(e.pos(), Pos { line: 2, col: 3 });
    }

    #[test]
    fn errors() {
        assert!(parse_one("(a b").is_err());
        assert!(parse_one("a b").is_err());
        assert!(parse_one(")").is_err());
    }
}
