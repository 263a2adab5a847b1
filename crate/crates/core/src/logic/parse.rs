//! Parser for temporal formulas with brace-delimited regular heap
//! expressions.
//!
//! ```text
//! phi  := "true" | "{" rite "}" | "!" phi | phi "&" phi | phi "|" phi
//!       | phi "->" phi | "X" phi | "F" phi | "G" phi | phi "U" phi | "(" phi ")"
//! rite := "eps" | ident | "~" ident | rite "." rite | rite "+" rite
//!       | rite "*" | "(" rite ")"
//! ```
//!
//! Unary operators bind tightest, then `U` (right-associative), `&`, `|`
//! and `->` (right-associative, weakest). Inside a rite, `*` binds tighter
//! than `.`, which binds tighter than `+`. Identifiers inside braces resolve
//! to variable tests or field actions from the program's declarations.

use thiserror::Error;

use super::{Formula, Rite};
use crate::syntax::Decls;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{at}: {message}")]
pub struct FormulaError {
    /// Byte offset of the error in the formula text.
    pub at: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Bang,
    Amp,
    Pipe,
    Arrow,
    Tilde,
    Dot,
    Plus,
    Star,
    Eof,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, FormulaError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let start = i;
        let tok = match b {
            _ if b.is_ascii_whitespace() => {
                i += 1;
                continue;
            }
            b'{' => Tok::LBrace,
            b'}' => Tok::RBrace,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'!' => Tok::Bang,
            b'&' => Tok::Amp,
            b'|' => Tok::Pipe,
            b'~' => Tok::Tilde,
            b'.' => Tok::Dot,
            b'+' => Tok::Plus,
            b'*' => Tok::Star,
            b'-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    i += 1;
                    Tok::Arrow
                } else {
                    return Err(FormulaError {
                        at: start,
                        message: "expected `>` after `-`".into(),
                    });
                }
            }
            _ if b.is_ascii_alphanumeric() || b == b'_' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                let s = String::from_utf8_lossy(&bytes[i..j]).into_owned();
                i = j - 1;
                Tok::Ident(s)
            }
            _ => {
                return Err(FormulaError {
                    at: start,
                    message: format!("unexpected character `{}`", b as char),
                })
            }
        };
        i += 1;
        toks.push((tok, start));
    }
    toks.push((Tok::Eof, bytes.len()));
    Ok(toks)
}

struct P<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    decls: &'a Decls,
}

impl<'a> P<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn at(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, message: impl Into<String>) -> FormulaError {
        FormulaError {
            at: self.at(),
            message: message.into(),
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), FormulaError> {
        if self.peek() == &t {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    // implies (weakest, right-associative)
    fn formula(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.or_level()?;
        if self.peek() == &Tok::Arrow {
            self.bump();
            let rhs = self.formula()?;
            return Ok(lhs.implies(rhs));
        }
        Ok(lhs)
    }

    fn or_level(&mut self) -> Result<Formula, FormulaError> {
        let mut acc = self.and_level()?;
        while self.peek() == &Tok::Pipe {
            self.bump();
            let rhs = self.and_level()?;
            acc = acc.or(rhs);
        }
        Ok(acc)
    }

    fn and_level(&mut self) -> Result<Formula, FormulaError> {
        let mut acc = self.until_level()?;
        while self.peek() == &Tok::Amp {
            self.bump();
            let rhs = self.until_level()?;
            acc = acc.and(rhs);
        }
        Ok(acc)
    }

    // right-associative U
    fn until_level(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.unary()?;
        if matches!(self.peek(), Tok::Ident(s) if s == "U") {
            self.bump();
            let rhs = self.until_level()?;
            return Ok(lhs.until(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(self.unary()?.not())
            }
            Tok::Ident(s) if s == "X" => {
                self.bump();
                Ok(self.unary()?.next())
            }
            Tok::Ident(s) if s == "F" => {
                self.bump();
                Ok(self.unary()?.finally())
            }
            Tok::Ident(s) if s == "G" => {
                self.bump();
                Ok(self.unary()?.globally())
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, FormulaError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::LBrace => {
                self.bump();
                let r = self.rite_alt()?;
                self.expect(Tok::RBrace, "`}`")?;
                Ok(Formula::Atom(r))
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            _ => Err(self.err("expected a formula")),
        }
    }

    fn rite_alt(&mut self) -> Result<Rite, FormulaError> {
        let mut acc = self.rite_cat()?;
        while self.peek() == &Tok::Plus {
            self.bump();
            let rhs = self.rite_cat()?;
            acc = Rite::Alt(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn rite_cat(&mut self) -> Result<Rite, FormulaError> {
        let mut acc = self.rite_star()?;
        while self.peek() == &Tok::Dot {
            self.bump();
            let rhs = self.rite_star()?;
            acc = Rite::Cat(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn rite_star(&mut self) -> Result<Rite, FormulaError> {
        let mut acc = self.rite_primary()?;
        while self.peek() == &Tok::Star {
            self.bump();
            acc = Rite::Star(Box::new(acc));
        }
        Ok(acc)
    }

    fn rite_primary(&mut self) -> Result<Rite, FormulaError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let r = self.rite_alt()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(r)
            }
            Tok::Tilde => {
                self.bump();
                match self.bump() {
                    Tok::Ident(name) => match self.decls.var(&name) {
                        Some(v) => Ok(Rite::NegTest(v)),
                        None => Err(self.err(format!("`~{name}`: not a declared variable"))),
                    },
                    _ => Err(self.err("expected a variable after `~`")),
                }
            }
            Tok::Ident(name) => {
                self.bump();
                if name == "eps" {
                    return Ok(Rite::Eps);
                }
                if let Some(v) = self.decls.var(&name) {
                    return Ok(Rite::Test(v));
                }
                if let Some(f) = self.decls.field(&name) {
                    return Ok(Rite::Act(f));
                }
                Err(self.err(format!(
                    "`{name}` is neither a declared variable nor a field"
                )))
            }
            _ => Err(self.err("expected a heap expression")),
        }
    }
}

/// Parses a temporal formula, resolving identifiers inside atoms against the
/// declarations.
pub fn parse_formula(text: &str, decls: &Decls) -> Result<Formula, FormulaError> {
    let toks = lex(text)?;
    let mut p = P {
        toks,
        pos: 0,
        decls,
    };
    let f = p.formula()?;
    if p.peek() != &Tok::Eof {
        return Err(p.err("trailing input after formula"));
    }
    Ok(f)
}
