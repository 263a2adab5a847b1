//! Lexer and recursive-descent parser for the `.shy` program format.
//!
//! ```text
//! program := "globals" idlist ";" "locals" idlist ";" "fields" idlist ";" proc+
//! proc    := "proc" ident "{" stmt "}"
//! stmt    := seq ("+" seq)*
//! seq     := basic (";" basic)*
//! basic   := ident "." ident ":=" ident
//!          | ident ":=" ident "." ident
//!          | ident ":=" "new"
//!          | ident ":=" ident
//!          | "[" ident ("=" | "!=") ident "]" basic
//!          | ident
//!          | "{" stmt "}"
//! ```
//!
//! `nil` is implicitly a global when omitted; `main` is required.
//! Line comments start with `//`.

use thiserror::Error;

use super::{Program, ProgramBuilder, ProgramError, StmtId};

/// A lexical, syntactic or semantic error in program text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Comma,
    Semi,
    Plus,
    Dot,
    Assign,
    Eq,
    Neq,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Assign => "`:=`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Neq => "`!=`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let b = *self.src.get(self.pos)?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }

    fn next_tok(&mut self) -> Result<(Tok, u32, u32), ParseError> {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'/') if self.src.get(self.pos + 1) == Some(&b'/') => {
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
        let (line, col) = (self.line, self.col);
        let tok = match self.peek() {
            None => Tok::Eof,
            Some(b) if b.is_ascii_alphanumeric() || b == b'_' => {
                let start = self.pos;
                while let Some(b) = self.peek() {
                    if b.is_ascii_alphanumeric() || b == b'_' {
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
            }
            Some(b',') => {
                self.bump();
                Tok::Comma
            }
            Some(b';') => {
                self.bump();
                Tok::Semi
            }
            Some(b'+') => {
                self.bump();
                Tok::Plus
            }
            Some(b'.') => {
                self.bump();
                Tok::Dot
            }
            Some(b':') => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    Tok::Assign
                } else {
                    return Err(self.err("expected `=` after `:`"));
                }
            }
            Some(b'=') => {
                self.bump();
                Tok::Eq
            }
            Some(b'!') => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    Tok::Neq
                } else {
                    return Err(self.err("expected `=` after `!`"));
                }
            }
            Some(b'{') => {
                self.bump();
                Tok::LBrace
            }
            Some(b'}') => {
                self.bump();
                Tok::RBrace
            }
            Some(b'[') => {
                self.bump();
                Tok::LBracket
            }
            Some(b']') => {
                self.bump();
                Tok::RBracket
            }
            Some(b) => return Err(self.err(format!("unexpected character `{}`", b as char))),
        };
        Ok((tok, line, col))
    }
}

struct Parser {
    toks: Vec<(Tok, u32, u32)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn here(&self) -> (u32, u32) {
        let (_, l, c) = self.toks[self.pos];
        (l, c)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }

    fn sem(&self, e: ProgramError) -> ParseError {
        self.err(e.to_string())
    }

    fn expect(&mut self, want: &Tok) -> Result<(), ParseError> {
        if self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!(
                "expected {}, found {}",
                want.describe(),
                self.peek().describe()
            )))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.err(format!("expected {what}, found {}", other.describe()))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            other => Err(self.err(format!("expected `{kw}`, found {}", other.describe()))),
        }
    }

    fn idlist(&mut self) -> Result<Vec<String>, ParseError> {
        let mut out = Vec::new();
        if matches!(self.peek(), Tok::Ident(_)) {
            out.push(self.ident("identifier")?);
            while self.peek() == &Tok::Comma {
                self.bump();
                out.push(self.ident("identifier")?);
            }
        }
        Ok(out)
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        self.keyword("globals")?;
        let globals = self.idlist()?;
        self.expect(&Tok::Semi)?;
        self.keyword("locals")?;
        let locals = self.idlist()?;
        self.expect(&Tok::Semi)?;
        self.keyword("fields")?;
        let fields = self.idlist()?;
        self.expect(&Tok::Semi)?;
        let mut b = ProgramBuilder::new(&globals, &locals, &fields).map_err(|e| self.sem(e))?;
        loop {
            match self.peek() {
                Tok::Eof => break,
                _ => {
                    self.keyword("proc")?;
                    let name = self.ident("procedure name")?;
                    b.proc_ref(&name).map_err(|e| self.sem(e))?;
                    self.expect(&Tok::LBrace)?;
                    let body = self.stmt(&mut b)?;
                    self.expect(&Tok::RBrace)?;
                    b.proc_def(&name, body).map_err(|e| self.sem(e))?;
                }
            }
        }
        b.finish().map_err(|e| self.sem(e))
    }

    fn stmt(&mut self, b: &mut ProgramBuilder) -> Result<StmtId, ParseError> {
        let mut acc = self.seq(b)?;
        while self.peek() == &Tok::Plus {
            self.bump();
            let rhs = self.seq(b)?;
            acc = b.choice(acc, rhs);
        }
        Ok(acc)
    }

    fn seq(&mut self, b: &mut ProgramBuilder) -> Result<StmtId, ParseError> {
        let mut acc = self.basic(b)?;
        while self.peek() == &Tok::Semi {
            self.bump();
            let rhs = self.basic(b)?;
            acc = b.seq(acc, rhs);
        }
        Ok(acc)
    }

    fn basic(&mut self, b: &mut ProgramBuilder) -> Result<StmtId, ParseError> {
        match self.peek().clone() {
            Tok::LBrace => {
                self.bump();
                let s = self.stmt(b)?;
                self.expect(&Tok::RBrace)?;
                Ok(s)
            }
            Tok::LBracket => {
                self.bump();
                let x = self.ident("variable")?;
                let negated = match self.bump() {
                    Tok::Eq => false,
                    Tok::Neq => true,
                    other => {
                        return Err(
                            self.err(format!("expected `=` or `!=`, found {}", other.describe()))
                        )
                    }
                };
                let y = self.ident("variable")?;
                self.expect(&Tok::RBracket)?;
                let body = self.basic(b)?;
                let res = if negated {
                    b.guard_neq(&x, &y, body)
                } else {
                    b.guard_eq(&x, &y, body)
                };
                res.map_err(|e| self.sem(e))
            }
            Tok::Ident(first) => {
                self.bump();
                match self.peek().clone() {
                    Tok::Dot => {
                        // x.f := y
                        self.bump();
                        let f = self.ident("field")?;
                        self.expect(&Tok::Assign)?;
                        let y = self.ident("variable")?;
                        b.field_write(&first, &f, &y).map_err(|e| self.sem(e))
                    }
                    Tok::Assign => {
                        self.bump();
                        let rhs = self.ident("`new` or a variable")?;
                        if rhs == "new" {
                            return b.new_object(&first).map_err(|e| self.sem(e));
                        }
                        if self.peek() == &Tok::Dot {
                            self.bump();
                            let f = self.ident("field")?;
                            b.field_read(&first, &rhs, &f).map_err(|e| self.sem(e))
                        } else {
                            b.var_copy(&first, &rhs).map_err(|e| self.sem(e))
                        }
                    }
                    _ => b.call(&first).map_err(|e| self.sem(e)),
                }
            }
            other => Err(self.err(format!("expected a statement, found {}", other.describe()))),
        }
    }
}

/// Parses and validates a `.shy` program.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut lx = Lexer::new(text);
    let mut toks = Vec::new();
    loop {
        let t = lx.next_tok()?;
        let done = t.0 == Tok::Eof;
        toks.push(t);
        if done {
            break;
        }
    }
    Parser { toks, pos: 0 }.program()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Stmt;

    #[test]
    fn minimal_program() {
        let p = parse_program("globals nil,g; locals l; fields f; proc main { g := new }").unwrap();
        assert_eq!(p.n_procs(), 1);
        let body = p.body(p.initial());
        match *p.stmt(body) {
            Stmt::New(x) => assert_eq!(p.decls().var_name(x), "g"),
            ref other => panic!("expected New, got {other:?}"),
        }
    }

    #[test]
    fn nil_is_constant() {
        let err =
            parse_program("globals nil; locals ; fields ; proc main { nil := new }").unwrap_err();
        assert!(err.message.contains("nil"), "{err}");
        assert!(err.message.contains("constant"), "{err}");
    }

    #[test]
    fn nil_added_implicitly() {
        let p = parse_program("globals g; locals ; fields ; proc main { g := new }").unwrap();
        assert!(p.decls().var("nil").is_some());
    }

    #[test]
    fn four_procedure_file_program() {
        let text = "
            globals nil, g1, gr; locals x, y, z; fields ;
            proc main { open; x := gr; g1 := x; q; y := gr; g1 := y; close }
            proc open { x := new; gr := x }
            proc q    { x := g1; y := x; gr := y }
            proc close { z := g1; [z != nil] z := nil }
        ";
        let p = parse_program(text).unwrap();
        assert_eq!(p.n_procs(), 4);
        assert!(p.proc_id("q").is_some());
    }

    #[test]
    fn undeclared_name_reported() {
        let err = parse_program("globals g; locals ; fields ; proc main { h := new }").unwrap_err();
        assert!(err.message.contains("undeclared"), "{err}");
    }

    #[test]
    fn reserved_name_reported() {
        let err = parse_program("globals g; locals ; fields ; proc main { g := c0 }").unwrap_err();
        assert!(err.message.contains("reserved"), "{err}");
    }

    #[test]
    fn missing_main_reported() {
        let err = parse_program("globals g; locals ; fields ; proc p { g := new }").unwrap_err();
        assert!(err.message.contains("main"), "{err}");
    }

    #[test]
    fn error_carries_position() {
        let err = parse_program("globals g; locals ; fields \nproc main { g := new }").unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn text_round_trips() {
        let text = "
            globals nil, g; locals l; fields f;
            proc main { l := new; {g := new + [l = nil] g := l}; l.f := g; p }
            proc p { g := l.f }
        ";
        let p = parse_program(text).unwrap();
        let printed = p.text();
        let q = parse_program(&printed).unwrap();
        assert_eq!(printed, q.text());
    }
}
