//! Program syntax: declarations, statements, the `.shy` parser and the
//! statement closure used as the pushdown stack alphabet.

mod parse;

pub use parse::{parse_program, ParseError};

use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// The distinguished constant referring to the undefined object.
pub const NIL: &str = "nil";

/// Index of a declared field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldId(pub u32);

/// Index of a declared procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProcId(pub u32);

/// Handle of an interned statement. Structurally equal statements share one id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StmtId(pub u32);

/// A variable: a declared global or local, or one of the cut-point variables
/// `c0, c1, …` that only the semantics may introduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Global(u32),
    Local(u32),
    Cut(u32),
}

/// A statement. `VarCopy` is an extension: plain `x := y` is taken as a
/// primitive rather than encoded through a scratch field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stmt {
    /// `x.f := y`
    FieldWrite(Var, FieldId, Var),
    /// `x := y.f`
    FieldRead(Var, Var, FieldId),
    /// `x := new`
    New(Var),
    /// `x := y`
    VarCopy(Var, Var),
    /// `[x = y] B`
    GuardEq(Var, Var, StmtId),
    /// `[x != y] B`
    GuardNeq(Var, Var, StmtId),
    /// `B1 + B2`
    Choice(StmtId, StmtId),
    /// `B1; B2`
    Seq(StmtId, StmtId),
    /// procedure call
    Call(ProcId),
}

/// Reserved names: the cut-point variables `c0, c1, …` and the allocation
/// counter `oc` may not appear in program text.
pub fn is_reserved(name: &str) -> bool {
    if name == "oc" {
        return true;
    }
    match name.strip_prefix('c') {
        Some(rest) => !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()),
        None => false,
    }
}

/// Declared name spaces of a program: globals (always containing `nil`),
/// locals and fields. The three spaces are pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decls {
    globals: Vec<String>,
    locals: Vec<String>,
    fields: Vec<String>,
}

impl Decls {
    /// Builds a declaration set, inserting `nil` among the globals when absent.
    pub fn new<S: AsRef<str>>(
        globals: &[S],
        locals: &[S],
        fields: &[S],
    ) -> Result<Decls, ProgramError> {
        let mut g: Vec<String> = globals.iter().map(|s| s.as_ref().to_string()).collect();
        let l: Vec<String> = locals.iter().map(|s| s.as_ref().to_string()).collect();
        let f: Vec<String> = fields.iter().map(|s| s.as_ref().to_string()).collect();
        if !g.iter().any(|n| n == NIL) {
            g.push(NIL.to_string());
        }
        if l.iter().any(|n| n == NIL) || f.iter().any(|n| n == NIL) {
            return Err(ProgramError::Reserved(NIL.into()));
        }
        let mut seen = BTreeSet::new();
        for name in g.iter().chain(&l).chain(&f) {
            if is_reserved(name) {
                return Err(ProgramError::Reserved(name.clone()));
            }
            if !seen.insert(name.clone()) {
                return Err(ProgramError::Duplicate(name.clone()));
            }
        }
        Ok(Decls {
            globals: g,
            locals: l,
            fields: f,
        })
    }

    pub fn n_globals(&self) -> usize {
        self.globals.len()
    }

    pub fn n_locals(&self) -> usize {
        self.locals.len()
    }

    pub fn n_fields(&self) -> usize {
        self.fields.len()
    }

    pub fn globals(&self) -> impl Iterator<Item = &str> {
        self.globals.iter().map(|s| s.as_str())
    }

    pub fn locals(&self) -> impl Iterator<Item = &str> {
        self.locals.iter().map(|s| s.as_str())
    }

    pub fn fields(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|s| s.as_str())
    }

    /// Resolves a variable name, including cut-point names `c0, c1, …`.
    pub fn var(&self, name: &str) -> Option<Var> {
        if let Some(i) = self.globals.iter().position(|n| n == name) {
            return Some(Var::Global(i as u32));
        }
        if let Some(i) = self.locals.iter().position(|n| n == name) {
            return Some(Var::Local(i as u32));
        }
        if let Some(rest) = name.strip_prefix('c') {
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                if let Ok(i) = rest.parse::<u32>() {
                    return Some(Var::Cut(i));
                }
            }
        }
        None
    }

    /// Resolves a program variable (globals and locals only).
    pub fn program_var(&self, name: &str) -> Option<Var> {
        match self.var(name) {
            Some(Var::Cut(_)) | None => None,
            v => v,
        }
    }

    pub fn var_name(&self, v: Var) -> String {
        match v {
            Var::Global(i) => self.globals[i as usize].clone(),
            Var::Local(i) => self.locals[i as usize].clone(),
            Var::Cut(i) => format!("c{i}"),
        }
    }

    pub fn field(&self, name: &str) -> Option<FieldId> {
        self.fields
            .iter()
            .position(|n| n == name)
            .map(|i| FieldId(i as u32))
    }

    pub fn field_name(&self, f: FieldId) -> &str {
        &self.fields[f.0 as usize]
    }

    pub fn nil(&self) -> Var {
        Var::Global(self.globals.iter().position(|n| n == NIL).unwrap() as u32)
    }

    /// All program variables (globals then locals).
    pub fn program_vars(&self) -> impl Iterator<Item = Var> + '_ {
        let g = (0..self.globals.len()).map(|i| Var::Global(i as u32));
        let l = (0..self.locals.len()).map(|i| Var::Local(i as u32));
        g.chain(l)
    }
}

/// Semantic errors raised while assembling a program.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("undeclared {kind} `{name}`")]
    Undeclared { kind: &'static str, name: String },
    #[error("`nil` is constant and cannot be assigned")]
    NilAssigned,
    #[error("reserved name `{0}`")]
    Reserved(String),
    #[error("duplicate declaration of `{0}`")]
    Duplicate(String),
    #[error("missing procedure `main`")]
    MissingMain,
    #[error("procedure `{0}` is called but never defined")]
    UndefinedProc(String),
}

/// A validated program: declarations plus one body per procedure, with all
/// statements interned in a shared arena. `main` is the initial procedure.
#[derive(Debug, Clone)]
pub struct Program {
    decls: Decls,
    proc_names: Vec<String>,
    bodies: Vec<StmtId>,
    stmts: Vec<Stmt>,
    initial: ProcId,
    initial_call: StmtId,
}

impl Program {
    pub fn decls(&self) -> &Decls {
        &self.decls
    }

    pub fn stmt(&self, id: StmtId) -> &Stmt {
        &self.stmts[id.0 as usize]
    }

    pub fn n_procs(&self) -> usize {
        self.proc_names.len()
    }

    pub fn proc_id(&self, name: &str) -> Option<ProcId> {
        self.proc_names
            .iter()
            .position(|n| n == name)
            .map(|i| ProcId(i as u32))
    }

    pub fn proc_name(&self, p: ProcId) -> &str {
        &self.proc_names[p.0 as usize]
    }

    pub fn body(&self, p: ProcId) -> StmtId {
        self.bodies[p.0 as usize]
    }

    pub fn initial(&self) -> ProcId {
        self.initial
    }

    /// The interned `Call(main)` statement that seeds every run.
    pub fn initial_call(&self) -> StmtId {
        self.initial_call
    }

    /// The statement closure `cl` over all procedure bodies: guards and
    /// choices contribute themselves plus their parts, sequencing contributes
    /// only its parts.
    pub fn closure(&self) -> BTreeSet<StmtId> {
        let mut out = BTreeSet::new();
        for p in 0..self.bodies.len() {
            self.cl(self.bodies[p], &mut out);
        }
        out
    }

    fn cl(&self, id: StmtId, out: &mut BTreeSet<StmtId>) {
        match *self.stmt(id) {
            Stmt::Seq(a, b) => {
                self.cl(a, out);
                self.cl(b, out);
            }
            Stmt::Choice(a, b) => {
                out.insert(id);
                self.cl(a, out);
                self.cl(b, out);
            }
            Stmt::GuardEq(_, _, b) | Stmt::GuardNeq(_, _, b) => {
                out.insert(id);
                self.cl(b, out);
            }
            _ => {
                out.insert(id);
            }
        }
    }

    /// Every statement that can appear as a stack symbol in a run: the
    /// closure plus the sequencing nodes it skips (bodies and their
    /// decompositions) plus the initial call.
    pub fn stack_alphabet(&self) -> BTreeSet<StmtId> {
        let mut out = self.closure();
        out.insert(self.initial_call);
        let mut work: Vec<StmtId> = self.bodies.clone();
        while let Some(id) = work.pop() {
            if !out.insert(id) {
                continue;
            }
            match *self.stmt(id) {
                Stmt::Seq(a, b) | Stmt::Choice(a, b) => {
                    work.push(a);
                    work.push(b);
                }
                Stmt::GuardEq(_, _, b) | Stmt::GuardNeq(_, _, b) => work.push(b),
                _ => {}
            }
        }
        out
    }

    /// Canonical text of one statement.
    pub fn stmt_text(&self, id: StmtId) -> String {
        self.print_stmt(id, Level::Choice)
    }

    fn print_stmt(&self, id: StmtId, level: Level) -> String {
        let d = &self.decls;
        match *self.stmt(id) {
            Stmt::FieldWrite(x, f, y) => {
                format!("{}.{} := {}", d.var_name(x), d.field_name(f), d.var_name(y))
            }
            Stmt::FieldRead(x, y, f) => {
                format!("{} := {}.{}", d.var_name(x), d.var_name(y), d.field_name(f))
            }
            Stmt::New(x) => format!("{} := new", d.var_name(x)),
            Stmt::VarCopy(x, y) => format!("{} := {}", d.var_name(x), d.var_name(y)),
            Stmt::GuardEq(x, y, b) => format!(
                "[{} = {}] {}",
                d.var_name(x),
                d.var_name(y),
                self.print_stmt(b, Level::Basic)
            ),
            Stmt::GuardNeq(x, y, b) => format!(
                "[{} != {}] {}",
                d.var_name(x),
                d.var_name(y),
                self.print_stmt(b, Level::Basic)
            ),
            Stmt::Choice(a, b) => {
                let s = format!(
                    "{} + {}",
                    self.print_stmt(a, Level::Choice),
                    self.print_stmt(b, Level::Choice)
                );
                if level == Level::Choice {
                    s
                } else {
                    format!("{{{s}}}")
                }
            }
            Stmt::Seq(a, b) => {
                let s = format!(
                    "{}; {}",
                    self.print_stmt(a, Level::Seq),
                    self.print_stmt(b, Level::Seq)
                );
                match level {
                    Level::Choice | Level::Seq => s,
                    Level::Basic => format!("{{{s}}}"),
                }
            }
            Stmt::Call(p) => self.proc_name(p).to_string(),
        }
    }

    /// Canonical text of the whole program; parses back to an equal program.
    pub fn text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("globals {};\n", self.decls.globals.join(", ")));
        out.push_str(&format!("locals {};\n", self.decls.locals.join(", ")));
        out.push_str(&format!("fields {};\n", self.decls.fields.join(", ")));
        for (i, name) in self.proc_names.iter().enumerate() {
            out.push_str(&format!(
                "proc {} {{ {} }}\n",
                name,
                self.stmt_text(self.bodies[i])
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Level {
    Choice,
    Seq,
    Basic,
}

/// Incremental program construction with name resolution and validation.
/// Procedures may be referenced before they are defined; `finish` checks
/// that every referenced procedure has a body and that `main` exists.
#[derive(Debug, Clone)]
pub struct ProgramBuilder {
    decls: Decls,
    proc_names: Vec<String>,
    bodies: Vec<Option<StmtId>>,
    stmts: Vec<Stmt>,
    dedup: BTreeMap<Stmt, StmtId>,
}

impl ProgramBuilder {
    pub fn new<S: AsRef<str>>(
        globals: &[S],
        locals: &[S],
        fields: &[S],
    ) -> Result<Self, ProgramError> {
        Ok(ProgramBuilder {
            decls: Decls::new(globals, locals, fields)?,
            proc_names: Vec::new(),
            bodies: Vec::new(),
            stmts: Vec::new(),
            dedup: BTreeMap::new(),
        })
    }

    pub fn decls(&self) -> &Decls {
        &self.decls
    }

    fn intern(&mut self, s: Stmt) -> StmtId {
        if let Some(&id) = self.dedup.get(&s) {
            return id;
        }
        let id = StmtId(self.stmts.len() as u32);
        self.stmts.push(s);
        self.dedup.insert(s, id);
        id
    }

    fn var(&self, name: &str) -> Result<Var, ProgramError> {
        if is_reserved(name) {
            return Err(ProgramError::Reserved(name.into()));
        }
        self.decls
            .program_var(name)
            .ok_or_else(|| ProgramError::Undeclared {
                kind: "variable",
                name: name.into(),
            })
    }

    fn assignable(&self, name: &str) -> Result<Var, ProgramError> {
        if name == NIL {
            return Err(ProgramError::NilAssigned);
        }
        self.var(name)
    }

    fn field(&self, name: &str) -> Result<FieldId, ProgramError> {
        self.decls
            .field(name)
            .ok_or_else(|| ProgramError::Undeclared {
                kind: "field",
                name: name.into(),
            })
    }

    /// Resolves a procedure name, creating a forward reference when unseen.
    pub fn proc_ref(&mut self, name: &str) -> Result<ProcId, ProgramError> {
        if is_reserved(name) {
            return Err(ProgramError::Reserved(name.into()));
        }
        if self.decls.program_var(name).is_some() || self.decls.field(name).is_some() {
            return Err(ProgramError::Duplicate(name.into()));
        }
        if let Some(i) = self.proc_names.iter().position(|n| n == name) {
            return Ok(ProcId(i as u32));
        }
        let id = ProcId(self.proc_names.len() as u32);
        self.proc_names.push(name.to_string());
        self.bodies.push(None);
        Ok(id)
    }

    pub fn field_write(&mut self, x: &str, f: &str, y: &str) -> Result<StmtId, ProgramError> {
        let s = Stmt::FieldWrite(self.assignable(x)?, self.field(f)?, self.var(y)?);
        Ok(self.intern(s))
    }

    pub fn field_read(&mut self, x: &str, y: &str, f: &str) -> Result<StmtId, ProgramError> {
        let s = Stmt::FieldRead(self.assignable(x)?, self.var(y)?, self.field(f)?);
        Ok(self.intern(s))
    }

    pub fn new_object(&mut self, x: &str) -> Result<StmtId, ProgramError> {
        let s = Stmt::New(self.assignable(x)?);
        Ok(self.intern(s))
    }

    pub fn var_copy(&mut self, x: &str, y: &str) -> Result<StmtId, ProgramError> {
        let s = Stmt::VarCopy(self.assignable(x)?, self.var(y)?);
        Ok(self.intern(s))
    }

    pub fn guard_eq(&mut self, x: &str, y: &str, body: StmtId) -> Result<StmtId, ProgramError> {
        let s = Stmt::GuardEq(self.var(x)?, self.var(y)?, body);
        Ok(self.intern(s))
    }

    pub fn guard_neq(&mut self, x: &str, y: &str, body: StmtId) -> Result<StmtId, ProgramError> {
        let s = Stmt::GuardNeq(self.var(x)?, self.var(y)?, body);
        Ok(self.intern(s))
    }

    pub fn choice(&mut self, a: StmtId, b: StmtId) -> StmtId {
        self.intern(Stmt::Choice(a, b))
    }

    pub fn seq(&mut self, a: StmtId, b: StmtId) -> StmtId {
        self.intern(Stmt::Seq(a, b))
    }

    pub fn call(&mut self, name: &str) -> Result<StmtId, ProgramError> {
        let p = self.proc_ref(name)?;
        Ok(self.intern(Stmt::Call(p)))
    }

    pub fn proc_def(&mut self, name: &str, body: StmtId) -> Result<ProcId, ProgramError> {
        let id = self.proc_ref(name)?;
        if self.bodies[id.0 as usize].is_some() {
            return Err(ProgramError::Duplicate(name.into()));
        }
        self.bodies[id.0 as usize] = Some(body);
        Ok(id)
    }

    pub fn finish(mut self) -> Result<Program, ProgramError> {
        let initial = self
            .proc_names
            .iter()
            .position(|n| n == "main")
            .map(|i| ProcId(i as u32))
            .ok_or(ProgramError::MissingMain)?;
        for (i, body) in self.bodies.iter().enumerate() {
            if body.is_none() {
                return Err(ProgramError::UndefinedProc(self.proc_names[i].clone()));
            }
        }
        let initial_call = self.intern(Stmt::Call(initial));
        Ok(Program {
            decls: self.decls,
            proc_names: self.proc_names,
            bodies: self.bodies.into_iter().map(Option::unwrap).collect(),
            stmts: self.stmts,
            initial,
            initial_call,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec_alloc() -> Program {
        let mut b = ProgramBuilder::new::<&str>(&[], &["x"], &[]).unwrap();
        let n = b.new_object("x").unwrap();
        let c = b.call("main").unwrap();
        let body = b.seq(n, c);
        b.proc_def("main", body).unwrap();
        b.finish().unwrap()
    }

    #[test]
    fn closure_of_seq_contains_only_parts() {
        let p = rec_alloc();
        let cl = p.closure();
        assert_eq!(cl.len(), 2);
        let texts: Vec<String> = cl.iter().map(|&id| p.stmt_text(id)).collect();
        assert!(texts.contains(&"x := new".to_string()));
        assert!(texts.contains(&"main".to_string()));
    }

    #[test]
    fn closure_of_choice_contains_itself() {
        let mut b = ProgramBuilder::new::<&str>(&[], &[], &[]).unwrap();
        let a = b.call("a").unwrap();
        let c = b.call("b").unwrap();
        let ch = b.choice(a, c);
        b.proc_def("main", ch).unwrap();
        b.proc_def("a", a).unwrap();
        b.proc_def("b", c).unwrap();
        let p = b.finish().unwrap();
        let cl = p.closure();
        let texts: BTreeSet<String> = cl.iter().map(|&id| p.stmt_text(id)).collect();
        assert!(texts.contains("a + b"));
        assert!(texts.contains("a"));
        assert!(texts.contains("b"));
        assert_eq!(cl.len(), 3);
    }

    #[test]
    fn closure_base_case() {
        let mut b = ProgramBuilder::new(&["x"], &["y"], &["f"]).unwrap();
        let w = b.field_write("x", "f", "y").unwrap();
        b.proc_def("main", w).unwrap();
        let p = b.finish().unwrap();
        assert_eq!(p.closure().len(), 1);
    }

    #[test]
    fn closure_is_idempotent() {
        let p = rec_alloc();
        let cl = p.closure();
        for &id in &cl {
            let mut sub = BTreeSet::new();
            p.cl(id, &mut sub);
            assert!(sub.is_subset(&cl));
        }
    }

    #[test]
    fn stack_alphabet_covers_closure_and_bodies() {
        let p = rec_alloc();
        let alpha = p.stack_alphabet();
        assert!(p.closure().is_subset(&alpha));
        assert!(alpha.contains(&p.body(p.initial())));
        assert!(alpha.contains(&p.initial_call()));
    }

    #[test]
    fn nil_cannot_be_assigned() {
        let mut b = ProgramBuilder::new::<&str>(&[], &[], &[]).unwrap();
        assert_eq!(b.new_object("nil").unwrap_err(), ProgramError::NilAssigned);
    }

    #[test]
    fn reserved_names_rejected() {
        assert!(ProgramBuilder::new(&["c0"], &[], &[]).is_err());
        assert!(ProgramBuilder::new(&["oc"], &[], &[]).is_err());
        let mut b = ProgramBuilder::new::<&str>(&[], &[], &[]).unwrap();
        assert!(matches!(b.call("c12"), Err(ProgramError::Reserved(_))));
    }

    #[test]
    fn missing_main_rejected() {
        let mut b = ProgramBuilder::new::<&str>(&[], &["x"], &[]).unwrap();
        let n = b.new_object("x").unwrap();
        b.proc_def("p", n).unwrap();
        assert_eq!(b.finish().unwrap_err(), ProgramError::MissingMain);
    }
}
