//! The heap data model: object identities, variable and field assignments,
//! reachability, the purely local part, cut points, renamings, isomorphism,
//! normalization and size accounting.
//!
//! A heap maps every declared variable (plus the currently active cut-point
//! variables `c0, c1, …`) to an identity, and each field to a finite partial
//! map over natural identities. `bot` is the undefined object: every field
//! maps `bot` to `bot`, and entries with image `bot` are not stored, so the
//! representation enforces both invariants and makes structural equality
//! meaningful after normalization.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::syntax::{Decls, FieldId, Var};

/// Natural object identities.
pub type Nat = u64;

/// An object identity: a natural number or the undefined object `bot`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Identity {
    Bot,
    Obj(Nat),
}

impl Identity {
    pub fn is_bot(self) -> bool {
        matches!(self, Identity::Bot)
    }

    pub fn nat(self) -> Option<Nat> {
        match self {
            Identity::Bot => None,
            Identity::Obj(n) => Some(n),
        }
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Identity::Bot => write!(f, "bot"),
            Identity::Obj(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeapError {
    #[error("unknown variable `{0}`")]
    UnknownVar(String),
}

/// A heap: variable assignment plus one finite field map per declared field.
///
/// Cut-point variables are stored as a prefix `c0..c{j-1}`; they are bound
/// only by calls and returns and never hold `bot`, so an absent cut-point
/// name reads as `bot`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Heap {
    globals: Vec<Identity>,
    locals: Vec<Identity>,
    cuts: Vec<Nat>,
    fields: Vec<BTreeMap<Nat, Nat>>,
}

impl Heap {
    /// The heap with every variable undefined and all field maps empty.
    pub fn initial(decls: &Decls) -> Heap {
        Heap {
            globals: vec![Identity::Bot; decls.n_globals()],
            locals: vec![Identity::Bot; decls.n_locals()],
            cuts: Vec::new(),
            fields: vec![BTreeMap::new(); decls.n_fields()],
        }
    }

    pub fn n_fields(&self) -> usize {
        self.fields.len()
    }

    /// Value of a variable; cut-point variables beyond the active prefix read as `bot`.
    pub fn var(&self, v: Var) -> Identity {
        match v {
            Var::Global(i) => self.globals[i as usize],
            Var::Local(i) => self.locals[i as usize],
            Var::Cut(i) => self
                .cuts
                .get(i as usize)
                .copied()
                .map(Identity::Obj)
                .unwrap_or(Identity::Bot),
        }
    }

    /// Sets a variable. Cut-point variables can only extend or shrink the
    /// active prefix: binding `c{j}` requires `c0..c{j-1}` active, and only
    /// the last active one can be unbound.
    pub fn set_var(&mut self, v: Var, id: Identity) {
        match v {
            Var::Global(i) => self.globals[i as usize] = id,
            Var::Local(i) => self.locals[i as usize] = id,
            Var::Cut(i) => {
                let i = i as usize;
                match id {
                    Identity::Obj(n) if i == self.cuts.len() => self.cuts.push(n),
                    Identity::Obj(n) if i < self.cuts.len() => self.cuts[i] = n,
                    Identity::Bot if i + 1 == self.cuts.len() => {
                        self.cuts.pop();
                    }
                    _ => panic!("cut-point variables form a prefix c0..c{{j-1}}"),
                }
            }
        }
    }

    pub fn active_cuts(&self) -> &[Nat] {
        &self.cuts
    }

    pub fn set_cuts(&mut self, cuts: Vec<Nat>) {
        self.cuts = cuts;
    }

    pub fn clear_locals(&mut self) {
        for l in &mut self.locals {
            *l = Identity::Bot;
        }
    }

    pub fn set_locals_from(&mut self, other: &Heap) {
        self.locals = other.locals.clone();
    }

    /// `h(f)(src)`; defaults to `bot`, and `h(f)(bot) = bot` always.
    pub fn field(&self, f: FieldId, src: Identity) -> Identity {
        match src {
            Identity::Bot => Identity::Bot,
            Identity::Obj(n) => self.fields[f.0 as usize]
                .get(&n)
                .copied()
                .map(Identity::Obj)
                .unwrap_or(Identity::Bot),
        }
    }

    /// Updates `h(f)(src) := img`; a `bot` image removes the entry.
    pub fn set_field(&mut self, f: FieldId, src: Nat, img: Identity) {
        let map = &mut self.fields[f.0 as usize];
        match img {
            Identity::Bot => {
                map.remove(&src);
            }
            Identity::Obj(m) => {
                map.insert(src, m);
            }
        }
    }

    /// Removes every field entry whose source is `n` (a fresh object has all
    /// fields undefined).
    pub fn clear_fields_of(&mut self, n: Nat) {
        for map in &mut self.fields {
            map.remove(&n);
        }
    }

    fn field_ids(&self) -> impl Iterator<Item = FieldId> {
        (0..self.fields.len()).map(|i| FieldId(i as u32))
    }

    /// Values of all variables: globals, locals and active cut-point variables.
    pub fn all_var_values(&self) -> impl Iterator<Item = Identity> + '_ {
        self.globals
            .iter()
            .copied()
            .chain(self.locals.iter().copied())
            .chain(self.cuts.iter().map(|&n| Identity::Obj(n)))
    }

    fn locals_cuts_values(&self) -> impl Iterator<Item = Identity> + '_ {
        self.locals
            .iter()
            .copied()
            .chain(self.cuts.iter().map(|&n| Identity::Obj(n)))
    }

    fn globals_cuts_values(&self) -> impl Iterator<Item = Identity> + '_ {
        self.globals
            .iter()
            .copied()
            .chain(self.cuts.iter().map(|&n| Identity::Obj(n)))
    }

    /// Least set containing the given identities and closed under every
    /// field map (which send `bot` to `bot` and absent sources to `bot`).
    pub fn reach(&self, starts: impl IntoIterator<Item = Identity>) -> BTreeSet<Identity> {
        let mut seen = BTreeSet::new();
        let mut work: Vec<Identity> = starts.into_iter().collect();
        while let Some(id) = work.pop() {
            if !seen.insert(id) {
                continue;
            }
            if let Identity::Obj(n) = id {
                for f in self.field_ids() {
                    let img = self.field(f, Identity::Obj(n));
                    if !seen.contains(&img) {
                        work.push(img);
                    }
                }
            }
        }
        seen
    }

    /// Identities reachable from the named variables (cut-point names allowed).
    pub fn reachable_named(
        &self,
        decls: &Decls,
        names: &[&str],
    ) -> Result<BTreeSet<Identity>, HeapError> {
        let mut starts = Vec::with_capacity(names.len());
        for name in names {
            let v = decls
                .var(name)
                .ok_or_else(|| HeapError::UnknownVar((*name).to_string()))?;
            starts.push(self.var(v));
        }
        Ok(self.reach(starts))
    }

    /// Reachable from all variables in scope (globals, locals, cut points).
    pub fn reach_all(&self) -> BTreeSet<Identity> {
        self.reach(self.all_var_values())
    }

    /// Reachable from the global variables.
    pub fn reach_globals(&self) -> BTreeSet<Identity> {
        self.reach(self.globals.iter().copied())
    }

    /// Reachable from globals and cut-point variables.
    pub fn reach_globals_cuts(&self) -> BTreeSet<Identity> {
        self.reach(self.globals_cuts_values())
    }

    /// Reachable from locals and cut-point variables.
    pub fn reach_locals_cuts(&self) -> BTreeSet<Identity> {
        self.reach(self.locals_cuts_values())
    }

    /// The purely local part: reachable from locals or cut-point variables
    /// but not from globals. Never contains `bot` (`nil` is global).
    pub fn purely_local(&self) -> BTreeSet<Nat> {
        let global = self.reach_globals();
        self.reach_locals_cuts()
            .into_iter()
            .filter_map(Identity::nat)
            .filter(|&n| !global.contains(&Identity::Obj(n)))
            .collect()
    }

    /// Cut points: objects on the boundary between the global part and the
    /// purely local part — globally reachable objects that a local or
    /// cut-point variable names directly, or that a field of a purely local
    /// object points to. `bot` is never a cut point.
    pub fn cut_points(&self) -> BTreeSet<Nat> {
        let global = self.reach_globals();
        let mut cand: BTreeSet<Identity> = self.locals_cuts_values().collect();
        for n in self.purely_local() {
            for f in self.field_ids() {
                cand.insert(self.field(f, Identity::Obj(n)));
            }
        }
        cand.into_iter()
            .filter_map(Identity::nat)
            .filter(|&n| global.contains(&Identity::Obj(n)))
            .collect()
    }

    /// Number of objects in the visible heap (`bot` excluded).
    pub fn visible_size(&self) -> usize {
        self.reach_all().iter().filter(|id| !id.is_bot()).count()
    }

    /// Drops every field entry whose source is unreachable. Idempotent;
    /// preserves the variable assignment, reachability, and satisfaction of
    /// every regular heap expression.
    pub fn normalize(&self) -> Heap {
        let keep: BTreeSet<Nat> = self
            .reach_all()
            .into_iter()
            .filter_map(Identity::nat)
            .collect();
        let mut out = self.clone();
        for map in &mut out.fields {
            map.retain(|src, _| keep.contains(src));
        }
        out
    }

    pub fn is_normalized(&self) -> bool {
        self == &self.normalize()
    }

    /// The unique isomorphism between the reachable parts of two heaps over
    /// the same declarations, if one exists: a bijection `a` with
    /// `a(h(x)) = h'(x)` for every variable and `a(h(f)(n)) = h'(f)(a(n))`
    /// for every reachable `n`. Fields are deterministic, so the mapping is
    /// forced by a parallel traversal from the variables.
    pub fn isomorphic(&self, other: &Heap) -> Option<BTreeMap<Identity, Identity>> {
        debug_assert_eq!(self.globals.len(), other.globals.len());
        debug_assert_eq!(self.locals.len(), other.locals.len());
        debug_assert_eq!(self.fields.len(), other.fields.len());
        let mut fwd: BTreeMap<Identity, Identity> = BTreeMap::new();
        let mut bwd: BTreeMap<Identity, Identity> = BTreeMap::new();
        let mut work: Vec<(Identity, Identity)> = Vec::new();
        for i in 0..self.globals.len() {
            work.push((self.globals[i], other.globals[i]));
        }
        for i in 0..self.locals.len() {
            work.push((self.locals[i], other.locals[i]));
        }
        for i in 0..self.cuts.len().max(other.cuts.len()) {
            let v = Var::Cut(i as u32);
            work.push((self.var(v), other.var(v)));
        }
        while let Some((a, b)) = work.pop() {
            if let Some(&b2) = fwd.get(&a) {
                if b2 != b {
                    return None;
                }
                continue;
            }
            if bwd.contains_key(&b) {
                return None; // two sources would map onto b
            }
            if a.is_bot() != b.is_bot() {
                return None;
            }
            fwd.insert(a, b);
            bwd.insert(b, a);
            if let (Identity::Obj(_), Identity::Obj(_)) = (a, b) {
                for f in self.field_ids() {
                    work.push((self.field(f, a), other.field(f, b)));
                }
            }
        }
        Some(fwd)
    }

    /// Multi-line dump: one `var` line per variable sorted by name, then one
    /// `field` line per field sorted by field name listing every reachable
    /// source ascending.
    pub fn dump(&self, decls: &Decls) -> String {
        self.dump_parts(decls).join("\n")
    }

    /// The dump on a single line, parts joined by `; `.
    pub fn dump_line(&self, decls: &Decls) -> String {
        self.dump_parts(decls).join("; ")
    }

    fn dump_parts(&self, decls: &Decls) -> Vec<String> {
        let mut vars: Vec<(String, Identity)> = Vec::new();
        for (i, v) in self.globals.iter().enumerate() {
            vars.push((decls.var_name(Var::Global(i as u32)), *v));
        }
        for (i, v) in self.locals.iter().enumerate() {
            vars.push((decls.var_name(Var::Local(i as u32)), *v));
        }
        for (i, n) in self.cuts.iter().enumerate() {
            vars.push((format!("c{i}"), Identity::Obj(*n)));
        }
        vars.sort();
        let mut parts: Vec<String> = vars
            .into_iter()
            .map(|(name, id)| format!("var {name} = {id}"))
            .collect();
        let reach: Vec<Nat> = self
            .reach_all()
            .into_iter()
            .filter_map(Identity::nat)
            .collect();
        let mut field_names: Vec<(String, FieldId)> = self
            .field_ids()
            .map(|f| (decls.field_name(f).to_string(), f))
            .collect();
        field_names.sort();
        for (name, f) in field_names {
            let entries: Vec<String> = reach
                .iter()
                .map(|&src| format!("{} -> {}", src, self.field(f, Identity::Obj(src))))
                .collect();
            if entries.is_empty() {
                parts.push(format!("field {name}:"));
            } else {
                parts.push(format!("field {name}: {}", entries.join(", ")));
            }
        }
        parts
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenamingError {
    #[error("renaming transpositions must be pairwise disjoint")]
    Overlap,
}

/// A finite involutive renaming of identities, given as disjoint
/// transpositions `n <-> m`. It is injective on all identities, fixes `bot`,
/// is the identity outside the listed transpositions, and is its own inverse.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Renaming {
    map: BTreeMap<Nat, Nat>,
}

impl Renaming {
    pub fn identity() -> Renaming {
        Renaming::default()
    }

    pub fn from_pairs(pairs: &[(Nat, Nat)]) -> Result<Renaming, RenamingError> {
        let mut map = BTreeMap::new();
        for &(a, b) in pairs {
            if a == b {
                continue;
            }
            if map.contains_key(&a) || map.contains_key(&b) {
                return Err(RenamingError::Overlap);
            }
            map.insert(a, b);
            map.insert(b, a);
        }
        Ok(Renaming { map })
    }

    pub fn is_identity(&self) -> bool {
        self.map.is_empty()
    }

    /// The transpositions, each listed once with the smaller element first.
    pub fn pairs(&self) -> Vec<(Nat, Nat)> {
        self.map
            .iter()
            .filter(|(a, b)| a < b)
            .map(|(&a, &b)| (a, b))
            .collect()
    }

    pub fn apply(&self, id: Identity) -> Identity {
        match id {
            Identity::Bot => Identity::Bot,
            Identity::Obj(n) => Identity::Obj(self.map.get(&n).copied().unwrap_or(n)),
        }
    }

    fn apply_nat(&self, n: Nat) -> Nat {
        self.map.get(&n).copied().unwrap_or(n)
    }

    /// `r(h)(x) = r(h(x))` and `r(h)(f)(n) = r(h(f)(r⁻¹(n)))`; with an
    /// involution this relocates each stored entry `src -> img` to
    /// `r(src) -> r(img)`.
    pub fn apply_heap(&self, h: &Heap) -> Heap {
        if self.is_identity() {
            return h.clone();
        }
        Heap {
            globals: h.globals.iter().map(|&v| self.apply(v)).collect(),
            locals: h.locals.iter().map(|&v| self.apply(v)).collect(),
            cuts: h.cuts.iter().map(|&n| self.apply_nat(n)).collect(),
            fields: h
                .fields
                .iter()
                .map(|m| {
                    m.iter()
                        .map(|(&src, &img)| (self.apply_nat(src), self.apply_nat(img)))
                        .collect()
                })
                .collect(),
        }
    }
}
