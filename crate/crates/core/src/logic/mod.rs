//! Regular heap expressions, linear temporal formulas over them, and their
//! semantics.
//!
//! A `Rite` combines variable tests and field actions into a regular
//! expression denoting a relation between objects of a heap; a heap
//! satisfies one when every reachable object has at least one target. LTL
//! formulas take Rite expressions as atomic propositions; their models are
//! infinite words over sets of expressions, presented finitely as lasso
//! words for testing.

mod buchi;
mod parse;

pub use buchi::{buchi_accepts, ltl_to_buchi, BuchiAutomaton, Cube};
pub use parse::{parse_formula, FormulaError};

use std::collections::BTreeSet;
use std::fmt;

use crate::heap::{Heap, Identity};
use crate::syntax::{Decls, FieldId, Var};

/// A regular heap expression: tests on variables, actions on fields.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rite {
    /// `eps` — the identity relation.
    Eps,
    /// `x` — self-loop on the object named by `x`.
    Test(Var),
    /// `~x` — self-loop on every object not named by `x`.
    NegTest(Var),
    /// `f` — follow field `f`.
    Act(FieldId),
    /// `r1 . r2`
    Cat(Box<Rite>, Box<Rite>),
    /// `r1 + r2`
    Alt(Box<Rite>, Box<Rite>),
    /// `r*`
    Star(Box<Rite>),
}

impl Rite {
    /// Canonical text using declared names; parses back to an equal expression.
    pub fn text(&self, decls: &Decls) -> String {
        self.print(decls, 0)
    }

    // precedence: 0 alt, 1 cat, 2 star/primary
    fn print(&self, decls: &Decls, level: u8) -> String {
        match self {
            Rite::Eps => "eps".into(),
            Rite::Test(v) => decls.var_name(*v),
            Rite::NegTest(v) => format!("~{}", decls.var_name(*v)),
            Rite::Act(f) => decls.field_name(*f).to_string(),
            Rite::Cat(a, b) => {
                let s = format!("{}.{}", a.print(decls, 1), b.print(decls, 1));
                if level > 1 {
                    format!("({s})")
                } else {
                    s
                }
            }
            Rite::Alt(a, b) => {
                let s = format!("{} + {}", a.print(decls, 0), b.print(decls, 0));
                if level > 0 {
                    format!("({s})")
                } else {
                    s
                }
            }
            Rite::Star(r) => format!("{}*", r.print(decls, 2)),
        }
    }
}

/// A temporal formula. `F`, `G`, `|` and `->` are parser sugar over these
/// six constructors.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    Atom(Rite),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
}

impl Formula {
    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Formula {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, other: Formula) -> Formula {
        Formula::And(Box::new(self), Box::new(other))
    }

    pub fn next(self) -> Formula {
        Formula::Next(Box::new(self))
    }

    pub fn until(self, other: Formula) -> Formula {
        Formula::Until(Box::new(self), Box::new(other))
    }

    /// `F φ = true U φ`
    pub fn finally(self) -> Formula {
        Formula::True.until(self)
    }

    /// `G φ = ¬F(¬φ)`
    pub fn globally(self) -> Formula {
        self.not().finally().not()
    }

    pub fn or(self, other: Formula) -> Formula {
        self.not().and(other.not()).not()
    }

    pub fn implies(self, other: Formula) -> Formula {
        self.and(other.not()).not()
    }

    /// Canonical text in the concrete formula syntax.
    pub fn text(&self, decls: &Decls) -> String {
        match self {
            Formula::True => "true".into(),
            Formula::Atom(r) => format!("{{{}}}", r.text(decls)),
            Formula::Not(p) => format!("!{}", p.paren_unary(decls)),
            Formula::And(a, b) => format!("({} & {})", a.text(decls), b.text(decls)),
            Formula::Next(p) => format!("X {}", p.paren_unary(decls)),
            Formula::Until(a, b) => format!("({} U {})", a.text(decls), b.text(decls)),
        }
    }

    fn paren_unary(&self, decls: &Decls) -> String {
        match self {
            Formula::True | Formula::Atom(_) | Formula::Not(_) | Formula::Next(_) => {
                self.text(decls)
            }
            _ => format!("({})", self.text(decls)),
        }
    }
}

/// The atomic propositions occurring in a formula.
pub fn atoms(phi: &Formula) -> BTreeSet<Rite> {
    let mut out = BTreeSet::new();
    collect_atoms(phi, &mut out);
    out
}

fn collect_atoms(phi: &Formula, out: &mut BTreeSet<Rite>) {
    match phi {
        Formula::True => {}
        Formula::Atom(r) => {
            out.insert(r.clone());
        }
        Formula::Not(p) | Formula::Next(p) => collect_atoms(p, out),
        Formula::And(a, b) | Formula::Until(a, b) => {
            collect_atoms(a, out);
            collect_atoms(b, out);
        }
    }
}

/// The targets `{m | n -r-> m}` of an expression from one source object.
/// Star is closed over the identities actually encountered, which stay
/// within the heap's stored entries plus `bot`.
pub fn rite_targets(h: &Heap, r: &Rite, n: Identity) -> BTreeSet<Identity> {
    match r {
        Rite::Eps => BTreeSet::from([n]),
        Rite::Test(x) => {
            if h.var(*x) == n {
                BTreeSet::from([n])
            } else {
                BTreeSet::new()
            }
        }
        Rite::NegTest(x) => {
            if h.var(*x) != n {
                BTreeSet::from([n])
            } else {
                BTreeSet::new()
            }
        }
        Rite::Act(f) => BTreeSet::from([h.field(*f, n)]),
        Rite::Alt(a, b) => {
            let mut out = rite_targets(h, a, n);
            out.extend(rite_targets(h, b, n));
            out
        }
        Rite::Cat(a, b) => {
            let mut out = BTreeSet::new();
            for m in rite_targets(h, a, n) {
                out.extend(rite_targets(h, b, m));
            }
            out
        }
        Rite::Star(inner) => {
            let mut out = BTreeSet::from([n]);
            let mut work = vec![n];
            while let Some(m) = work.pop() {
                for t in rite_targets(h, inner, m) {
                    if out.insert(t) {
                        work.push(t);
                    }
                }
            }
            out
        }
    }
}

/// Modal satisfaction: every reachable object (including `bot`) has a target.
pub fn heap_sat(h: &Heap, r: &Rite) -> bool {
    h.reach_all()
        .into_iter()
        .all(|n| !rite_targets(h, r, n).is_empty())
}

/// A finite presentation of an infinite word: `stem · loop^ω` over letters
/// that are sets of expressions. The loop is nonempty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LassoWord {
    stem: Vec<BTreeSet<Rite>>,
    looping: Vec<BTreeSet<Rite>>,
}

impl LassoWord {
    pub fn new(stem: Vec<BTreeSet<Rite>>, looping: Vec<BTreeSet<Rite>>) -> Option<LassoWord> {
        if looping.is_empty() {
            return None;
        }
        Some(LassoWord { stem, looping })
    }

    /// Number of distinct positions (stem plus one loop unrolling).
    pub fn len(&self) -> usize {
        self.stem.len() + self.looping.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the loop is never empty
    }

    pub fn letter(&self, i: usize) -> &BTreeSet<Rite> {
        if i < self.stem.len() {
            &self.stem[i]
        } else {
            &self.looping[i - self.stem.len()]
        }
    }

    /// Successor position, wrapping from the last position to the loop start.
    pub fn next(&self, i: usize) -> usize {
        if i + 1 < self.len() {
            i + 1
        } else {
            self.stem.len()
        }
    }

    /// Debug format `stem | loop` with letters as `{r1,r2}`.
    pub fn render(&self, decls: &Decls) -> String {
        let fmt_letter = |l: &BTreeSet<Rite>| {
            let inner: Vec<String> = l.iter().map(|r| r.text(decls)).collect();
            format!("{{{}}}", inner.join(","))
        };
        let stem: Vec<String> = self.stem.iter().map(fmt_letter).collect();
        let looping: Vec<String> = self.looping.iter().map(fmt_letter).collect();
        format!("{} | {}", stem.join(" "), looping.join(" "))
    }
}

impl fmt::Display for LassoWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "lasso(|stem|={}, |loop|={})",
            self.stem.len(),
            self.looping.len()
        )
    }
}

/// Exact LTL satisfaction on a lasso word, by fixpoint iteration of Until
/// valuations over the finitely many positions.
pub fn word_sat(w: &LassoWord, phi: &Formula) -> bool {
    eval(w, phi)[0]
}

fn eval(w: &LassoWord, phi: &Formula) -> Vec<bool> {
    let n = w.len();
    match phi {
        Formula::True => vec![true; n],
        Formula::Atom(r) => (0..n).map(|i| w.letter(i).contains(r)).collect(),
        Formula::Not(p) => eval(w, p).into_iter().map(|b| !b).collect(),
        Formula::And(a, b) => {
            let va = eval(w, a);
            let vb = eval(w, b);
            va.into_iter().zip(vb).map(|(x, y)| x && y).collect()
        }
        Formula::Next(p) => {
            let v = eval(w, p);
            (0..n).map(|i| v[w.next(i)]).collect()
        }
        Formula::Until(a, b) => {
            let va = eval(w, a);
            let vb = eval(w, b);
            let mut v = vb.clone();
            loop {
                let mut changed = false;
                for i in (0..n).rev() {
                    let new = vb[i] || (va[i] && v[w.next(i)]);
                    if new != v[i] {
                        v[i] = new;
                        changed = true;
                    }
                }
                if !changed {
                    return v;
                }
            }
        }
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Declarations for the three-node list: globals `nil, first, last`,
    /// field `next`.
    pub fn list_decls() -> Decls {
        Decls::new::<&str>(&["nil", "first", "last"], &[], &["next"]).unwrap()
    }

    /// `first -> 0 -next-> 1 -next-> 2 <- last`.
    pub fn list_heap() -> Heap {
        let d = list_decls();
        let mut h = Heap::initial(&d);
        h.set_var(d.var("first").unwrap(), Identity::Obj(0));
        h.set_var(d.var("last").unwrap(), Identity::Obj(2));
        let f = d.field("next").unwrap();
        h.set_field(f, 0, Identity::Obj(1));
        h.set_field(f, 1, Identity::Obj(2));
        h
    }

    /// The list with the middle link cut: `next(1) = bot`, `last` still at 2.
    pub fn broken_list_heap() -> Heap {
        let d = list_decls();
        let mut h = list_heap();
        h.set_field(d.field("next").unwrap(), 1, Identity::Bot);
        h
    }

    /// `first.next*.last + ~first`.
    pub fn chain_expression() -> Rite {
        let d = list_decls();
        let first = Rite::Test(d.var("first").unwrap());
        let last = Rite::Test(d.var("last").unwrap());
        let next = Rite::Act(d.field("next").unwrap());
        Rite::Alt(
            Box::new(Rite::Cat(
                Box::new(Rite::Cat(
                    Box::new(first.clone()),
                    Box::new(Rite::Star(Box::new(next))),
                )),
                Box::new(last),
            )),
            Box::new(Rite::NegTest(d.var("first").unwrap())),
        )
    }
}
