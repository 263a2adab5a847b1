//! Model checking for Shylock, a small imperative language with recursive
//! procedures, reference fields and unbounded object allocation.
//!
//! The crate is organised around the pipeline that turns a program text into
//! a verdict about a temporal heap property:
//!
//! * [`syntax`] — declarations, statements, the `.shy` parser and the
//!   statement closure that doubles as the pushdown stack alphabet.
//! * [`heap`] — the heap data model: object identities, variable and field
//!   assignments, reachability, cut points, renamings, isomorphism and
//!   normalization.
//! * [`semantics`] — the concrete (counter-based) and abstract
//!   (identity-reusing) small-step semantics, properness, cut-point
//!   identification and a lockstep differential harness relating the two.
//! * [`pds`] — the k-bounded pushdown-system view of a program under the
//!   abstract semantics, generated on the fly.
//! * [`logic`] — regular heap expressions, linear temporal formulas over
//!   them, lasso-word evaluation and translation to Büchi automata.
//! * [`checker`] — synchronization with the Büchi automaton, `post*`
//!   saturation, repeated-head detection and verdicts.
//! * [`oracles`] — independent brute-force evaluators used by tests.

pub mod checker;
pub mod heap;
pub mod logic;
pub mod oracles;
pub mod pds;
pub mod semantics;
pub mod syntax;

pub use checker::{check, CheckError, CheckOptions, Verdict};
pub use heap::{Heap, Identity, Nat, Renaming};
pub use logic::{Formula, LassoWord, Rite};
pub use pds::{Control, Head, StackSym};
pub use semantics::{Config, Frame};
pub use syntax::{Decls, Program, ProgramBuilder, Stmt, Var};
