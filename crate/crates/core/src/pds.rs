//! The k-bounded pushdown-system view of a program under the abstract
//! semantics. Control locations are normalized heaps plus the out-of-bound
//! sink `⊤`; stack symbols are statements, saved heaps and the bottom
//! stutter symbol `Z`. The system is never materialized: `successors_k` is
//! a rule oracle queried on demand, and `explore` is a bounded explicit
//! enumeration used as an independent cross-check of `post*`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::heap::Heap;
use crate::semantics::{abstract_step, Config, Frame};
use crate::syntax::{Program, StmtId};

/// A control location: a normalized heap, or the out-of-bound sink.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Control {
    Heap(Heap),
    Top,
}

/// A stack symbol: a statement from the program's stack alphabet, a saved
/// heap, or the bottom stutter symbol `Z`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StackSym {
    Stmt(StmtId),
    Saved(Heap),
    Z,
}

/// A head: control location plus topmost stack symbol.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Head {
    pub control: Control,
    pub top: StackSym,
}

fn sym_to_frame(s: &StackSym) -> Option<Frame> {
    match s {
        StackSym::Stmt(id) => Some(Frame::Stmt(*id)),
        StackSym::Saved(h) => Some(Frame::Saved(h.clone())),
        StackSym::Z => None,
    }
}

fn frame_to_sym(f: Frame) -> StackSym {
    match f {
        Frame::Stmt(id) => StackSym::Stmt(id),
        Frame::Saved(h) => StackSym::Saved(h),
    }
}

/// The initial stack `main • Z`.
pub fn initial_stack(prog: &Program) -> Vec<StackSym> {
    vec![StackSym::Stmt(prog.initial_call()), StackSym::Z]
}

/// Rules of the k-bounded system firing at a head, as pairs of successor
/// control and pushed word (index 0 becomes the new top; length ≤ 2):
///
/// * `⊤` self-loops on any symbol.
/// * `Z` stutters.
/// * Otherwise the abstract step relation is lifted to the head; a stuck or
///   aborting head rewrites its top to `Z`, and any successor whose visible
///   heap exceeds `k` objects is replaced by `(⊤, top)`.
pub fn successors_k(
    control: &Control,
    top: &StackSym,
    prog: &Program,
    k: usize,
) -> Vec<(Control, Vec<StackSym>)> {
    let h = match control {
        Control::Top => return vec![(Control::Top, vec![top.clone()])],
        Control::Heap(h) => h,
    };
    let frame = match sym_to_frame(top) {
        None => return vec![(control.clone(), vec![StackSym::Z])],
        Some(f) => f,
    };
    let cfg = Config {
        heap: h.clone(),
        stack: vec![frame],
        counter: None,
    };
    let succs = abstract_step(&cfg, prog).unwrap_or_default();
    if succs.is_empty() {
        return vec![(control.clone(), vec![StackSym::Z])];
    }
    let mut out: Vec<(Control, Vec<StackSym>)> = Vec::new();
    for s in succs {
        debug_assert!(s.stack.len() <= 2);
        let item = if s.heap.visible_size() > k {
            (Control::Top, vec![top.clone()])
        } else {
            (
                Control::Heap(s.heap),
                s.stack.into_iter().map(frame_to_sym).collect(),
            )
        };
        if !out.contains(&item) {
            out.push(item);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExploreError {
    #[error("explicit exploration exceeded {0} configurations")]
    ConfigCap(usize),
}

/// Discovered rules keyed by head.
pub type RuleMap = BTreeMap<(Control, StackSym), Vec<(Control, Vec<StackSym>)>>;

/// Result of a bounded explicit enumeration of reachable configurations.
#[derive(Debug, Clone)]
pub struct Exploration {
    /// Reachable configurations with stack depth within the bound
    /// (stacks listed top-first).
    pub configs: BTreeSet<(Control, Vec<StackSym>)>,
    /// Distinct control locations seen on those configurations.
    pub controls: BTreeSet<Control>,
    /// Rules discovered, keyed by head.
    pub rules: RuleMap,
    pub reached_top: bool,
}

/// Breadth-first enumeration of configurations reachable from
/// `⟨H0, main • Z⟩`, pruning stacks deeper than `max_stack`.
pub fn explore(
    prog: &Program,
    k: usize,
    max_stack: usize,
    max_configs: usize,
) -> Result<Exploration, ExploreError> {
    let init = (
        Control::Heap(Heap::initial(prog.decls())),
        initial_stack(prog),
    );
    let mut configs = BTreeSet::new();
    let mut controls = BTreeSet::new();
    let mut rules = RuleMap::new();
    let mut reached_top = false;
    let mut queue = VecDeque::new();
    configs.insert(init.clone());
    controls.insert(init.0.clone());
    queue.push_back(init);
    while let Some((ctrl, stack)) = queue.pop_front() {
        if configs.len() > max_configs {
            return Err(ExploreError::ConfigCap(max_configs));
        }
        let Some(top) = stack.first() else { continue };
        let head = (ctrl.clone(), top.clone());
        let succs = rules
            .entry(head)
            .or_insert_with(|| successors_k(&ctrl, top, prog, k))
            .clone();
        for (c2, w) in succs {
            if c2 == Control::Top {
                reached_top = true;
            }
            let mut stack2 = Vec::with_capacity(w.len() + stack.len() - 1);
            stack2.extend(w);
            stack2.extend_from_slice(&stack[1..]);
            if stack2.len() > max_stack {
                continue;
            }
            controls.insert(c2.clone());
            let cfg = (c2, stack2);
            if configs.insert(cfg.clone()) {
                queue.push_back(cfg);
            }
        }
    }
    Ok(Exploration {
        configs,
        controls,
        rules,
        reached_top,
    })
}
