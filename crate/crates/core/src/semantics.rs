//! The two small-step semantics and the machinery relating them.
//!
//! The concrete semantics allocates monotonically from a counter held
//! outside the heap, so identities are globally fresh. The abstract
//! semantics reuses identities: `new` picks the minimal unused one, calls
//! record cut points in cut-point variables, and returns resolve name
//! clashes between the returning heap and the caller's purely local part by
//! a minimal renaming before restoring the caller's locals. `lockstep_bisim`
//! runs both semantics side by side and checks that they stay related by
//! heap isomorphism with cut-point identification.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::heap::{Heap, Identity, Nat, Renaming};
use crate::syntax::{Decls, Program, Stmt, StmtId};

/// A stack entry: a pending statement or a heap saved by a call.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Frame {
    Stmt(StmtId),
    Saved(Heap),
}

/// A machine state: current heap, stack (index 0 is the top) and, under the
/// concrete semantics only, the allocation counter. The counter always
/// strictly exceeds every identity allocated so far.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Config {
    pub heap: Heap,
    pub stack: Vec<Frame>,
    pub counter: Option<Nat>,
}

impl Config {
    pub fn top(&self) -> Option<&Frame> {
        self.stack.first()
    }

    fn replace_top(&self, heap: Heap, top: Vec<Frame>, counter: Option<Nat>) -> Config {
        let mut stack = Vec::with_capacity(top.len() + self.stack.len() - 1);
        stack.extend(top);
        stack.extend_from_slice(&self.stack[1..]);
        Config {
            heap,
            stack,
            counter,
        }
    }

    /// Rendering for reports: one-line heap dump plus the stack symbols.
    pub fn describe(&self, prog: &Program) -> String {
        let syms: Vec<String> = self
            .stack
            .iter()
            .map(|f| match f {
                Frame::Stmt(id) => format!("\"{}\"", prog.stmt_text(*id)),
                Frame::Saved(h) => format!("<{}>", h.dump_line(prog.decls())),
            })
            .collect();
        let counter = match self.counter {
            Some(c) => format!(" counter={c}"),
            None => String::new(),
        };
        format!(
            "{} | stack=[{}]{}",
            self.heap.dump_line(prog.decls()),
            syms.join(", "),
            counter
        )
    }
}

/// Dynamic errors: both semantics leave a field write on an undefined object
/// undefined, so executing one aborts the branch.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("null dereference on write: `{var}` is bot in `{var}.{field} := …`")]
    NullFieldWrite { var: String, field: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Concrete,
    Abstract,
}

/// The initial configuration: all variables undefined, stack holding the
/// call of the initial procedure; the concrete counter starts at 0.
pub fn initial_config(prog: &Program, concrete: bool) -> Config {
    Config {
        heap: Heap::initial(prog.decls()),
        stack: vec![Frame::Stmt(prog.initial_call())],
        counter: if concrete { Some(0) } else { None },
    }
}

/// Least natural identity unused in the heap.
pub fn fresh_min(h: &Heap) -> Nat {
    let used = h.reach_all();
    (0..).find(|&n| !used.contains(&Identity::Obj(n))).unwrap()
}

/// Variable part of the call rule: clear locals and previously active
/// cut-point variables, then bind `c0..c{j-1}` to the caller's cut points in
/// ascending order. No normalization (shared by both semantics).
fn call_transform(h: &Heap) -> Heap {
    let cps: Vec<Nat> = h.cut_points().into_iter().collect();
    let mut out = h.clone();
    out.clear_locals();
    out.set_cuts(cps);
    out
}

/// The callee's starting heap under the abstract semantics (normalized).
pub fn call_heap(h: &Heap) -> Heap {
    call_transform(h).normalize()
}

/// Concrete return: restore the caller's locals and cut-point variables;
/// field maps are left alone (the caller's purely local entries survive in
/// the current heap untouched).
fn concrete_return(hc: &Heap, hl: &Heap) -> Heap {
    let mut out = hc.clone();
    out.set_locals_from(hl);
    out.set_cuts(hl.active_cuts().to_vec());
    out
}

/// Abstract return. Name clashes `N` are the identities purely local in the
/// saved caller heap that the returning heap reaches from globals; they are
/// renamed, ascending, to the least identities that neither the returning
/// heap (locals cleared) nor the caller's purely local part uses. Then the
/// caller's locals, cut-point variables and purely-local field entries are
/// restored, and the result is normalized.
pub fn return_combine(hc: &Heap, hl: &Heap) -> Heap {
    let caller_local = hl.purely_local();
    let hc_global = hc.reach_globals();
    let clashes: Vec<Nat> = caller_local
        .iter()
        .copied()
        .filter(|&n| hc_global.contains(&Identity::Obj(n)))
        .collect();
    let rho = if clashes.is_empty() {
        Renaming::identity()
    } else {
        let mut forbidden: std::collections::BTreeSet<Nat> = {
            let mut cleared = hc.clone();
            cleared.clear_locals();
            cleared
                .reach_all()
                .into_iter()
                .filter_map(Identity::nat)
                .collect()
        };
        forbidden.extend(caller_local.iter().copied());
        let mut targets = Vec::with_capacity(clashes.len());
        let mut next = 0;
        while targets.len() < clashes.len() {
            if !forbidden.contains(&next) {
                targets.push(next);
            }
            next += 1;
        }
        let pairs: Vec<(Nat, Nat)> = clashes.iter().copied().zip(targets).collect();
        Renaming::from_pairs(&pairs).expect("clash sources and fresh targets are disjoint")
    };
    let mut out = rho.apply_heap(hc);
    out.set_locals_from(hl);
    out.set_cuts(hl.active_cuts().to_vec());
    for f in 0..hl.n_fields() {
        let f = crate::syntax::FieldId(f as u32);
        for &n in &caller_local {
            out.set_field(f, n, hl.field(f, Identity::Obj(n)));
        }
    }
    out.normalize()
}

fn step(c: &Config, prog: &Program, mode: Mode) -> Result<Vec<Config>, StepError> {
    let Some(top) = c.top() else {
        return Ok(Vec::new()); // terminated
    };
    let decls = prog.decls();
    let abs = mode == Mode::Abstract;
    let heap_changed = |h: Heap| if abs { h.normalize() } else { h };
    let succs = match top {
        Frame::Saved(hl) => {
            let heap = match mode {
                Mode::Concrete => concrete_return(&c.heap, hl),
                Mode::Abstract => return_combine(&c.heap, hl),
            };
            vec![c.replace_top(heap, vec![], c.counter)]
        }
        Frame::Stmt(id) => match *prog.stmt(*id) {
            Stmt::FieldWrite(x, f, y) => {
                let Identity::Obj(src) = c.heap.var(x) else {
                    return Err(StepError::NullFieldWrite {
                        var: decls.var_name(x),
                        field: decls.field_name(f).to_string(),
                    });
                };
                let mut h = c.heap.clone();
                h.set_field(f, src, c.heap.var(y));
                vec![c.replace_top(heap_changed(h), vec![], c.counter)]
            }
            Stmt::FieldRead(x, y, f) => {
                let mut h = c.heap.clone();
                h.set_var(x, c.heap.field(f, c.heap.var(y)));
                vec![c.replace_top(heap_changed(h), vec![], c.counter)]
            }
            Stmt::VarCopy(x, y) => {
                let mut h = c.heap.clone();
                h.set_var(x, c.heap.var(y));
                vec![c.replace_top(heap_changed(h), vec![], c.counter)]
            }
            Stmt::New(x) => {
                let mut h = c.heap.clone();
                let (n, counter) = match mode {
                    Mode::Concrete => {
                        let ctr = c.counter.expect("concrete configuration carries a counter");
                        (ctr, Some(ctr + 1))
                    }
                    Mode::Abstract => (fresh_min(&c.heap), None),
                };
                h.set_var(x, Identity::Obj(n));
                h.clear_fields_of(n);
                vec![c.replace_top(heap_changed(h), vec![], counter)]
            }
            Stmt::GuardEq(x, y, body) => {
                if c.heap.var(x) == c.heap.var(y) {
                    vec![c.replace_top(c.heap.clone(), vec![Frame::Stmt(body)], c.counter)]
                } else {
                    vec![]
                }
            }
            Stmt::GuardNeq(x, y, body) => {
                if c.heap.var(x) != c.heap.var(y) {
                    vec![c.replace_top(c.heap.clone(), vec![Frame::Stmt(body)], c.counter)]
                } else {
                    vec![]
                }
            }
            Stmt::Choice(a, b) => {
                let mut out = vec![c.replace_top(c.heap.clone(), vec![Frame::Stmt(a)], c.counter)];
                if a != b {
                    out.push(c.replace_top(c.heap.clone(), vec![Frame::Stmt(b)], c.counter));
                }
                out
            }
            Stmt::Seq(a, b) => {
                vec![c.replace_top(
                    c.heap.clone(),
                    vec![Frame::Stmt(a), Frame::Stmt(b)],
                    c.counter,
                )]
            }
            Stmt::Call(p) => {
                let saved = c.heap.clone();
                let entered = match mode {
                    Mode::Concrete => call_transform(&c.heap),
                    Mode::Abstract => call_heap(&c.heap),
                };
                vec![c.replace_top(
                    entered,
                    vec![Frame::Stmt(prog.body(p)), Frame::Saved(saved)],
                    c.counter,
                )]
            }
        },
    };
    Ok(succs)
}

/// One step of the concrete semantics. An empty result means the
/// configuration is stuck (failed guard or terminated).
pub fn concrete_step(c: &Config, prog: &Program) -> Result<Vec<Config>, StepError> {
    debug_assert!(c.counter.is_some());
    step(c, prog, Mode::Concrete)
}

/// One step of the abstract semantics; every successor heap is normalized.
pub fn abstract_step(c: &Config, prog: &Program) -> Result<Vec<Config>, StepError> {
    debug_assert!(c.counter.is_none());
    step(c, prog, Mode::Abstract)
}

/// Properness of a stack with the current heap prepended. For every heap
/// above a deeper heap: (1) fields agree on the deeper heap's purely local
/// part, and (2) identities reachable in both are reachable from the deeper
/// heap's globals.
pub fn is_proper(top: &Heap, stack: &[Frame]) -> bool {
    let mut heaps: Vec<&Heap> = vec![top];
    heaps.extend(stack.iter().filter_map(|f| match f {
        Frame::Saved(h) => Some(h),
        Frame::Stmt(_) => None,
    }));
    let reach_all: Vec<_> = heaps.iter().map(|h| h.reach_all()).collect();
    let reach_g: Vec<_> = heaps.iter().map(|h| h.reach_globals()).collect();
    let local: Vec<_> = heaps.iter().map(|h| h.purely_local()).collect();
    for i in 0..heaps.len() {
        for j in i + 1..heaps.len() {
            let (hi, hj) = (heaps[i], heaps[j]);
            for &n in &local[j] {
                for f in 0..hj.n_fields() {
                    let f = crate::syntax::FieldId(f as u32);
                    if hi.field(f, Identity::Obj(n)) != hj.field(f, Identity::Obj(n)) {
                        return false;
                    }
                }
            }
            if reach_all[j]
                .intersection(&reach_all[i])
                .any(|id| !reach_g[j].contains(id))
            {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CpIdentError {
    #[error("cut-point identification requires isomorphic caller heaps")]
    NotIsomorphic,
}

/// Cut-point identification `(hc, hl) ⋈ (hc2, hl2)`: the same cut-point
/// variable names each cut point of `hl` in `hc` and its image under the
/// unique isomorphism `hl -> hl2` in `hc2`. Errs when that isomorphism does
/// not exist.
pub fn cp_identification(
    hc: &Heap,
    hl: &Heap,
    hc2: &Heap,
    hl2: &Heap,
) -> Result<bool, CpIdentError> {
    let alpha_l = hl.isomorphic(hl2).ok_or(CpIdentError::NotIsomorphic)?;
    let cps = hl.cut_points();
    let slots = hc.active_cuts().len().max(hc2.active_cuts().len());
    for &n in &cps {
        let want = alpha_l[&Identity::Obj(n)];
        let found = (0..slots).any(|i| {
            let v = crate::syntax::Var::Cut(i as u32);
            hc.var(v) == Identity::Obj(n) && hc2.var(v) == want
        });
        if !found {
            return Ok(false);
        }
    }
    // When the callee heaps are isomorphic too, the two maps must agree on
    // the cut points.
    if let Some(alpha_c) = hc.isomorphic(hc2) {
        for &n in &cps {
            if let Some(&img) = alpha_c.get(&Identity::Obj(n)) {
                if img != alpha_l[&Identity::Obj(n)] {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Outcome of a lockstep differential run of the two semantics.
#[derive(Debug, Clone)]
pub struct BisimReport {
    pub trials: u32,
    pub passed: u32,
    pub failure: Option<BisimFailure>,
}

impl BisimReport {
    pub fn passed_all(&self) -> bool {
        self.failure.is_none() && self.passed == self.trials
    }
}

/// First divergence found, with both machine states rendered.
#[derive(Debug, Clone)]
pub struct BisimFailure {
    pub trial: u32,
    pub step: u32,
    pub reason: String,
    pub concrete: String,
    pub abstract_: String,
}

impl fmt::Display for BisimFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "trial {} step {}: {}\n  concrete: {}\n  abstract: {}",
            self.trial, self.step, self.reason, self.concrete, self.abstract_
        )
    }
}

fn related(cc: &Config, ca: &Config, decls: &Decls) -> Result<(), String> {
    let _ = decls;
    if cc.heap.isomorphic(&ca.heap).is_none() {
        return Err("current heaps not isomorphic".into());
    }
    if cc.stack.len() != ca.stack.len() {
        return Err("stack depths differ".into());
    }
    for (i, (fc, fa)) in cc.stack.iter().zip(&ca.stack).enumerate() {
        match (fc, fa) {
            (Frame::Stmt(a), Frame::Stmt(b)) => {
                if a != b {
                    return Err(format!("stack statement {i} differs"));
                }
            }
            (Frame::Saved(ha), Frame::Saved(hb)) => {
                if ha.isomorphic(hb).is_none() {
                    return Err(format!("stacked heap {i} not isomorphic"));
                }
            }
            _ => return Err(format!("stack frame {i} kind differs")),
        }
    }
    // Cut-point identification between each heap and the next heap below it.
    let chain_c: Vec<&Heap> = std::iter::once(&cc.heap)
        .chain(cc.stack.iter().filter_map(|f| match f {
            Frame::Saved(h) => Some(h),
            _ => None,
        }))
        .collect();
    let chain_a: Vec<&Heap> = std::iter::once(&ca.heap)
        .chain(ca.stack.iter().filter_map(|f| match f {
            Frame::Saved(h) => Some(h),
            _ => None,
        }))
        .collect();
    for i in 0..chain_c.len().saturating_sub(1) {
        match cp_identification(chain_c[i], chain_c[i + 1], chain_a[i], chain_a[i + 1]) {
            Ok(true) => {}
            Ok(false) => return Err(format!("cut-point identification fails at depth {i}")),
            Err(e) => return Err(e.to_string()),
        }
    }
    if !is_proper(&cc.heap, &cc.stack) {
        return Err("concrete configuration not proper".into());
    }
    Ok(())
}

/// At a concrete return, every identity reachable after restoring the
/// caller's locals that the returning heap does not reach from globals or
/// cut-point variables must lie in the caller's purely local part.
fn return_locality_holds(hc: &Heap, hl: &Heap) -> bool {
    let mut hr = hc.clone();
    hr.set_locals_from(hl);
    let shielded = hc.reach_globals_cuts();
    let caller_local = hl.purely_local();
    hr.reach_all()
        .into_iter()
        .filter_map(Identity::nat)
        .filter(|&n| !shielded.contains(&Identity::Obj(n)))
        .all(|n| caller_local.contains(&n))
}

/// Runs the concrete and abstract semantics in lockstep from the initial
/// configuration, resolving nondeterministic choice identically on both
/// sides with a seeded scheduler, and checks the bisimulation relation at
/// every step. Stops at the first divergence.
pub fn lockstep_bisim(prog: &Program, depth: u32, trials: u32, seed: u64) -> BisimReport {
    let decls = prog.decls();
    let mut passed = 0;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(
            seed.wrapping_add((trial as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)),
        );
        let mut cc = initial_config(prog, true);
        let mut ca = initial_config(prog, false);
        let mut fail: Option<(u32, String)> = None;
        for stepno in 0..depth {
            let rc = concrete_step(&cc, prog);
            let ra = abstract_step(&ca, prog);
            match (rc, ra) {
                (Err(_), Err(_)) => break, // both branches abort identically
                (Err(e), Ok(_)) => {
                    fail = Some((stepno, format!("concrete aborts ({e}), abstract does not")));
                    break;
                }
                (Ok(_), Err(e)) => {
                    fail = Some((stepno, format!("abstract aborts ({e}), concrete does not")));
                    break;
                }
                (Ok(sc), Ok(sa)) => {
                    if sc.len() != sa.len() {
                        fail = Some((stepno, "successor counts differ".into()));
                        break;
                    }
                    if sc.is_empty() {
                        break; // both stuck or terminated
                    }
                    if let Some(Frame::Saved(hl)) = cc.top() {
                        if !return_locality_holds(&cc.heap, hl) {
                            fail = Some((
                                stepno,
                                "identity becoming reachable at return is not purely local in the caller"
                                    .into(),
                            ));
                            break;
                        }
                    }
                    let pick = rng.gen_range(0..sc.len());
                    cc = sc[pick].clone();
                    ca = sa[pick].clone();
                    if let Err(reason) = related(&cc, &ca, decls) {
                        fail = Some((stepno + 1, reason));
                        break;
                    }
                }
            }
        }
        match fail {
            None => passed += 1,
            Some((step, reason)) => {
                return BisimReport {
                    trials,
                    passed,
                    failure: Some(BisimFailure {
                        trial,
                        step,
                        reason,
                        concrete: cc.describe(prog),
                        abstract_: ca.describe(prog),
                    }),
                };
            }
        }
    }
    BisimReport {
        trials,
        passed,
        failure: None,
    }
}
