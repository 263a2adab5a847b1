//! Synchronization of the k-bounded pushdown system with a Büchi automaton
//! for the negated formula, `post*` saturation, repeated-head detection and
//! verdict construction.
//!
//! Checking runs in two phases. Phase 1 saturates the plain system and
//! reports `BoundExceeded` if the out-of-bound control `⊤` is reachable —
//! temporal verdicts are only meaningful within the bound. Phase 2 builds
//! the product with the Büchi automaton for the negation, saturates it,
//! builds the head reachability graph and looks for a reachable repeated
//! head with an accepting visit on its cycle; finding one yields `Violated`
//! with a replayable stem, otherwise the property `Holds`.

mod poststar;

pub use poststar::{post_star, PState, PostStar, SaturationError};

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use thiserror::Error;

use crate::heap::Heap;
use crate::logic::{atoms, heap_sat, ltl_to_buchi, BuchiAutomaton, Formula, Rite};
use crate::pds::{initial_stack, successors_k, Control, StackSym};
use crate::syntax::Program;

/// A control location of the product system: base control plus Büchi state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ProductControl {
    pub base: Control,
    pub bstate: usize,
}

/// A product head.
pub type ProductHead = (ProductControl, StackSym);

/// A product configuration: control plus stack, top first.
pub type ProductConfig = (ProductControl, Vec<StackSym>);

/// The atoms a control satisfies: `{r ∈ ats | H ⊨ r}`; the out-of-bound
/// control satisfies none.
pub fn label(ctrl: &Control, ats: &[Rite]) -> BTreeSet<Rite> {
    match ctrl {
        Control::Top => BTreeSet::new(),
        Control::Heap(h) => ats.iter().filter(|r| heap_sat(h, r)).cloned().collect(),
    }
}

/// Memoizing successor oracle for the product system. The Büchi automaton
/// reads the label of the source control: each base successor pairs with
/// every Büchi edge whose guard that label satisfies.
pub struct ProductOracle<'a> {
    prog: &'a Program,
    k: usize,
    buchi: &'a BuchiAutomaton,
    labels: BTreeMap<Control, BTreeSet<Rite>>,
    base: crate::pds::RuleMap,
}

impl<'a> ProductOracle<'a> {
    pub fn new(prog: &'a Program, k: usize, buchi: &'a BuchiAutomaton) -> Self {
        ProductOracle {
            prog,
            k,
            buchi,
            labels: BTreeMap::new(),
            base: BTreeMap::new(),
        }
    }

    fn label_of(&mut self, ctrl: &Control) -> BTreeSet<Rite> {
        if let Some(l) = self.labels.get(ctrl) {
            return l.clone();
        }
        let l = label(ctrl, &self.buchi.atoms);
        self.labels.insert(ctrl.clone(), l.clone());
        l
    }

    fn base_succs(&mut self, ctrl: &Control, sym: &StackSym) -> Vec<(Control, Vec<StackSym>)> {
        if let Some(s) = self.base.get(&(ctrl.clone(), sym.clone())) {
            return s.clone();
        }
        let s = successors_k(ctrl, sym, self.prog, self.k);
        self.base.insert((ctrl.clone(), sym.clone()), s.clone());
        s
    }

    /// Successors of a product head.
    pub fn successors(
        &mut self,
        pc: &ProductControl,
        sym: &StackSym,
    ) -> Vec<(ProductControl, Vec<StackSym>)> {
        let letter = self.label_of(&pc.base);
        let base = self.base_succs(&pc.base, sym);
        let mut out = Vec::new();
        for (s, cube, t) in &self.buchi.transitions {
            if *s != pc.bstate || !cube.satisfied_by(&letter) {
                continue;
            }
            for (c2, w) in &base {
                let item = (
                    ProductControl {
                        base: c2.clone(),
                        bstate: *t,
                    },
                    w.clone(),
                );
                if !out.contains(&item) {
                    out.push(item);
                }
            }
        }
        out
    }
}

/// The head reachability graph: product heads with edges labelled by an
/// accepting-visit bit.
#[derive(Debug, Clone)]
pub struct HeadGraph {
    pub nodes: Vec<ProductHead>,
    pub edges: Vec<(usize, usize, bool)>,
}

/// Builds the head graph restricted to the heads reachable in the saturated
/// automaton. A swap or push rule yields an edge to the successor head; a
/// push additionally yields one edge per control the pushed head can pop
/// through to, carrying the accepting-visit bit accumulated on the way.
pub fn head_graph(
    ps: &PostStar<ProductControl, StackSym>,
    accepting: impl Fn(&ProductControl) -> bool,
) -> HeadGraph {
    let heads = ps.reachable_heads();
    let nodes: Vec<ProductHead> = heads.into_iter().collect();
    let idx: BTreeMap<ProductHead, usize> = nodes
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, h)| (h, i))
        .collect();
    let mut edges = Vec::new();
    for (i, (c, s)) in nodes.iter().enumerate() {
        let Some(rules) = ps.rules.get(&(c.clone(), s.clone())) else {
            continue;
        };
        let acc_c = accepting(c);
        for (c2, w) in rules {
            match w.len() {
                0 => {}
                1 => {
                    if let Some(&j) = idx.get(&(c2.clone(), w[0].clone())) {
                        edges.push((i, j, acc_c));
                    }
                }
                2 => {
                    if let Some(&j) = idx.get(&(c2.clone(), w[0].clone())) {
                        edges.push((i, j, acc_c));
                    }
                    for (c3, bit) in ps.pop_through(c2, &w[0]) {
                        if let Some(&j) = idx.get(&(c3.clone(), w[1].clone())) {
                            edges.push((i, j, acc_c || bit));
                        }
                    }
                }
                _ => unreachable!("rules push at most two symbols"),
            }
        }
    }
    HeadGraph { nodes, edges }
}

/// Heads lying on a cycle that contains at least one accepting-visit edge.
pub fn repeating_heads(g: &HeadGraph) -> BTreeSet<ProductHead> {
    let mut graph: DiGraph<(), bool> = DiGraph::new();
    let nodes: Vec<_> = (0..g.nodes.len()).map(|_| graph.add_node(())).collect();
    for &(a, b, bit) in &g.edges {
        graph.add_edge(nodes[a], nodes[b], bit);
    }
    let mut out = BTreeSet::new();
    for scc in tarjan_scc(&graph) {
        let members: BTreeSet<usize> = scc.iter().map(|n| n.index()).collect();
        let has_accepting_edge = g
            .edges
            .iter()
            .any(|&(a, b, bit)| bit && members.contains(&a) && members.contains(&b));
        if !has_accepting_edge {
            continue;
        }
        // the SCC is strongly connected, so every member sits on a cycle
        // through the accepting edge
        for m in members {
            out.insert(g.nodes[m].clone());
        }
    }
    out
}

/// One rule application of a witness stem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleApp {
    pub from: ProductHead,
    pub to: (ProductControl, Vec<StackSym>),
}

/// Outcome of a check.
#[derive(Debug, Clone)]
pub enum Verdict {
    Holds,
    Violated {
        /// Initial product configuration the stem starts from.
        init: ProductConfig,
        /// Rule applications leading to a configuration whose head repeats.
        stem: Vec<RuleApp>,
        loop_head: ProductHead,
    },
    BoundExceeded {
        /// The head whose step left the bound.
        head: (Control, StackSym),
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error(transparent)]
    Saturation(#[from] SaturationError),
    #[error("witness search exceeded {0} configurations")]
    WitnessCap(usize),
}

/// Options for the checker.
#[derive(Debug, Clone)]
pub struct CheckOptions {
    /// Cap on distinct controls discovered during saturation.
    pub control_cap: usize,
    /// Cap on configurations explored while reconstructing a witness.
    pub witness_cap: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            control_cap: 100_000,
            witness_cap: 1_000_000,
        }
    }
}

/// Saturates the plain (non-product) k-bounded system from the initial
/// configuration. Also used by the rule-dump front end.
pub fn saturate_plain(
    prog: &Program,
    k: usize,
    control_cap: usize,
) -> Result<PostStar<Control, StackSym>, SaturationError> {
    let init = (
        Control::Heap(Heap::initial(prog.decls())),
        initial_stack(prog),
    );
    post_star(
        |c: &Control, s: &StackSym| successors_k(c, s, prog, k),
        |_| false,
        &[init],
        control_cap,
    )
}

/// Model checks the program against the formula with visible-heap bound `k`.
pub fn check(
    prog: &Program,
    phi: &Formula,
    k: usize,
    opts: &CheckOptions,
) -> Result<Verdict, CheckError> {
    // Phase 1: bound check on the plain system.
    let ps1 = saturate_plain(prog, k, opts.control_cap)?;
    let mut offender: Option<(Control, StackSym)> = None;
    for ((c, s), succs) in &ps1.rules {
        if *c != Control::Top
            && succs.iter().any(|(c2, _)| *c2 == Control::Top)
            && offender.is_none()
        {
            offender = Some((c.clone(), s.clone()));
        }
    }
    if let Some(head) = offender {
        return Ok(Verdict::BoundExceeded { head });
    }

    // Phase 2: product with the automaton for the negated formula.
    let nphi = phi.clone().not();
    let buchi = ltl_to_buchi(&nphi);
    debug_assert_eq!(
        buchi.atoms,
        atoms(phi).into_iter().collect::<Vec<_>>(),
        "negation preserves the atom set"
    );
    let mut oracle = ProductOracle::new(prog, k, &buchi);
    let h0 = Control::Heap(Heap::initial(prog.decls()));
    let stack0 = initial_stack(prog);
    let inits: Vec<ProductConfig> = buchi
        .initial
        .iter()
        .map(|&q0| {
            (
                ProductControl {
                    base: h0.clone(),
                    bstate: q0,
                },
                stack0.clone(),
            )
        })
        .collect();
    let accepting = |pc: &ProductControl| buchi.accepting.contains(&pc.bstate);
    let ps2 = post_star(
        |c: &ProductControl, s: &StackSym| oracle.successors(c, s),
        accepting,
        &inits,
        opts.control_cap,
    )?;
    let graph = head_graph(&ps2, accepting);
    let reps = repeating_heads(&graph);
    if reps.is_empty() {
        return Ok(Verdict::Holds);
    }
    let mut oracle = ProductOracle::new(prog, k, &buchi);
    let (init, stem, loop_head) = witness_stem(&mut oracle, &inits, &reps, opts.witness_cap)?;
    Ok(Verdict::Violated {
        init,
        stem,
        loop_head,
    })
}

/// Breadth-first search over product configurations for the shortest stem
/// reaching any repeating head, recorded as replayable rule applications.
fn witness_stem(
    oracle: &mut ProductOracle<'_>,
    inits: &[ProductConfig],
    targets: &BTreeSet<ProductHead>,
    cap: usize,
) -> Result<(ProductConfig, Vec<RuleApp>, ProductHead), CheckError> {
    type Cfg = ProductConfig;
    let head_of = |cfg: &Cfg| -> Option<ProductHead> {
        cfg.1.first().map(|top| (cfg.0.clone(), top.clone()))
    };
    let mut parent: BTreeMap<Cfg, (Cfg, RuleApp)> = BTreeMap::new();
    let mut seen: BTreeSet<Cfg> = BTreeSet::new();
    let mut queue: VecDeque<Cfg> = VecDeque::new();
    for init in inits {
        seen.insert(init.clone());
        queue.push_back(init.clone());
    }
    // walking the parent chain ends at one of the initial configurations
    let reconstruct = |cfg: &Cfg, parent: &BTreeMap<Cfg, (Cfg, RuleApp)>| -> (Cfg, Vec<RuleApp>) {
        let mut stem = Vec::new();
        let mut cur = cfg.clone();
        while let Some((prev, app)) = parent.get(&cur) {
            stem.push(app.clone());
            cur = prev.clone();
        }
        stem.reverse();
        (cur, stem)
    };
    while let Some(cfg) = queue.pop_front() {
        if seen.len() > cap {
            return Err(CheckError::WitnessCap(cap));
        }
        let Some(head) = head_of(&cfg) else { continue };
        if targets.contains(&head) {
            let (init, stem) = reconstruct(&cfg, &parent);
            return Ok((init, stem, head));
        }
        for (c2, w) in oracle.successors(&cfg.0, &head.1) {
            let mut stack2 = Vec::with_capacity(w.len() + cfg.1.len() - 1);
            stack2.extend(w.iter().cloned());
            stack2.extend_from_slice(&cfg.1[1..]);
            let nxt: Cfg = (c2.clone(), stack2);
            if seen.insert(nxt.clone()) {
                parent.insert(
                    nxt.clone(),
                    (
                        cfg.clone(),
                        RuleApp {
                            from: head.clone(),
                            to: (c2, w),
                        },
                    ),
                );
                queue.push_back(nxt.clone());
            }
        }
    }
    Err(CheckError::WitnessCap(cap))
}

/// Replays a `Violated` witness: applies each rule from the initial
/// configuration, checking that every application is among the oracle's
/// successors, and that the final configuration carries the loop head.
pub fn replay_witness(
    prog: &Program,
    phi: &Formula,
    k: usize,
    verdict: &Verdict,
) -> Result<(), String> {
    let Verdict::Violated {
        init,
        stem,
        loop_head,
    } = verdict
    else {
        return Err("verdict carries no witness".into());
    };
    let buchi = ltl_to_buchi(&phi.clone().not());
    let mut oracle = ProductOracle::new(prog, k, &buchi);
    let (mut ctrl, mut stack) = init.clone();
    for (i, app) in stem.iter().enumerate() {
        let top = stack
            .first()
            .cloned()
            .ok_or(format!("step {i}: empty stack"))?;
        if (ctrl.clone(), top.clone()) != app.from {
            return Err(format!("step {i}: head mismatch"));
        }
        let succs = oracle.successors(&ctrl, &top);
        if !succs.contains(&app.to) {
            return Err(format!("step {i}: rule not among successors"));
        }
        let mut stack2 = Vec::with_capacity(app.to.1.len() + stack.len() - 1);
        stack2.extend(app.to.1.iter().cloned());
        stack2.extend_from_slice(&stack[1..]);
        ctrl = app.to.0.clone();
        stack = stack2;
    }
    match stack.first() {
        Some(top) if (ctrl.clone(), top.clone()) == *loop_head => Ok(()),
        _ => Err("stem does not end at the loop head".into()),
    }
}
