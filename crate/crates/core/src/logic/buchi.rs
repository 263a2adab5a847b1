//! Tableau translation from temporal formulas to Büchi automata.
//!
//! States are consistent subsets of the subformula closure; transitions are
//! guarded by cubes over the atomic expressions (each state constrains every
//! atom positively or negatively). Untils yield a generalized acceptance
//! condition that is degeneralized with a counter. State count is not
//! contractual — language equality with the word semantics is, and is
//! checked against `word_sat` on random lassos.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::{atoms, Formula, LassoWord, Rite};

/// A conjunction of positive and negative atom literals.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cube {
    pub pos: BTreeSet<Rite>,
    pub neg: BTreeSet<Rite>,
}

impl Cube {
    /// A letter satisfies the cube when it contains every positive literal
    /// and no negative one.
    pub fn satisfied_by(&self, letter: &BTreeSet<Rite>) -> bool {
        self.pos.is_subset(letter) && self.neg.is_disjoint(letter)
    }
}

/// A Büchi automaton over letters that are sets of atomic expressions.
#[derive(Debug, Clone)]
pub struct BuchiAutomaton {
    pub n_states: usize,
    pub transitions: Vec<(usize, Cube, usize)>,
    pub initial: BTreeSet<usize>,
    pub accepting: BTreeSet<usize>,
    pub atoms: Vec<Rite>,
}

impl BuchiAutomaton {
    /// Whether the accepted language is empty: no reachable cycle through an
    /// accepting state.
    pub fn is_empty(&self) -> bool {
        let mut g: DiGraph<(), ()> = DiGraph::new();
        let nodes: Vec<_> = (0..self.n_states).map(|_| g.add_node(())).collect();
        for (s, _, t) in &self.transitions {
            g.add_edge(nodes[*s], nodes[*t], ());
        }
        // reachable states
        let mut reach = vec![false; self.n_states];
        let mut work: Vec<usize> = self.initial.iter().copied().collect();
        while let Some(s) = work.pop() {
            if reach[s] {
                continue;
            }
            reach[s] = true;
            for (a, _, b) in &self.transitions {
                if *a == s && !reach[*b] {
                    work.push(*b);
                }
            }
        }
        for scc in tarjan_scc(&g) {
            let members: BTreeSet<usize> = scc.iter().map(|n| n.index()).collect();
            let cyclic = scc.len() > 1
                || self
                    .transitions
                    .iter()
                    .any(|(a, _, b)| a == b && members.contains(a));
            if !cyclic {
                continue;
            }
            if members
                .iter()
                .any(|s| reach[*s] && self.accepting.contains(s))
            {
                // an accepting state inside a reachable cycle: nonempty if
                // any cycle member is reachable (the SCC is strongly
                // connected, so reachability of one member suffices)
                if members.iter().any(|s| reach[*s]) {
                    return false;
                }
            }
        }
        true
    }
}

// A tableau state: a bitmask over the subformula list.
type Mask = u32;

struct Tableau {
    subs: Vec<Formula>,
    atom_bits: Vec<(usize, Rite)>,
    untils: Vec<(usize, usize)>, // (index of until, index of its right side)
}

impl Tableau {
    fn new(phi: &Formula) -> Tableau {
        let mut set = BTreeSet::new();
        collect_subs(phi, &mut set);
        let subs: Vec<Formula> = set.into_iter().collect();
        assert!(subs.len() <= Mask::BITS as usize, "formula too large");
        let idx = |f: &Formula| subs.iter().position(|g| g == f).unwrap();
        let mut atom_bits = Vec::new();
        let mut untils = Vec::new();
        for (i, f) in subs.iter().enumerate() {
            match f {
                Formula::Atom(r) => atom_bits.push((i, r.clone())),
                Formula::Until(_, b) => untils.push((i, idx(b))),
                _ => {}
            }
        }
        Tableau {
            subs,
            atom_bits,
            untils,
        }
    }

    fn idx(&self, f: &Formula) -> usize {
        self.subs.iter().position(|g| g == f).unwrap()
    }

    fn consistent(&self, m: Mask) -> bool {
        for (i, f) in self.subs.iter().enumerate() {
            let has = m & (1 << i) != 0;
            let ok = match f {
                Formula::True => has,
                Formula::Not(p) => has != (m & (1 << self.idx(p)) != 0),
                Formula::And(a, b) => {
                    has == ((m & (1 << self.idx(a)) != 0) && (m & (1 << self.idx(b)) != 0))
                }
                _ => true,
            };
            if !ok {
                return false;
            }
        }
        true
    }

    /// Transition compatibility: Next formulas read the successor state;
    /// Untils unroll one step.
    fn step_ok(&self, m: Mask, m2: Mask) -> bool {
        for (i, f) in self.subs.iter().enumerate() {
            let has = m & (1 << i) != 0;
            match f {
                Formula::Next(p) => {
                    if has != (m2 & (1 << self.idx(p)) != 0) {
                        return false;
                    }
                }
                Formula::Until(a, b) => {
                    let now_b = m & (1 << self.idx(b)) != 0;
                    let now_a = m & (1 << self.idx(a)) != 0;
                    let later = m2 & (1 << i) != 0;
                    if has != (now_b || (now_a && later)) {
                        return false;
                    }
                }
                _ => {}
            }
        }
        true
    }

    fn cube(&self, m: Mask, universe: &BTreeSet<Rite>) -> Cube {
        let mut pos = BTreeSet::new();
        for (i, r) in &self.atom_bits {
            if m & (1 << i) != 0 {
                pos.insert(r.clone());
            }
        }
        let neg: BTreeSet<Rite> = universe.difference(&pos).cloned().collect();
        Cube { pos, neg }
    }
}

fn collect_subs(phi: &Formula, out: &mut BTreeSet<Formula>) {
    out.insert(phi.clone());
    match phi {
        Formula::True | Formula::Atom(_) => {}
        Formula::Not(p) | Formula::Next(p) => collect_subs(p, out),
        Formula::And(a, b) | Formula::Until(a, b) => {
            collect_subs(a, out);
            collect_subs(b, out);
        }
    }
}

/// Constructs a Büchi automaton accepting exactly the words satisfying the
/// formula, over the alphabet of subsets of its atoms.
pub fn ltl_to_buchi(phi: &Formula) -> BuchiAutomaton {
    let universe = atoms(phi);
    let tab = Tableau::new(phi);
    let phi_bit = 1u32 << tab.idx(phi);
    let masks: Vec<Mask> = (0..(1u64 << tab.subs.len()))
        .map(|m| m as Mask)
        .filter(|&m| tab.consistent(m))
        .collect();
    let state_of: BTreeMap<Mask, usize> = masks.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let mut gba_edges: Vec<(usize, usize)> = Vec::new();
    for &m in &masks {
        for &m2 in &masks {
            if tab.step_ok(m, m2) {
                gba_edges.push((state_of[&m], state_of[&m2]));
            }
        }
    }
    let gba_initial: Vec<usize> = masks
        .iter()
        .filter(|&&m| m & phi_bit != 0)
        .map(|m| state_of[m])
        .collect();
    let cubes: Vec<Cube> = masks.iter().map(|&m| tab.cube(m, &universe)).collect();
    // generalized acceptance: one set per until, satisfied when the until is
    // absent or its right side holds
    let fairness: Vec<Vec<bool>> = tab
        .untils
        .iter()
        .map(|&(u, b)| {
            masks
                .iter()
                .map(|&m| (m & (1 << u) == 0) || (m & (1 << b) != 0))
                .collect()
        })
        .collect();
    let n_fair = fairness.len();
    let atoms_vec: Vec<Rite> = universe.iter().cloned().collect();

    if n_fair == 0 {
        return BuchiAutomaton {
            n_states: masks.len(),
            transitions: gba_edges
                .into_iter()
                .map(|(s, t)| (s, cubes[s].clone(), t))
                .collect(),
            initial: gba_initial.into_iter().collect(),
            accepting: (0..masks.len()).collect(),
            atoms: atoms_vec,
        };
    }

    // degeneralize: track which fairness set to satisfy next
    let n = masks.len();
    let id = |s: usize, i: usize| s * n_fair + i;
    let mut transitions = Vec::new();
    for &(s, t) in &gba_edges {
        for (i, fair) in fairness.iter().enumerate() {
            let i2 = if fair[s] { (i + 1) % n_fair } else { i };
            transitions.push((id(s, i), cubes[s].clone(), id(t, i2)));
        }
    }
    let accepting: BTreeSet<usize> = (0..n)
        .filter(|&s| fairness[n_fair - 1][s])
        .map(|s| id(s, n_fair - 1))
        .collect();
    BuchiAutomaton {
        n_states: n * n_fair,
        transitions,
        initial: gba_initial.into_iter().map(|s| id(s, 0)).collect(),
        accepting,
        atoms: atoms_vec,
    }
}

/// Decides whether the automaton accepts the lasso word: an accepting cycle
/// in the product of the automaton with the lasso's position graph,
/// explored lazily from the initial states.
pub fn buchi_accepts(b: &BuchiAutomaton, w: &LassoWord) -> bool {
    let n_pos = w.len();
    // atoms are few: compare cubes and letters as bitmasks
    debug_assert!(b.atoms.len() <= 64);
    let atom_bit = |r: &Rite| b.atoms.iter().position(|a| a == r);
    let mask_of = |set: &BTreeSet<Rite>| -> u64 {
        set.iter()
            .filter_map(&atom_bit)
            .fold(0u64, |m, i| m | (1 << i))
    };
    let letter_masks: Vec<u64> = (0..n_pos).map(|p| mask_of(w.letter(p))).collect();
    let mut by_source: Vec<Vec<(u64, u64, usize)>> = vec![Vec::new(); b.n_states];
    for (s, cube, t) in &b.transitions {
        by_source[*s].push((mask_of(&cube.pos), mask_of(&cube.neg), *t));
    }
    // reachable product nodes (state, position)
    let node = |s: usize, p: usize| s * n_pos + p;
    let mut seen = vec![false; b.n_states * n_pos];
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut work: Vec<(usize, usize)> = b.initial.iter().map(|&s| (s, 0)).collect();
    while let Some((s, p)) = work.pop() {
        if seen[node(s, p)] {
            continue;
        }
        seen[node(s, p)] = true;
        order.push((s, p));
        let lm = letter_masks[p];
        for &(pos, neg, t) in &by_source[s] {
            if pos & lm == pos && neg & lm == 0 && !seen[node(t, w.next(p))] {
                work.push((t, w.next(p)));
            }
        }
    }
    // SCC analysis of the reachable subgraph
    let mut g: DiGraph<(), ()> = DiGraph::new();
    let mut gid = vec![usize::MAX; b.n_states * n_pos];
    for &(s, p) in &order {
        gid[node(s, p)] = g.add_node(()).index();
    }
    let mut self_loop = vec![false; order.len()];
    for &(s, p) in &order {
        let lm = letter_masks[p];
        for &(pos, neg, t) in &by_source[s] {
            if pos & lm == pos && neg & lm == 0 {
                let from = gid[node(s, p)];
                let to = gid[node(t, w.next(p))];
                g.add_edge(
                    petgraph::graph::NodeIndex::new(from),
                    petgraph::graph::NodeIndex::new(to),
                    (),
                );
                if from == to {
                    self_loop[from] = true;
                }
            }
        }
    }
    for scc in tarjan_scc(&g) {
        let cyclic = scc.len() > 1 || self_loop[scc[0].index()];
        if !cyclic {
            continue;
        }
        if scc
            .iter()
            .any(|n| b.accepting.contains(&(order[n.index()].0)))
        {
            return true;
        }
    }
    false
}
