//! Forward-reachability saturation (`post*`) for pushdown systems given as
//! an implicit rule oracle, generic over control and stack-symbol types.
//!
//! The saturated automaton recognizes exactly the configurations reachable
//! from the initial ones: a configuration `<c, w>` is recognized when the
//! word `w` is read from state `Ctrl(c)` to a final state. Pop rules
//! introduce epsilon edges; rules with a two-symbol right-hand side
//! introduce one auxiliary mid state per (control, symbol) pair. Every edge
//! carries a bit that records whether an accepting control was visited
//! strictly before the edge's source control on the certifying sub-run;
//! epsilon edges into a mid state therefore enumerate the controls a pushed
//! head can pop through to, together with the accepting-visit information
//! the repeated-head analysis needs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

/// State of the saturated automaton: a control location or an auxiliary
/// state (initial-chain states, final states and push mid states share the
/// auxiliary space).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum PState<C> {
    Ctrl(C),
    Aux(u32),
}

type Edge<C, S> = (PState<C>, Option<S>, PState<C>);
type OutMap<C, S> = BTreeMap<PState<C>, BTreeSet<(Option<S>, PState<C>)>>;

/// Discovered rules keyed by head.
pub type Rules<C, S> = BTreeMap<(C, S), Vec<(C, Vec<S>)>>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SaturationError {
    #[error("control-state cap of {0} exceeded during saturation (bound or normalization bug?)")]
    ControlCap(usize),
}

/// The saturated automaton plus the rules discovered along the way.
#[derive(Debug, Clone)]
pub struct PostStar<C: Ord + Clone, S: Ord + Clone> {
    bits: BTreeMap<Edge<C, S>, bool>,
    out: OutMap<C, S>,
    eps_in: BTreeMap<PState<C>, BTreeSet<C>>,
    mids: BTreeMap<(C, S), u32>,
    finals: BTreeSet<u32>,
    /// Rules discovered, keyed by head; every key is a reachable head.
    pub rules: Rules<C, S>,
}

impl<C: Ord + Clone, S: Ord + Clone> PostStar<C, S> {
    fn out_of(&self, q: &PState<C>) -> impl Iterator<Item = &(Option<S>, PState<C>)> {
        self.out.get(q).into_iter().flatten()
    }

    fn bit(&self, e: &Edge<C, S>) -> bool {
        self.bits.get(e).copied().unwrap_or(false)
    }

    fn is_final(&self, q: &PState<C>) -> bool {
        matches!(q, PState::Aux(a) if self.finals.contains(a))
    }

    /// Whether `<c, word>` is recognized.
    pub fn recognizes(&self, c: &C, word: &[S]) -> bool {
        let mut states = vec![PState::Ctrl(c.clone())];
        for sym in word {
            let mut next = BTreeSet::new();
            // one optional epsilon move, then the letter
            let mut sources = BTreeSet::new();
            for q in states {
                for (lbl, t) in self.out_of(&q) {
                    if lbl.is_none() {
                        sources.insert(t.clone());
                    }
                }
                sources.insert(q);
            }
            for q in sources {
                for (lbl, t) in self.out_of(&q) {
                    if lbl.as_ref() == Some(sym) {
                        next.insert(t.clone());
                    }
                }
            }
            if next.is_empty() {
                return false;
            }
            states = next.into_iter().collect();
        }
        states.iter().any(|q| self.is_final(q))
    }

    /// All recognized configurations with at most `max_len` stack symbols.
    pub fn configs_up_to(&self, max_len: usize) -> BTreeSet<(C, Vec<S>)> {
        let mut out = BTreeSet::new();
        let ctrls: BTreeSet<C> = self
            .out
            .keys()
            .filter_map(|q| match q {
                PState::Ctrl(c) => Some(c.clone()),
                PState::Aux(_) => None,
            })
            .collect();
        for c in ctrls {
            let mut seen: BTreeSet<(PState<C>, Vec<S>)> = BTreeSet::new();
            let mut queue: VecDeque<(PState<C>, Vec<S>)> = VecDeque::new();
            queue.push_back((PState::Ctrl(c.clone()), Vec::new()));
            while let Some((q, word)) = queue.pop_front() {
                if !seen.insert((q.clone(), word.clone())) {
                    continue;
                }
                if self.is_final(&q) {
                    out.insert((c.clone(), word.clone()));
                }
                for (lbl, t) in self.out_of(&q) {
                    match lbl {
                        None => queue.push_back((t.clone(), word.clone())),
                        Some(sym) => {
                            if word.len() < max_len {
                                let mut w2 = word.clone();
                                w2.push(sym.clone());
                                queue.push_back((t.clone(), w2));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Heads `(c, s)` of recognized configurations: letter edges leaving a
    /// control state (their targets always continue to a final state).
    pub fn reachable_heads(&self) -> BTreeSet<(C, S)> {
        let mut out = BTreeSet::new();
        for (q, succs) in &self.out {
            if let PState::Ctrl(c) = q {
                for (lbl, _) in succs {
                    if let Some(s) = lbl {
                        out.insert((c.clone(), s.clone()));
                    }
                }
            }
        }
        out
    }

    /// Controls a pushed head `<c, s>` can pop through to, with a bit saying
    /// whether an accepting control was visited from `c` up to (excluding)
    /// the popped-to control.
    pub fn pop_through(&self, c: &C, s: &S) -> Vec<(C, bool)> {
        let Some(&mid) = self.mids.get(&(c.clone(), s.clone())) else {
            return Vec::new();
        };
        let target = PState::Aux(mid);
        self.eps_in
            .get(&target)
            .into_iter()
            .flatten()
            .map(|src| {
                let bit = self.bit(&(PState::Ctrl(src.clone()), None, target.clone()));
                (src.clone(), bit)
            })
            .collect()
    }

    /// Distinct controls appearing in discovered rules.
    pub fn controls(&self) -> BTreeSet<C> {
        let mut out = BTreeSet::new();
        for ((c, _), succs) in &self.rules {
            out.insert(c.clone());
            for (c2, _) in succs {
                out.insert(c2.clone());
            }
        }
        out
    }
}

/// Saturates the automaton for the configurations reachable from `inits`
/// under the rules produced by `oracle`. `accepting` marks the controls
/// whose visits the edge bits record. Saturation discovers controls lazily;
/// exceeding `control_cap` distinct controls aborts with a diagnostic.
pub fn post_star<C, S>(
    mut oracle: impl FnMut(&C, &S) -> Vec<(C, Vec<S>)>,
    accepting: impl Fn(&C) -> bool,
    inits: &[(C, Vec<S>)],
    control_cap: usize,
) -> Result<PostStar<C, S>, SaturationError>
where
    C: Ord + Clone,
    S: Ord + Clone,
{
    let mut ps = PostStar {
        bits: BTreeMap::new(),
        out: BTreeMap::new(),
        eps_in: BTreeMap::new(),
        mids: BTreeMap::new(),
        finals: BTreeSet::new(),
        rules: BTreeMap::new(),
    };
    let mut controls: BTreeSet<C> = BTreeSet::new();
    let mut next_aux: u32 = 0;
    let mut alloc_aux = |ps: &mut PostStar<C, S>, is_final: bool| {
        let a = next_aux;
        next_aux += 1;
        if is_final {
            ps.finals.insert(a);
        }
        a
    };
    let mut worklist: VecDeque<Edge<C, S>> = VecDeque::new();

    fn add_edge<C: Ord + Clone, S: Ord + Clone>(
        ps: &mut PostStar<C, S>,
        worklist: &mut VecDeque<Edge<C, S>>,
        from: PState<C>,
        lbl: Option<S>,
        to: PState<C>,
        bit: bool,
    ) {
        let key = (from.clone(), lbl.clone(), to.clone());
        match ps.bits.get_mut(&key) {
            Some(old) => {
                if *old || !bit {
                    return; // nothing new
                }
                *old = true;
            }
            None => {
                ps.bits.insert(key.clone(), bit);
                ps.out
                    .entry(from.clone())
                    .or_default()
                    .insert((lbl.clone(), to.clone()));
                if lbl.is_none() {
                    if let PState::Ctrl(c) = &from {
                        ps.eps_in.entry(to.clone()).or_default().insert(c.clone());
                    }
                }
            }
        }
        worklist.push_back(key);
    }

    for (c, word) in inits {
        assert!(
            !word.is_empty(),
            "initial configurations need a nonempty stack"
        );
        controls.insert(c.clone());
        let mut from = PState::Ctrl(c.clone());
        for (i, sym) in word.iter().enumerate() {
            let is_last = i + 1 == word.len();
            let to = PState::Aux(alloc_aux(&mut ps, is_last));
            add_edge(
                &mut ps,
                &mut worklist,
                from,
                Some(sym.clone()),
                to.clone(),
                false,
            );
            from = to;
        }
    }

    while let Some(edge) = worklist.pop_front() {
        let (q1, lbl, q2) = edge.clone();
        let bit = ps.bit(&edge);
        match (&q1, &lbl) {
            (PState::Ctrl(c), Some(sym)) => {
                // PDS rules fire on the head (c, sym)
                if let std::collections::btree_map::Entry::Vacant(e) =
                    ps.rules.entry((c.clone(), sym.clone()))
                {
                    let succs = oracle(c, sym);
                    for (c2, _) in &succs {
                        controls.insert(c2.clone());
                    }
                    if controls.len() > control_cap {
                        return Err(SaturationError::ControlCap(control_cap));
                    }
                    e.insert(succs);
                }
                let succs = ps.rules[&(c.clone(), sym.clone())].clone();
                let fired = bit || accepting(c);
                for (c2, w) in succs {
                    match w.len() {
                        0 => add_edge(
                            &mut ps,
                            &mut worklist,
                            PState::Ctrl(c2),
                            None,
                            q2.clone(),
                            fired,
                        ),
                        1 => add_edge(
                            &mut ps,
                            &mut worklist,
                            PState::Ctrl(c2),
                            Some(w[0].clone()),
                            q2.clone(),
                            fired,
                        ),
                        2 => {
                            let key = (c2.clone(), w[0].clone());
                            let mid = match ps.mids.get(&key) {
                                Some(&m) => m,
                                None => {
                                    let m = alloc_aux(&mut ps, false);
                                    ps.mids.insert(key, m);
                                    m
                                }
                            };
                            add_edge(
                                &mut ps,
                                &mut worklist,
                                PState::Ctrl(c2),
                                Some(w[0].clone()),
                                PState::Aux(mid),
                                false,
                            );
                            add_edge(
                                &mut ps,
                                &mut worklist,
                                PState::Aux(mid),
                                Some(w[1].clone()),
                                q2.clone(),
                                fired,
                            );
                        }
                        n => panic!("pushed word of length {n}; rules push at most two symbols"),
                    }
                }
            }
            (_, None) => {
                // fold the epsilon edge with the letter edges leaving q2
                let folds: Vec<(S, PState<C>, bool)> = ps
                    .out_of(&q2)
                    .filter_map(|(l, t)| {
                        l.clone().map(|sym| {
                            let b2 = ps.bit(&(q2.clone(), Some(sym.clone()), t.clone()));
                            (sym, t.clone(), b2)
                        })
                    })
                    .collect();
                for (sym, t, b2) in folds {
                    add_edge(&mut ps, &mut worklist, q1.clone(), Some(sym), t, bit || b2);
                }
            }
            (PState::Aux(_), Some(_)) => {
                // a new letter edge out of an auxiliary state: fold with the
                // epsilon edges arriving there
                let preds: Vec<(C, bool)> = ps
                    .eps_in
                    .get(&q1)
                    .into_iter()
                    .flatten()
                    .map(|c| {
                        let b1 = ps.bit(&(PState::Ctrl(c.clone()), None, q1.clone()));
                        (c.clone(), b1)
                    })
                    .collect();
                for (c, b1) in preds {
                    add_edge(
                        &mut ps,
                        &mut worklist,
                        PState::Ctrl(c),
                        lbl.clone(),
                        q2.clone(),
                        b1 || bit,
                    );
                }
            }
        }
    }
    Ok(ps)
}
