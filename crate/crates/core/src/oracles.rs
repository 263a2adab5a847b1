//! Independent reference evaluators used as test oracles. These build whole
//! relations by naive enumeration and deliberately share no code with the
//! recursive evaluators they cross-check.

use std::collections::BTreeSet;

use crate::heap::{Heap, Identity};
use crate::logic::Rite;

type Rel = BTreeSet<(Identity, Identity)>;

fn compose(a: &Rel, b: &Rel) -> Rel {
    let mut out = Rel::new();
    for &(x, y) in a {
        for &(y2, z) in b {
            if y == y2 {
                out.insert((x, z));
            }
        }
    }
    out
}

/// The relation of an expression over the universe of reachable identities,
/// built bottom-up: star is iterated relational composition to a fixpoint.
pub fn rite_relation(h: &Heap, r: &Rite) -> Rel {
    let universe: Vec<Identity> = h.reach_all().into_iter().collect();
    build(h, r, &universe)
}

fn build(h: &Heap, r: &Rite, universe: &[Identity]) -> Rel {
    match r {
        Rite::Eps => universe.iter().map(|&n| (n, n)).collect(),
        Rite::Test(x) => universe
            .iter()
            .filter(|&&n| h.var(*x) == n)
            .map(|&n| (n, n))
            .collect(),
        Rite::NegTest(x) => universe
            .iter()
            .filter(|&&n| h.var(*x) != n)
            .map(|&n| (n, n))
            .collect(),
        Rite::Act(f) => universe.iter().map(|&n| (n, h.field(*f, n))).collect(),
        Rite::Alt(a, b) => {
            let mut out = build(h, a, universe);
            out.extend(build(h, b, universe));
            out
        }
        Rite::Cat(a, b) => compose(&build(h, a, universe), &build(h, b, universe)),
        Rite::Star(inner) => {
            let step = build(h, inner, universe);
            let mut acc: Rel = universe.iter().map(|&n| (n, n)).collect();
            loop {
                let mut next = acc.clone();
                next.extend(compose(&acc, &step));
                if next == acc {
                    return acc;
                }
                acc = next;
            }
        }
    }
}

/// Modal satisfaction via the brute-force relation: every reachable identity
/// needs at least one target.
pub fn heap_sat_bruteforce(h: &Heap, r: &Rite) -> bool {
    let rel = rite_relation(h, r);
    h.reach_all()
        .into_iter()
        .all(|n| rel.iter().any(|&(x, _)| x == n))
}
