//! Corpus-wide structural invariants of exploration: every statement symbol
//! that ever appears on a stack belongs to the program's stack alphabet, and
//! the closure is contained in it.

use std::collections::BTreeSet;

use shylock_core::pds::{explore, StackSym};
use shylock_core::syntax::parse_program;

const CORPUS: &[&str] = &[
    "rec_alloc.shy",
    "call_renaming.shy",
    "file.shy",
    "file_qnil.shy",
    "bound0.shy",
    "choice_cells.shy",
    "flip.shy",
    "growlist.shy",
    "swap.shy",
];

fn load(name: &str) -> shylock_core::Program {
    let path = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../programs")
        .join(name);
    parse_program(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn stack_symbols_stay_in_the_alphabet() {
    for name in CORPUS {
        let prog = load(name);
        let alpha = prog.stack_alphabet();
        assert!(prog.closure().is_subset(&alpha), "{name}");
        let ex = explore(&prog, 2, 10, 500_000).unwrap();
        let mut seen = BTreeSet::new();
        for (_, stack) in &ex.configs {
            for sym in stack {
                if let StackSym::Stmt(id) = sym {
                    seen.insert(*id);
                    assert!(alpha.contains(id), "{name}: {}", prog.stmt_text(*id));
                }
            }
        }
        assert!(!seen.is_empty(), "{name}: exploration saw no statements");
    }
}

#[test]
fn pushed_words_are_short_everywhere() {
    for name in CORPUS {
        let prog = load(name);
        let ex = explore(&prog, 2, 10, 500_000).unwrap();
        for succs in ex.rules.values() {
            for (_, w) in succs {
                assert!(w.len() <= 2, "{name}");
            }
        }
    }
}
