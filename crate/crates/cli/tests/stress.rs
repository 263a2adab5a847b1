//! Opt-in heavy differential stress run (hundreds of wider random programs):
//! `cargo test -p shylock-cli --test stress -- --ignored`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shylock_core::semantics::lockstep_bisim;
use shylock_core::syntax::{Program, ProgramBuilder, StmtId};

fn pick<'a>(rng: &mut ChaCha8Rng, items: &'a [String]) -> &'a str {
    &items[rng.gen_range(0..items.len())]
}

fn gen_stmt(
    b: &mut ProgramBuilder,
    rng: &mut ChaCha8Rng,
    depth: usize,
    lhs: &[String],
    rhs: &[String],
    fields: &[String],
    procs: &[String],
) -> StmtId {
    if depth == 0 || rng.gen_bool(0.4) {
        loop {
            match rng.gen_range(0..10) {
                0..=2 => return b.new_object(pick(rng, lhs)).unwrap(),
                3 => return b.var_copy(pick(rng, lhs), pick(rng, rhs)).unwrap(),
                4 | 5 if !fields.is_empty() => {
                    return b
                        .field_write(pick(rng, lhs), pick(rng, fields), pick(rng, rhs))
                        .unwrap()
                }
                6 if !fields.is_empty() => {
                    return b
                        .field_read(pick(rng, lhs), pick(rng, rhs), pick(rng, fields))
                        .unwrap()
                }
                _ => return b.call(pick(rng, procs)).unwrap(),
            }
        }
    }
    match rng.gen_range(0..4) {
        0 => {
            let a = gen_stmt(b, rng, depth - 1, lhs, rhs, fields, procs);
            let c = gen_stmt(b, rng, depth - 1, lhs, rhs, fields, procs);
            b.seq(a, c)
        }
        1 => {
            let a = gen_stmt(b, rng, depth - 1, lhs, rhs, fields, procs);
            let c = gen_stmt(b, rng, depth - 1, lhs, rhs, fields, procs);
            b.choice(a, c)
        }
        2 => {
            let body = gen_stmt(b, rng, depth - 1, lhs, rhs, fields, procs);
            b.guard_eq(pick(rng, rhs), pick(rng, rhs), body).unwrap()
        }
        _ => {
            let body = gen_stmt(b, rng, depth - 1, lhs, rhs, fields, procs);
            b.guard_neq(pick(rng, rhs), pick(rng, rhs), body).unwrap()
        }
    }
}

fn gen_wide_program(rng: &mut ChaCha8Rng) -> Program {
    let globals = vec!["g0".to_string(), "g1".to_string()];
    let locals = vec!["l0".to_string(), "l1".to_string()];
    let fields = vec!["f0".to_string(), "f1".to_string()];
    let procs: Vec<String> = vec!["main".into(), "p1".into(), "p2".into()];
    let mut b = ProgramBuilder::new(&globals, &locals, &fields).unwrap();
    let lhs: Vec<String> = globals.iter().chain(&locals).cloned().collect();
    let mut rhs = lhs.clone();
    rhs.push("nil".into());
    for name in &procs {
        let mut body = gen_stmt(&mut b, rng, 4, &lhs, &rhs, &fields, &procs);
        // often start a body by filling the locals with fresh objects, so
        // callers hold purely local structure across the calls inside
        for l in &locals {
            if rng.gen_bool(0.5) {
                let alloc = b.new_object(l).unwrap();
                body = b.seq(alloc, body);
            }
        }
        b.proc_def(name, body).unwrap();
    }
    b.finish().unwrap()
}

#[test]
#[ignore = "heavy stress run"]
fn lockstep_stress_wide_random_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1FF);
    for i in 0..500u64 {
        let prog = gen_wide_program(&mut rng);
        let report = lockstep_bisim(&prog, 60, 5, i);
        assert!(
            report.passed_all(),
            "program #{i}:\n{}\n{}",
            prog.text(),
            report.failure.map(|f| f.to_string()).unwrap_or_default()
        );
    }
}
