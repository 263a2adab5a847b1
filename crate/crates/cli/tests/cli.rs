//! Golden tests for the command-line front end: exact stdout bytes and exit
//! codes for the fixture programs.

use std::path::PathBuf;
use std::process::{Command, Output};

fn program_path(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../programs")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn shylock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shylock"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn run_worked_example_trace_golden() {
    let out = shylock(&[
        "run",
        &program_path("call_renaming.shy"),
        "--semantics",
        "abstract",
        "--trace",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let expected = "\
#1 call | var g = bot; var l = bot; var nil = bot; field f: | stack-depth=2
#2 seq | var g = bot; var l = bot; var nil = bot; field f: | stack-depth=3
#3 seq | var g = bot; var l = bot; var nil = bot; field f: | stack-depth=4
#4 seq | var g = bot; var l = bot; var nil = bot; field f: | stack-depth=5
#5 new | var g = bot; var l = 0; var nil = bot; field f: 0 -> bot | stack-depth=4
#6 new | var g = 1; var l = 0; var nil = bot; field f: 0 -> bot, 1 -> bot | stack-depth=3
#7 field-write | var g = 1; var l = 0; var nil = bot; field f: 0 -> 1, 1 -> bot | stack-depth=2
#8 call | var c0 = 1; var g = 1; var l = bot; var nil = bot; field f: 1 -> bot | stack-depth=3
#9 new | var c0 = 1; var g = 0; var l = bot; var nil = bot; field f: 0 -> bot, 1 -> bot | stack-depth=2
#10 return | var g = 2; var l = 0; var nil = bot; field f: 0 -> 1, 1 -> bot, 2 -> bot | stack-depth=1
#11 return | var g = 2; var l = bot; var nil = bot; field f: 2 -> bot | stack-depth=0
var g = 2
var l = bot
var nil = bot
field f: 2 -> bot
";
    assert_eq!(stdout(&out), expected);
}

#[test]
fn run_concrete_matches_counter_allocation() {
    let out = shylock(&[
        "run",
        &program_path("call_renaming.shy"),
        "--semantics",
        "concrete",
    ]);
    assert_eq!(out.status.code(), Some(0));
    // counter-based identities: l=0, g=1, callee allocates 2
    assert_eq!(
        stdout(&out),
        "var g = 2\nvar l = bot\nvar nil = bot\nfield f: 2 -> bot\n"
    );
}

#[test]
fn check_holds_golden() {
    let out = shylock(&[
        "check",
        &program_path("rec_alloc.shy"),
        "--formula",
        "G {eps}",
        "--bound",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "HOLDS\n");
}

#[test]
fn check_json_format() {
    let out = shylock(&[
        "check",
        &program_path("bound0.shy"),
        "--formula",
        "true",
        "--bound",
        "0",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("verdict=BOUND-EXCEEDED"));
    assert_eq!(lines.next(), Some("head_symbol=\"x := new\""));
    assert_eq!(lines.next(), Some("head_heap=var nil = bot; var x = bot"));
}

#[test]
fn check_violated_json_has_stem() {
    let out = shylock(&[
        "check",
        &program_path("rec_alloc.shy"),
        "--formula",
        "F !{eps}",
        "--bound",
        "1",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.starts_with("verdict=VIOLATED\n"));
    assert!(text.contains("loop_head_symbol="));
    assert!(text.contains("stem_len="));
}

#[test]
fn bisim_pass_line() {
    let out = shylock(&[
        "bisim",
        &program_path("file.shy"),
        "--steps",
        "30",
        "--trials",
        "50",
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "PASS 50/50\n");
}

#[test]
fn pds_dump_golden() {
    let out = shylock(&["pds-dump", &program_path("rec_alloc.shy"), "--bound", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let expected = "\
hb3abafc5dff3 \"main\" -> hb3abafc5dff3 \"x := new; main\" hb3abafc5dff3
hb3abafc5dff3 \"x := new\" -> hb94955e312ee
hb3abafc5dff3 \"x := new; main\" -> hb3abafc5dff3 \"x := new\" \"main\"
hb94955e312ee \"main\" -> hb3abafc5dff3 \"x := new; main\" hb94955e312ee
legend:
  hb3abafc5dff3 = var nil = bot; var x = bot
  hb94955e312ee = var nil = bot; var x = 0
";
    assert_eq!(stdout(&out), expected);
}

#[test]
fn parse_prints_canonical_form() {
    let out = shylock(&["parse", &program_path("rec_alloc.shy")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out),
        "globals nil;\nlocals x;\nfields ;\nproc main { x := new; main }\n"
    );
}

#[test]
fn usage_and_parse_error_exit_codes() {
    let out = shylock(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(64));

    let out = shylock(&["check", &program_path("rec_alloc.shy"), "--bound", "1"]);
    assert_eq!(out.status.code(), Some(64)); // neither --formula nor --formula-file

    let dir = std::env::temp_dir().join("shylock-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.shy");
    std::fs::write(&bad, "globals g locals ;").unwrap();
    let out = shylock(&["parse", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(65));

    let out = shylock(&[
        "check",
        &program_path("rec_alloc.shy"),
        "--formula",
        "G {unknown_name}",
        "--bound",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(65));
}

#[test]
fn check_reads_formula_from_file() {
    let dir = std::env::temp_dir().join("shylock-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let f = dir.join("prop.ltl");
    std::fs::write(&f, "G {eps}\n").unwrap();
    let out = shylock(&[
        "check",
        &program_path("rec_alloc.shy"),
        "--formula-file",
        f.to_str().unwrap(),
        "--bound",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "HOLDS\n");
}

#[test]
fn run_rejects_zero_steps() {
    let out = shylock(&["run", &program_path("rec_alloc.shy"), "--steps", "0"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn run_null_field_write_is_runtime_error() {
    let dir = std::env::temp_dir().join("shylock-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let prog = dir.join("nullwrite.shy");
    std::fs::write(
        &prog,
        "globals g; locals l; fields f; proc main { l.f := g }",
    )
    .unwrap();
    let out = shylock(&["run", prog.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(70));
}
