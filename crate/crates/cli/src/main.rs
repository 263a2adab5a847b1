//! Command-line front end: parse, simulate, model check, differential-test
//! and rule-dump Shylock programs.
//!
//! Exit codes: 0 success / property holds; 1 property violated; 2 visible
//! heap bound exceeded; 3 lockstep differential failure; 64 usage error;
//! 65 parse or validation error; 70 runtime error.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use shylock_core::checker::{check, saturate_plain, CheckOptions, ProductControl, Verdict};
use shylock_core::logic::parse_formula;
use shylock_core::pds::{Control, StackSym};
use shylock_core::semantics::{
    abstract_step, concrete_step, initial_config, lockstep_bisim, Frame,
};
use shylock_core::syntax::{parse_program, Program, Stmt};

const EXIT_OK: u8 = 0;
const EXIT_VIOLATED: u8 = 1;
const EXIT_BOUND: u8 = 2;
const EXIT_BISIM_FAIL: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_PARSE: u8 = 65;
const EXIT_RUNTIME: u8 = 70;

#[derive(Parser)]
#[command(
    name = "shylock",
    version,
    about = "Model checker for heap-manipulating recursive programs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a program and print its validated canonical form.
    Parse { program: PathBuf },
    /// Simulate a program with a seeded scheduler and print the final heap.
    Run {
        program: PathBuf,
        /// Which semantics to run.
        #[arg(long, value_enum, default_value_t = Semantics::Abstract)]
        semantics: Semantics,
        /// Maximum number of steps.
        #[arg(long, default_value_t = 100)]
        steps: u32,
        /// Scheduler seed for nondeterministic choice.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print one line per executed step.
        #[arg(long)]
        trace: bool,
    },
    /// Check a temporal heap property within a visible-heap bound.
    Check {
        program: PathBuf,
        /// Formula text.
        #[arg(long, conflicts_with = "formula_file")]
        formula: Option<String>,
        /// File containing the formula.
        #[arg(long)]
        formula_file: Option<PathBuf>,
        /// Visible-heap bound k.
        #[arg(long)]
        bound: usize,
        /// Output format.
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Cap on distinct control states discovered during saturation.
        #[arg(long, default_value_t = 100_000)]
        control_cap: usize,
    },
    /// Run the concrete and abstract semantics in lockstep and compare.
    Bisim {
        program: PathBuf,
        /// Steps per trial.
        #[arg(long, default_value_t = 50)]
        steps: u32,
        /// Number of trials.
        #[arg(long, default_value_t = 20)]
        trials: u32,
        /// Scheduler seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the pushdown rules discovered by saturation, with a heap legend.
    PdsDump {
        program: PathBuf,
        /// Visible-heap bound k.
        #[arg(long)]
        bound: usize,
        /// Cap on distinct control states discovered during saturation.
        #[arg(long, default_value_t = 100_000)]
        control_cap: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Semantics {
    Abstract,
    Concrete,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn fnv1a64(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn load_program(path: &PathBuf) -> Result<Program, u8> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(EXIT_RUNTIME);
        }
    };
    match parse_program(&text) {
        Ok(p) => Ok(p),
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            Err(EXIT_PARSE)
        }
    }
}

/// Stable short hash of a heap's dump, used to reference heaps in rule and
/// witness listings.
struct Legend<'a> {
    prog: &'a Program,
    entries: BTreeMap<String, String>,
}

impl<'a> Legend<'a> {
    fn new(prog: &'a Program) -> Self {
        Legend {
            prog,
            entries: BTreeMap::new(),
        }
    }

    fn heap(&mut self, h: &shylock_core::Heap) -> String {
        let dump = h.dump_line(self.prog.decls());
        let key = format!("h{:012x}", fnv1a64(&dump) & 0xffff_ffff_ffff);
        self.entries.insert(key.clone(), dump);
        key
    }

    fn control(&mut self, c: &Control) -> String {
        match c {
            Control::Top => "TOP".into(),
            Control::Heap(h) => self.heap(h),
        }
    }

    fn product(&mut self, pc: &ProductControl) -> String {
        format!("{}@q{}", self.control(&pc.base), pc.bstate)
    }

    fn sym(&mut self, s: &StackSym) -> String {
        match s {
            StackSym::Stmt(id) => format!("\"{}\"", self.prog.stmt_text(*id)),
            StackSym::Saved(h) => self.heap(h),
            StackSym::Z => "Z".into(),
        }
    }

    fn print(&self) {
        if self.entries.is_empty() {
            return;
        }
        println!("legend:");
        for (key, dump) in &self.entries {
            println!("  {key} = {dump}");
        }
    }
}

fn rule_name(prog: &Program, frame: &Frame) -> &'static str {
    match frame {
        Frame::Saved(_) => "return",
        Frame::Stmt(id) => match prog.stmt(*id) {
            Stmt::FieldWrite(..) => "field-write",
            Stmt::FieldRead(..) => "field-read",
            Stmt::New(..) => "new",
            Stmt::VarCopy(..) => "var-copy",
            Stmt::GuardEq(..) => "guard-eq",
            Stmt::GuardNeq(..) => "guard-neq",
            Stmt::Choice(..) => "choice",
            Stmt::Seq(..) => "seq",
            Stmt::Call(..) => "call",
        },
    }
}

fn cmd_run(prog: &Program, semantics: Semantics, steps: u32, seed: u64, trace: bool) -> u8 {
    // minimal splitmix so the front end does not need an RNG dependency
    let mut state = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut next_u64 = move || {
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    let concrete = semantics == Semantics::Concrete;
    let mut cfg = initial_config(prog, concrete);
    for i in 1..=steps {
        let rule = cfg.top().map(|f| rule_name(prog, f));
        let result = if concrete {
            concrete_step(&cfg, prog)
        } else {
            abstract_step(&cfg, prog)
        };
        let succs = match result {
            Ok(s) => s,
            Err(e) => {
                eprintln!("runtime error at step {i}: {e}");
                return EXIT_RUNTIME;
            }
        };
        if succs.is_empty() {
            break;
        }
        let pick = (next_u64() % succs.len() as u64) as usize;
        cfg = succs[pick].clone();
        if trace {
            println!(
                "#{i} {} | {} | stack-depth={}",
                rule.unwrap_or("?"),
                cfg.heap.dump_line(prog.decls()),
                cfg.stack.len()
            );
        }
    }
    println!("{}", cfg.heap.dump(prog.decls()));
    EXIT_OK
}

fn print_verdict_text(prog: &Program, verdict: &Verdict) {
    let mut legend = Legend::new(prog);
    match verdict {
        Verdict::Holds => println!("HOLDS"),
        Verdict::BoundExceeded { head } => {
            println!("BOUND-EXCEEDED");
            println!("symbol: {}", legend.sym(&head.1));
            match &head.0 {
                Control::Heap(h) => {
                    println!("heap:");
                    println!("{}", h.dump(prog.decls()));
                }
                Control::Top => println!("heap: TOP"),
            }
        }
        Verdict::Violated {
            init,
            stem,
            loop_head,
        } => {
            println!("VIOLATED");
            println!(
                "loop head: {} {}",
                legend.product(&loop_head.0),
                legend.sym(&loop_head.1)
            );
            let init_syms: Vec<String> = init.1.iter().map(|s| legend.sym(s)).collect();
            println!(
                "init: {} [{}]",
                legend.product(&init.0),
                init_syms.join(", ")
            );
            println!("stem:");
            for app in stem {
                let word: Vec<String> = app.to.1.iter().map(|s| legend.sym(s)).collect();
                println!(
                    "  {} {} -> {} [{}]",
                    legend.product(&app.from.0),
                    legend.sym(&app.from.1),
                    legend.product(&app.to.0),
                    word.join(", ")
                );
            }
            legend.print();
        }
    }
}

fn print_verdict_json(prog: &Program, verdict: &Verdict) {
    let mut legend = Legend::new(prog);
    match verdict {
        Verdict::Holds => println!("verdict=HOLDS"),
        Verdict::BoundExceeded { head } => {
            println!("verdict=BOUND-EXCEEDED");
            println!("head_symbol={}", legend.sym(&head.1));
            match &head.0 {
                Control::Heap(h) => println!("head_heap={}", h.dump_line(prog.decls())),
                Control::Top => println!("head_heap=TOP"),
            }
        }
        Verdict::Violated {
            init,
            stem,
            loop_head,
        } => {
            println!("verdict=VIOLATED");
            println!("loop_head_control={}", legend.product(&loop_head.0));
            println!("loop_head_symbol={}", legend.sym(&loop_head.1));
            let init_syms: Vec<String> = init.1.iter().map(|s| legend.sym(s)).collect();
            println!(
                "init={} [{}]",
                legend.product(&init.0),
                init_syms.join(", ")
            );
            println!("stem_len={}", stem.len());
            for (i, app) in stem.iter().enumerate() {
                let word: Vec<String> = app.to.1.iter().map(|s| legend.sym(s)).collect();
                println!(
                    "stem_{i}={} {} -> {} [{}]",
                    legend.product(&app.from.0),
                    legend.sym(&app.from.1),
                    legend.product(&app.to.0),
                    word.join(", ")
                );
            }
            for (key, dump) in &legend.entries {
                println!("legend_{key}={dump}");
            }
        }
    }
}

fn cmd_check(
    prog: &Program,
    formula_text: &str,
    bound: usize,
    format: Format,
    control_cap: usize,
) -> u8 {
    let phi = match parse_formula(formula_text, prog.decls()) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: formula: {e}");
            return EXIT_PARSE;
        }
    };
    let opts = CheckOptions {
        control_cap,
        ..CheckOptions::default()
    };
    let verdict = match check(prog, &phi, bound, &opts) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    match format {
        Format::Text => print_verdict_text(prog, &verdict),
        Format::Json => print_verdict_json(prog, &verdict),
    }
    match verdict {
        Verdict::Holds => EXIT_OK,
        Verdict::Violated { .. } => EXIT_VIOLATED,
        Verdict::BoundExceeded { .. } => EXIT_BOUND,
    }
}

fn cmd_bisim(prog: &Program, steps: u32, trials: u32, seed: u64) -> u8 {
    let report = lockstep_bisim(prog, steps, trials, seed);
    match report.failure {
        None => {
            println!("PASS {}/{}", report.passed, report.trials);
            EXIT_OK
        }
        Some(f) => {
            println!("FAIL {}/{}", report.passed, report.trials);
            println!("{f}");
            EXIT_BISIM_FAIL
        }
    }
}

fn cmd_pds_dump(prog: &Program, bound: usize, control_cap: usize) -> u8 {
    let ps = match saturate_plain(prog, bound, control_cap) {
        Ok(ps) => ps,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    let mut legend = Legend::new(prog);
    let mut lines = Vec::new();
    for ((c, s), succs) in &ps.rules {
        for (c2, w) in succs {
            let mut line = format!(
                "{} {} -> {}",
                legend.control(c),
                legend.sym(s),
                legend.control(c2)
            );
            for sym in w {
                line.push(' ');
                line.push_str(&legend.sym(sym));
            }
            lines.push(line);
        }
    }
    lines.sort();
    for line in lines {
        println!("{line}");
    }
    legend.print();
    EXIT_OK
}

fn dispatch(cli: Cli) -> u8 {
    match cli.cmd {
        Cmd::Parse { program } => match load_program(&program) {
            Ok(p) => {
                print!("{}", p.text());
                EXIT_OK
            }
            Err(code) => code,
        },
        Cmd::Run {
            program,
            semantics,
            steps,
            seed,
            trace,
        } => {
            if steps == 0 {
                eprintln!("error: --steps must be at least 1");
                return EXIT_USAGE;
            }
            match load_program(&program) {
                Ok(p) => cmd_run(&p, semantics, steps, seed, trace),
                Err(code) => code,
            }
        }
        Cmd::Check {
            program,
            formula,
            formula_file,
            bound,
            format,
            control_cap,
        } => {
            let text = match (formula, formula_file) {
                (Some(t), None) => t,
                (None, Some(path)) => match std::fs::read_to_string(&path) {
                    Ok(t) => t,
                    Err(e) => {
                        eprintln!("error: cannot read {}: {e}", path.display());
                        return EXIT_RUNTIME;
                    }
                },
                _ => {
                    eprintln!("error: provide exactly one of --formula or --formula-file");
                    return EXIT_USAGE;
                }
            };
            match load_program(&program) {
                Ok(p) => cmd_check(&p, text.trim(), bound, format, control_cap),
                Err(code) => code,
            }
        }
        Cmd::Bisim {
            program,
            steps,
            trials,
            seed,
        } => {
            if steps == 0 {
                eprintln!("error: --steps must be at least 1");
                return EXIT_USAGE;
            }
            match load_program(&program) {
                Ok(p) => cmd_bisim(&p, steps, trials, seed),
                Err(code) => code,
            }
        }
        Cmd::PdsDump {
            program,
            bound,
            control_cap,
        } => match load_program(&program) {
            Ok(p) => cmd_pds_dump(&p, bound, control_cap),
            Err(code) => code,
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(dispatch(cli))
}
