// SPDX-License-Identifier: Apache-2.0

//! Programs that try to move secure data out of the trusted side.

use std::cell::RefCell;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polysplit::ast::{render_print_line, Host, Value};
use polysplit::frontends::{LanguageRegistry, Program};
use polysplit::partition::{partition_with, Side};
use polysplit::polytaint::{analyze, AnalyzeOptions, Classification, Entry};
use polysplit::secv::is_secure;
use polysplit::teesim::{Runtime, DEFAULT_COST};
use polysplit::EngineError;

/// Captures printed lines and whether any printed value was secure.
#[derive(Default)]
struct PrintLog {
    lines: RefCell<Vec<(String, bool)>>,
}

impl Host for PrintLog {
    fn print(&self, args: &[Value]) -> Result<(), EngineError> {
        let secure = args.iter().any(contains_secure);
        self.lines.borrow_mut().push((render_print_line(args), secure));
        Ok(())
    }

    fn read_line(&self) -> Result<Value, EngineError> {
        Ok(Value::str(""))
    }

    fn read_file(&self, _path: &str) -> Result<Value, EngineError> {
        Ok(Value::str(""))
    }
}

fn contains_secure(v: &Value) -> bool {
    match v {
        Value::Array(items) => items.iter().any(contains_secure),
        other => is_secure(other),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Return,
    ArrayReturn,
    OcallArg,
    TrustedPrint,
    GlobalRead,
    Benign,
}

const KINDS: [Kind; 6] = [
    Kind::Return,
    Kind::ArrayReturn,
    Kind::OcallArg,
    Kind::TrustedPrint,
    Kind::GlobalRead,
    Kind::Benign,
];

fn secret(rng: &mut ChaCha8Rng) -> String {
    format!("Polyglot.eval(\"secV\", \"sInt({})\")", rng.gen_range(700_000..800_000))
}

/// Wraps `expr` in `depth` pass-through helpers, so the secure value
/// travels through neutral code before reaching the boundary.
fn relay(out: &mut String, expr: &str, depth: usize, tag: usize) -> String {
    let mut e = expr.to_string();
    for d in 0..depth {
        writeln!(out, "function pass{tag}_{d}(x) {{\n  var y = x + {d};\n  return y;\n}}\n").unwrap();
        e = format!("pass{tag}_{d}({e})");
    }
    e
}

pub fn fuzz_program(seed: u64) -> (Kind, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kind = KINDS[seed as usize % KINDS.len()];
    let depth = rng.gen_range(0..3);
    let s = secret(&mut rng);
    let noise = rng.gen_range(1..50);
    let mut src = String::new();
    writeln!(src, "function noise(n) {{\n  console.log(\"noise\", n);\n  return n + 1;\n}}\n").unwrap();
    match kind {
        Kind::Return => {
            let e = relay(&mut src, "t", depth, 0);
            writeln!(src, "function leak() {{\n  var s = {s};\n  var t = s * 3;\n  return {e};\n}}\n").unwrap();
        }
        Kind::ArrayReturn => {
            writeln!(src, "function leak() {{\n  var s = {s};\n  var a = [{noise}, s, 3];\n  return a;\n}}\n").unwrap();
        }
        Kind::OcallArg => {
            writeln!(src, "function sink(v) {{\n  console.log(\"sink\", v);\n  return 0;\n}}\n").unwrap();
            let e = relay(&mut src, "s", depth, 1);
            writeln!(src, "function leak() {{\n  var s = {s};\n  var r = sink({e});\n  return r;\n}}\n").unwrap();
        }
        Kind::TrustedPrint => {
            writeln!(src, "function leak() {{\n  var s = {s};\n  console.log(\"value\", s - {noise});\n  return 0;\n}}\n").unwrap();
        }
        Kind::GlobalRead => {
            src.insert_str(0, &format!("var g = {s};\n\n"));
            writeln!(src, "function leak() {{\n  var t = g + {noise};\n  console.log(t);\n  return 1;\n}}\n").unwrap();
        }
        Kind::Benign => {
            writeln!(src, "function leak() {{\n  var s = {s};\n  var t = s + {noise};\n  var w = noise({noise});\n  return w;\n}}\n").unwrap();
        }
    };
    if rng.gen_bool(0.5) {
        writeln!(src, "console.log(noise({noise}));\nconsole.log(leak());\nconsole.log(\"end\");").unwrap();
    } else {
        writeln!(src, "function main() {{\n  console.log(noise({noise}));\n  console.log(leak());\n  console.log(\"end\");\n}}").unwrap();
    }
    (kind, src)
}

#[derive(Debug, PartialEq, Eq)]
pub enum Verdict {
    Contained,
    Guarded,
}

/// Runs the split and checks nothing secure reached untrusted output or
/// state. Panics on a silent escape.
fn run_split(program: &Program, registry: &LanguageRegistry, cls: &Classification, plain: &[(String, bool)]) -> Verdict {
    let analysis = analyze(program, registry, &AnalyzeOptions::default()).unwrap();
    let split = partition_with(program, &analysis, cls).unwrap();
    let io = PrintLog::default();
    let result = Runtime::load(split, registry, &io, DEFAULT_COST)
        .map_err(|e| match e {
            polysplit::LoadError::GlobalInit(e) => e,
            other => panic!("load failed: {other}"),
        })
        .and_then(|rt| {
            let r = rt.run();
            let u = rt.environment(Side::Untrusted);
            for (name, v) in u.interpreter.globals_snapshot() {
                assert!(!contains_secure(&v), "untrusted global {name} holds a secure value");
            }
            r
        });
    let lines = io.lines.borrow();
    for (i, (line, secure)) in lines.iter().enumerate() {
        assert!(!secure, "secure value printed on the untrusted side: {line}");
        let (want, was_secure) = &plain[i];
        assert_eq!(line, want, "line {i}");
        assert!(!was_secure, "line {i} carries secure data yet reached the console: {line}");
    }
    match result {
        Ok(()) => {
            assert_eq!(lines.len(), plain.len());
            Verdict::Contained
        }
        Err(EngineError::Guard(_)) => Verdict::Guarded,
        Err(e) => panic!("unexpected failure: {e}"),
    }
}

fn plain_lines(program: &Program, registry: &LanguageRegistry) -> Vec<(String, bool)> {
    let entry = Entry::resolve(program, None).unwrap();
    let interp = program.interpreter(Arc::new(registry.clone()));
    let io = PrintLog::default();
    let prelude: Vec<_> = entry.prelude(program).into_iter().map(|i| program.globals[i].clone()).collect();
    interp.run_toplevel(&prelude, &io).unwrap();
    if let Some(f) = entry.function() {
        interp.call_entry(f, Vec::new(), &io).unwrap();
    }
    io.lines.into_inner()
}

/// Moves every function outside T to the untrusted side.
fn without_neutral(cls: &Classification) -> Classification {
    Classification {
        trusted: cls.trusted.clone(),
        neutral: Vec::new(),
        untrusted: cls.neutral.iter().chain(&cls.untrusted).cloned().collect(),
    }
}

/// Runs `count` smuggling programs, each under its own classification
/// and with neutral functions pushed out of the enclave. Panics on any
/// escape or on a verdict other than the one the program kind demands.
/// Returns how many runs were stopped by the guard and how many finished.
pub fn run_suite(count: u64) -> (usize, usize) {
    let registry = LanguageRegistry::with_defaults();
    let mut guarded = 0;
    let mut contained = 0;
    for seed in 0..count {
        let (kind, src) = fuzz_program(seed);
        let program = registry
            .parse(&src, &format!("smuggle{seed}.mjs.txt"), None)
            .unwrap_or_else(|e| panic!("{e}\n{src}"));
        let plain = plain_lines(&program, &registry);
        let analysis = analyze(&program, &registry, &AnalyzeOptions::default()).unwrap();
        for cls in [analysis.classification.clone(), without_neutral(&analysis.classification)] {
            let v = run_split(&program, &registry, &cls, &plain);
            let want = if kind == Kind::Benign { Verdict::Contained } else { Verdict::Guarded };
            assert_eq!(v, want, "seed {seed} {kind:?}\n{src}");
            match v {
                Verdict::Guarded => guarded += 1,
                Verdict::Contained => contained += 1,
            }
        }
    }
    (guarded, contained)
}
