// SPDX-License-Identifier: Apache-2.0

//! Test-side oracles: a raw event recorder, an offline taint replay, a
//! transition counter, and a seeded generator of twin guest programs.

#![allow(dead_code)]

pub mod smuggle;

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polysplit::ast::{
    render_print_line, CallTargetInfo, EventContext, EventNode, Host, InstrumentationAgent, Node,
    NodeKind, Scope, SyntaxTag, Value,
};
use polysplit::frontends::{LanguageRegistry, Program};
use polysplit::polytaint::{Classification, Entry};
use polysplit::secv::is_secure;
use polysplit::EngineError;

/// Expression facts gathered by walking a subtree.
#[derive(Debug, Clone, Default)]
pub struct Sources {
    pub secv: bool,
    pub symbols: Vec<String>,
}

#[derive(Debug, Clone)]
pub enum Ev {
    Assign {
        function: String,
        target: String,
        global: bool,
        rhs: Sources,
        secure: bool,
    },
    Read {
        function: String,
        symbol: String,
        param: bool,
        secure: bool,
    },
    Call {
        caller: String,
        callee: String,
        params: Vec<String>,
        args: Vec<(Sources, bool)>,
    },
    Return {
        callee: String,
    },
    Builtin {
        name: String,
    },
    Print,
}

pub type Trace = Arc<Mutex<Vec<Ev>>>;

fn local(file: &str, function: &str, name: &str) -> String {
    format!("{file}::{function}::{name}")
}

fn global(file: &str, name: &str) -> String {
    format!("{file}::global::{name}")
}

fn function_sym(file: &str, name: &str) -> String {
    format!("{file}::fn::{name}")
}

fn var_symbol(file: &str, function: &str, v: &polysplit::ast::VarRef) -> String {
    match v.scope {
        Scope::Global => global(file, &v.name),
        Scope::Local => local(file, function, &v.name),
    }
}

/// The symbol a node names, if any.
fn symbol_of(node: &Node, file: &str, function: &str) -> Option<String> {
    match &node.kind {
        NodeKind::VarRead(v) | NodeKind::VarWrite(v) | NodeKind::ArrayWrite(v) => {
            Some(var_symbol(file, function, v))
        }
        NodeKind::PropertyRead(p) | NodeKind::PropertyWrite(p) => Some(global(file, p)),
        NodeKind::ArrayRead => node
            .children
            .first()
            .and_then(|c| match &c.kind {
                NodeKind::VarRead(_) | NodeKind::PropertyRead(_) => symbol_of(c, file, function),
                _ => None,
            }),
        _ => None,
    }
}

fn collect(node: &Node, file: &str, function: &str, out: &mut Sources) {
    if matches!(node.kind, NodeKind::PolyglotEval)
        && node
            .children
            .iter()
            .any(|c| matches!(&c.kind, NodeKind::StringLiteral(s) if s == "secV"))
    {
        out.secv = true;
    }
    if let Some(s) = symbol_of(node, file, function) {
        out.symbols.push(s);
    }
    for c in &node.children {
        collect(c, file, function, out);
    }
}

fn sources(node: Option<&Node>, file: &str, function: &str) -> Sources {
    let mut s = Sources::default();
    if let Some(n) = node {
        collect(n, file, function, &mut s);
    }
    s
}

struct Recorder {
    trace: Trace,
    /// Guest callee per open activation of a call node.
    pending: Mutex<Vec<Option<String>>>,
}

impl Recorder {
    fn push(&self, ev: Ev) {
        self.trace.lock().unwrap().push(ev);
    }
}

impl EventNode for Recorder {
    fn on_input_values(&self, cx: &EventContext<'_>, inputs: &[Value]) {
        let function = cx.frame.function.to_string();
        let guest = cx.target.as_ref().and_then(|t| t.guest_name()).map(str::to_string);
        self.pending.lock().unwrap().push(guest);
        match &cx.target {
            Some(CallTargetInfo::Guest { name, params }) => {
                let args = cx
                    .node
                    .children
                    .iter()
                    .enumerate()
                    .map(|(i, a)| {
                        let secure = inputs.get(i).is_some_and(is_secure);
                        (sources(Some(a), cx.file, &function), secure)
                    })
                    .collect();
                self.push(Ev::Call {
                    caller: function,
                    callee: name.to_string(),
                    params: params.to_vec(),
                    args,
                });
            }
            Some(CallTargetInfo::Builtin { name }) => self.push(Ev::Builtin {
                name: name.to_string(),
            }),
            _ => {}
        }
    }

    fn on_return_value(&self, cx: &EventContext<'_>, result: &Value) {
        let function = cx.frame.function.to_string();
        let file = cx.file;
        match &cx.node.kind {
            NodeKind::VarWrite(_) | NodeKind::PropertyWrite(_) | NodeKind::ArrayWrite(_) => {
                let value = match cx.node.kind {
                    NodeKind::ArrayWrite(_) => cx.node.children.get(1),
                    _ => cx.node.children.first(),
                };
                let target = symbol_of(cx.node, file, &function).unwrap();
                self.push(Ev::Assign {
                    global: target.starts_with(&format!("{file}::global::")),
                    target,
                    rhs: sources(value, file, &function),
                    secure: is_secure(result),
                    function,
                });
            }
            NodeKind::VarRead(_) | NodeKind::PropertyRead(_) | NodeKind::ArrayRead => {
                let Some(symbol) = symbol_of(cx.node, file, &function) else {
                    return;
                };
                let var = match &cx.node.kind {
                    NodeKind::VarRead(v) => Some(v),
                    NodeKind::ArrayRead => match cx.node.children.first().map(|c| &c.kind) {
                        Some(NodeKind::VarRead(v)) => Some(v),
                        _ => None,
                    },
                    _ => None,
                };
                let param = var.is_some_and(|v| {
                    v.scope == Scope::Local && cx.frame.params.contains(&v.name)
                });
                self.push(Ev::Read {
                    function,
                    symbol,
                    param,
                    secure: is_secure(result),
                });
            }
            NodeKind::Call(_) | NodeKind::PolyglotEval => {
                let open = self.pending.lock().unwrap().pop().flatten();
                if let Some(callee) = open {
                    self.push(Ev::Return { callee });
                }
            }
            _ => {}
        }
    }
}

pub fn recording_agent(trace: Trace) -> InstrumentationAgent {
    let mut agent = InstrumentationAgent::new("recorder");
    for tag in SyntaxTag::ALL {
        if tag == SyntaxTag::Root {
            continue;
        }
        let t = trace.clone();
        agent.register(tag, move |_: &Node| -> Box<dyn EventNode> {
            Box::new(Recorder {
                trace: t.clone(),
                pending: Mutex::default(),
            })
        });
    }
    agent
}

/// Host that logs prints into the trace.
struct TraceHost {
    trace: Trace,
    out: RefCell<String>,
}

impl Host for TraceHost {
    fn print(&self, args: &[Value]) -> Result<(), EngineError> {
        self.trace.lock().unwrap().push(Ev::Print);
        let mut out = self.out.borrow_mut();
        out.push_str(&render_print_line(args));
        out.push('\n');
        Ok(())
    }

    fn read_line(&self) -> Result<Value, EngineError> {
        Ok(Value::str(""))
    }

    fn read_file(&self, _path: &str) -> Result<Value, EngineError> {
        Ok(Value::str(""))
    }
}

pub struct Recording {
    pub events: Vec<Ev>,
    pub output: String,
}

/// Runs `program` from its default entry with the recorder attached.
pub fn record(program: &Program, registry: &LanguageRegistry) -> Recording {
    let trace: Trace = Arc::default();
    let entry = Entry::resolve(program, None).unwrap();
    let interp = program
        .interpreter(Arc::new(registry.clone()))
        .with_agent(Arc::new(recording_agent(trace.clone())));
    let host = TraceHost {
        trace: trace.clone(),
        out: RefCell::default(),
    };
    let prelude: Vec<_> = entry
        .prelude(program)
        .into_iter()
        .map(|i| program.globals[i].clone())
        .collect();
    interp.run_toplevel(&prelude, &host).unwrap();
    if let Some(f) = entry.function() {
        interp.call_entry(f, Vec::new(), &host).unwrap();
    }
    let events = std::mem::take(&mut *trace.lock().unwrap());
    Recording {
        events,
        output: host.out.into_inner(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Origin {
    Direct,
    ViaParameter,
}

/// Offline replay of a trace into symbol -> label codes.
///
/// Pass one walks the trace in order and marks a symbol the first time a
/// data-flow edge reaches it from a `secV` eval or an already-marked
/// symbol. Pass two labels each function with the strongest evidence any
/// single event gives, so its result does not depend on event order.
pub fn replay(file: &str, events: &[Ev]) -> BTreeMap<String, u8> {
    // Pass one: time of first marking and origin for every symbol.
    let mut marked: HashMap<String, (usize, Origin)> = HashMap::new();
    let is_marked_at = |m: &HashMap<String, (usize, Origin)>, s: &str, t: usize| {
        m.get(s).is_some_and(|(at, _)| *at < t)
    };
    let origin_of = |m: &HashMap<String, (usize, Origin)>, src: &Sources, t: usize| {
        if src.secv {
            return Some(Origin::Direct);
        }
        let hits: Vec<Origin> = src
            .symbols
            .iter()
            .filter_map(|s| m.get(s).filter(|(at, _)| *at < t).map(|(_, o)| *o))
            .collect();
        if hits.contains(&Origin::Direct) {
            Some(Origin::Direct)
        } else {
            hits.first().copied()
        }
    };
    // Functions that received marked data, with the evidence strength.
    let mut evidence: Vec<(String, u8)> = Vec::new();
    for (t, ev) in events.iter().enumerate() {
        match ev {
            Ev::Assign {
                function,
                target,
                global,
                rhs,
                secure,
            } => {
                if marked.contains_key(target) {
                    continue;
                }
                let origin = match origin_of(&marked, rhs, t) {
                    Some(o) => o,
                    None if *secure => Origin::Direct,
                    None => continue,
                };
                let origin = if *global { Origin::Direct } else { origin };
                marked.insert(target.clone(), (t, origin));
                let strength = if origin == Origin::Direct { 1 } else { 2 };
                evidence.push((function_sym(file, function), strength));
            }
            Ev::Call {
                callee,
                params,
                args,
                ..
            } => {
                let mut hit = false;
                for (i, (src, secure)) in args.iter().enumerate() {
                    let flows = *secure
                        || src.secv
                        || src.symbols.iter().any(|s| is_marked_at(&marked, s, t));
                    if flows {
                        hit = true;
                        if let Some(p) = params.get(i) {
                            marked
                                .entry(local(file, callee, p))
                                .or_insert((t, Origin::ViaParameter));
                        }
                    }
                }
                if hit {
                    evidence.push((function_sym(file, callee), 2));
                }
            }
            _ => {}
        }
    }
    // Pass two: reads.
    for (t, ev) in events.iter().enumerate() {
        if let Ev::Read {
            function,
            symbol,
            param,
            secure,
        } = ev
        {
            let f = function_sym(file, function);
            match marked.get(symbol) {
                Some((at, origin)) if *at < t => {
                    evidence.push((f, if *origin == Origin::Direct { 1 } else { 2 }));
                }
                _ if *param && *secure => evidence.push((f, 2)),
                _ => {}
            }
        }
    }
    let mut out: BTreeMap<String, u8> = marked.into_keys().map(|s| (s, 1)).collect();
    for (f, strength) in evidence {
        let slot = out.entry(f).or_insert(strength);
        if strength == 1 {
            *slot = 1;
        }
    }
    out
}

/// Function names in first-call order.
pub fn seen(events: &[Ev]) -> Vec<String> {
    let mut order = Vec::new();
    let mut set = HashSet::new();
    for ev in events {
        if let Ev::Call { callee, .. } = ev {
            if set.insert(callee.clone()) {
                order.push(callee.clone());
            }
        }
    }
    order
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Crossings {
    pub ecalls: u64,
    pub ocalls: u64,
    pub shim_ocalls: u64,
}

/// Counts boundary crossings a split with `trusted` on the trusted side
/// would make, by replaying the call stack. Neutral functions run on the
/// side of their caller; the entry starts outside.
pub fn crossings(events: &[Ev], trusted: &HashSet<&str>, neutral: &HashSet<&str>) -> Crossings {
    let mut c = Crossings::default();
    let mut stack = vec![false];
    for ev in events {
        let inside = *stack.last().unwrap();
        match ev {
            Ev::Call { callee, .. } => {
                let callee_inside = if trusted.contains(callee.as_str()) {
                    true
                } else if neutral.contains(callee.as_str()) {
                    inside
                } else {
                    false
                };
                match (inside, callee_inside) {
                    (false, true) => c.ecalls += 1,
                    (true, false) => c.ocalls += 1,
                    _ => {}
                }
                stack.push(callee_inside);
            }
            Ev::Return { .. } => {
                stack.pop();
            }
            Ev::Print if inside => {
                c.ocalls += 1;
                c.shim_ocalls += 1;
            }
            Ev::Builtin { name } if inside && (name == "readLine" || name == "readFile") => {
                c.ocalls += 1;
                c.shim_ocalls += 1;
            }
            _ => {}
        }
    }
    c
}

pub fn partitioned_crossings(events: &[Ev], cls: &Classification) -> Crossings {
    let t: HashSet<&str> = cls.trusted.iter().map(String::as_str).collect();
    let n: HashSet<&str> = cls.neutral.iter().map(String::as_str).collect();
    crossings(events, &t, &n)
}

pub fn unpartitioned_crossings(events: &[Ev], cls: &Classification) -> Crossings {
    let t: HashSet<&str> = cls.all().collect();
    crossings(events, &t, &HashSet::new())
}

// ---------------------------------------------------------------------------
// Program generator

#[derive(Debug, Clone)]
enum Expr {
    Int(i64),
    Local(String),
    Global(String),
    Secure(i64),
    Call(usize, Vec<Expr>),
    Bin(&'static str, Box<Expr>, Box<Expr>),
    Index(String, i64),
}

#[derive(Debug, Clone)]
enum Stmt {
    Set(String, Expr),
    SetGlobal(String, Expr),
    SetIndex(String, i64, Expr),
    If(Expr, String, Expr),
    Loop(String, String, Expr),
    Print(Expr),
}

#[derive(Debug, Clone)]
struct Func {
    params: Vec<String>,
    locals: Vec<String>,
    body: Vec<Stmt>,
    ret: Expr,
}

/// A generated program in both surface syntaxes.
#[derive(Debug, Clone)]
pub struct Generated {
    pub name: String,
    pub minijs: String,
    pub minipy: String,
}

struct Gen {
    rng: ChaCha8Rng,
    globals: Vec<String>,
    arity: Vec<usize>,
}

const ARRAY: &str = "w";

impl Gen {
    fn expr(&mut self, f: usize, func: &Func, depth: u32) -> Expr {
        let leaf = depth == 0 || self.rng.gen_bool(0.35);
        if leaf {
            return match self.rng.gen_range(0..10) {
                0 | 1 => Expr::Int(self.rng.gen_range(0..9)),
                2 => Expr::Secure(self.rng.gen_range(1..9)),
                3 => Expr::Global(self.globals[self.rng.gen_range(0..self.globals.len())].clone()),
                4 => Expr::Index(ARRAY.into(), self.rng.gen_range(0..2)),
                5 | 6 if !func.params.is_empty() => {
                    Expr::Local(func.params[self.rng.gen_range(0..func.params.len())].clone())
                }
                _ => Expr::Local(func.locals[self.rng.gen_range(0..func.locals.len())].clone()),
            };
        }
        if f + 1 < self.arity.len() && self.rng.gen_bool(0.3) {
            let g = self.rng.gen_range(f + 1..self.arity.len());
            let args = (0..self.arity[g]).map(|_| self.expr(f, func, depth - 1)).collect();
            return Expr::Call(g, args);
        }
        let op = ["+", "-", "*"][self.rng.gen_range(0..3)];
        Expr::Bin(
            op,
            Box::new(self.expr(f, func, depth - 1)),
            Box::new(self.expr(f, func, depth - 1)),
        )
    }

    fn local(&mut self, func: &Func) -> String {
        func.locals[self.rng.gen_range(0..func.locals.len())].clone()
    }

    fn function(&mut self, f: usize) -> Func {
        let mut func = Func {
            params: (0..self.arity[f]).map(|i| format!("a{i}")).collect(),
            locals: (0..self.rng.gen_range(1..4)).map(|i| format!("v{i}")).collect(),
            body: Vec::new(),
            ret: Expr::Int(0),
        };
        let mut loops = 0;
        for _ in 0..self.rng.gen_range(2..7) {
            let stmt = match self.rng.gen_range(0..10) {
                0..=3 => Stmt::Set(self.local(&func), self.expr(f, &func, 2)),
                4 => {
                    let g = self.globals[self.rng.gen_range(0..self.globals.len())].clone();
                    Stmt::SetGlobal(g, self.expr(f, &func, 1))
                }
                5 => Stmt::SetIndex(ARRAY.into(), self.rng.gen_range(0..2), self.expr(f, &func, 1)),
                6 => Stmt::If(self.expr(f, &func, 1), self.local(&func), self.expr(f, &func, 1)),
                7 => {
                    loops += 1;
                    Stmt::Loop(format!("i{loops}"), self.local(&func), self.expr(f, &func, 1))
                }
                _ => Stmt::Print(self.expr(f, &func, 1)),
            };
            func.body.push(stmt);
        }
        func.ret = self.expr(f, &func, 1);
        func
    }
}

fn js_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Int(i) => write!(out, "{i}").unwrap(),
        Expr::Local(v) | Expr::Global(v) => out.push_str(v),
        Expr::Secure(i) => write!(out, "Polyglot.eval(\"secV\", \"sInt({i})\")").unwrap(),
        Expr::Call(g, args) => {
            write!(out, "f{g}(").unwrap();
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                js_expr(a, out);
            }
            out.push(')');
        }
        Expr::Bin(op, a, b) => {
            out.push('(');
            js_expr(a, out);
            write!(out, " {op} ").unwrap();
            js_expr(b, out);
            out.push(')');
        }
        Expr::Index(a, i) => write!(out, "{a}[{i}]").unwrap(),
    }
}

fn py_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Secure(i) => {
            write!(out, "polyglot.eval(language=\"secV\", string=\"sInt({i})\")").unwrap()
        }
        Expr::Call(g, args) => {
            write!(out, "f{g}(").unwrap();
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                py_expr(a, out);
            }
            out.push(')');
        }
        Expr::Bin(op, a, b) => {
            out.push('(');
            py_expr(a, out);
            write!(out, " {op} ").unwrap();
            py_expr(b, out);
            out.push(')');
        }
        other => js_expr(other, out),
    }
}

fn js(e: &Expr) -> String {
    let mut s = String::new();
    js_expr(e, &mut s);
    s
}

fn py(e: &Expr) -> String {
    let mut s = String::new();
    py_expr(e, &mut s);
    s
}

/// Generates a program with a handful of functions, globals, secure
/// literals, branches, loops and array slots. Calls only go to
/// higher-numbered functions, so every program terminates.
pub fn generate(seed: u64) -> Generated {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let functions = rng.gen_range(3..7);
    let arity = (0..functions).map(|_| rng.gen_range(0..3)).collect();
    let globals = (0..rng.gen_range(1..4)).map(|i| format!("g{i}")).collect();
    let mut g = Gen { rng, globals, arity };
    let inits: Vec<Expr> = g
        .globals
        .clone()
        .iter()
        .map(|_| {
            if g.rng.gen_bool(0.3) {
                Expr::Secure(g.rng.gen_range(1..9))
            } else {
                Expr::Int(g.rng.gen_range(0..9))
            }
        })
        .collect();
    let funcs: Vec<Func> = (0..functions).map(|f| g.function(f)).collect();
    let mut calls: Vec<usize> = (0..functions).filter(|_| g.rng.gen_bool(0.6)).collect();
    calls.push(0);
    let main: Vec<Expr> = calls
        .into_iter()
        .map(|f| {
            let args = (0..g.arity[f])
                .map(|_| match g.rng.gen_range(0..3) {
                    0 => Expr::Secure(g.rng.gen_range(1..9)),
                    1 => Expr::Global(g.globals[0].clone()),
                    _ => Expr::Int(g.rng.gen_range(0..9)),
                })
                .collect();
            Expr::Call(f, args)
        })
        .collect();

    let name = format!("gen{seed:03}");
    let mut mjs = String::new();
    let mut mpy = String::from("import polyglot\n\n");
    for (v, e) in g.globals.iter().zip(&inits) {
        writeln!(mjs, "var {v} = {};", js(e)).unwrap();
        writeln!(mpy, "{v} = {}", py(e)).unwrap();
    }
    for (f, func) in funcs.iter().enumerate() {
        let params = func.params.join(", ");
        writeln!(mjs, "\nfunction f{f}({params}) {{").unwrap();
        writeln!(mpy, "\ndef f{f}({params}):").unwrap();
        let written: Vec<&String> = g
            .globals
            .iter()
            .filter(|v| func.body.iter().any(|s| matches!(s, Stmt::SetGlobal(t, _) if t == *v)))
            .collect();
        if !written.is_empty() {
            let names: Vec<&str> = written.iter().map(|s| s.as_str()).collect();
            writeln!(mpy, "    global {}", names.join(", ")).unwrap();
        }
        for (i, v) in func.locals.iter().enumerate() {
            writeln!(mjs, "  var {v} = {};", i + 1).unwrap();
            writeln!(mpy, "    {v} = {}", i + 1).unwrap();
        }
        writeln!(mjs, "  var {ARRAY} = [1, 2];").unwrap();
        writeln!(mpy, "    {ARRAY} = [1, 2]").unwrap();
        for s in &func.body {
            match s {
                Stmt::Set(v, e) | Stmt::SetGlobal(v, e) => {
                    writeln!(mjs, "  {v} = {};", js(e)).unwrap();
                    writeln!(mpy, "    {v} = {}", py(e)).unwrap();
                }
                Stmt::SetIndex(a, i, e) => {
                    writeln!(mjs, "  {a}[{i}] = {};", js(e)).unwrap();
                    writeln!(mpy, "    {a}[{i}] = {}", py(e)).unwrap();
                }
                Stmt::If(c, v, e) => {
                    writeln!(mjs, "  if ({} > 0) {{\n    {v} = {};\n  }}", js(c), js(e)).unwrap();
                    writeln!(mpy, "    if {} > 0:\n        {v} = {}", py(c), py(e)).unwrap();
                }
                Stmt::Loop(i, v, e) => {
                    writeln!(
                        mjs,
                        "  for (var {i} = 0; {i} < 3; {i}++) {{\n    {v} = {v} + {};\n  }}",
                        js(e)
                    )
                    .unwrap();
                    writeln!(mpy, "    for {i} in range(3):\n        {v} = {v} + {}", py(e)).unwrap();
                }
                Stmt::Print(e) => {
                    writeln!(mjs, "  console.log({});", js(e)).unwrap();
                    writeln!(mpy, "    print({})", py(e)).unwrap();
                }
            }
        }
        writeln!(mjs, "  return {};\n}}", js(&func.ret)).unwrap();
        writeln!(mpy, "    return {}", py(&func.ret)).unwrap();
    }
    writeln!(mjs, "\nfunction main() {{").unwrap();
    writeln!(mpy, "\ndef main():").unwrap();
    for (i, call) in main.iter().enumerate() {
        writeln!(mjs, "  var r{i} = {};", js(call)).unwrap();
        writeln!(mpy, "    r{i} = {}", py(call)).unwrap();
    }
    writeln!(mjs, "  console.log(\"done\");\n}}").unwrap();
    writeln!(mpy, "    print(\"done\")").unwrap();
    Generated {
        name,
        minijs: mjs,
        minipy: mpy,
    }
}

impl Generated {
    pub fn sources(&self) -> [(String, &str); 2] {
        [
            (format!("{}.mjs.txt", self.name), self.minijs.as_str()),
            (format!("{}.mpy.txt", self.name), self.minipy.as_str()),
        ]
    }
}

// ---------------------------------------------------------------------------
// Structural checks

/// Node kinds of a subtree, ignoring ids and source positions.
pub fn shape(node: &Node) -> String {
    let mut s = format!("{:?}", node.kind);
    if !node.children.is_empty() {
        s.push('(');
        for (i, c) in node.children.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&shape(c));
        }
        s.push(')');
    }
    s
}

/// Checks the manifest pair against a classification: reals, proxies,
/// transitions and stubs. Returns the first violation found.
pub fn manifest_violation(
    split: &polysplit::partition::Partition,
    cls: &Classification,
) -> Option<String> {
    use polysplit::partition::Transition;
    fn sorted<'a>(it: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
        let mut v: Vec<&str> = it.collect();
        v.sort_unstable();
        v
    }
    let t = &split.trusted;
    let u = &split.untrusted;
    let want_t_real = sorted(cls.trusted.iter().chain(&cls.neutral).map(String::as_str));
    let want_u_real = sorted(cls.untrusted.iter().chain(&cls.neutral).map(String::as_str));
    let want_t_proxy = sorted(cls.untrusted.iter().map(String::as_str));
    let want_u_proxy = sorted(cls.trusted.iter().map(String::as_str));
    let checks = [
        ("trusted reals", sorted(t.reals().map(|e| e.name.as_str())), want_t_real),
        ("untrusted reals", sorted(u.reals().map(|e| e.name.as_str())), want_u_real),
        ("trusted proxies", sorted(t.proxies().map(|e| e.name.as_str())), want_t_proxy),
        ("untrusted proxies", sorted(u.proxies().map(|e| e.name.as_str())), want_u_proxy),
    ];
    for (what, got, want) in checks {
        if got != want {
            return Some(format!("{what}: {got:?} != {want:?}"));
        }
    }
    for (side, want) in [(t, Transition::Ocall), (u, Transition::Ecall)] {
        for e in side.entries.iter() {
            let expected = if e.is_real() { Transition::None } else { want };
            if e.transition != expected {
                return Some(format!("{} `{}` has transition {:?}", side.side, e.name, e.transition));
            }
            if e.is_real() != e.source_text.is_some() {
                return Some(format!("{} `{}` source text presence", side.side, e.name));
            }
        }
        let mut stubs: Vec<&str> = side.stubs.iter().map(|s| s.name.as_str()).collect();
        let proxies = sorted(side.proxies().map(|e| e.name.as_str()));
        stubs.sort_unstable();
        if stubs != proxies {
            return Some(format!("{} stubs {stubs:?} != proxies {proxies:?}", side.side));
        }
    }
    for f in &cls.neutral {
        if t.entry(f).map(|e| &e.source_text) != u.entry(f).map(|e| &e.source_text) {
            return Some(format!("neutral `{f}` differs between sides"));
        }
    }
    None
}
