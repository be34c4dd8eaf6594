// SPDX-License-Identifier: Apache-2.0

use std::cell::{Cell, RefCell};
use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use indexmap::IndexMap;

use super::instrument::{wrap_first_visit, CallTargetInfo, EventContext, EventNode};
use super::instrument::InstrumentationAgent;
use super::node::{BinOp, Node, NodeId, NodeKind, Scope, VarRef};
use super::source::{SourceFile, SourceSection};
use super::value::Value;
use crate::error::{Direction, EngineError};
use crate::secv;

/// Function name used for frames executing top-level statements.
pub const TOPLEVEL: &str = "<toplevel>";

/// Host builtins callable by name from guest code.
pub const BUILTINS: &[&str] = &["len", "newArray", "readLine", "readFile"];

const DEFAULT_MAX_DEPTH: usize = 200;

/// Local variables of one activation. Frames hold a handful of names, so a
/// flat list beats hashing.
#[derive(Debug, Clone, Default)]
pub struct Locals(Vec<(String, Value)>);

impl Locals {
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Value> {
        self.0.iter_mut().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn insert(&mut self, name: &str, v: Value) {
        match self.get_mut(name) {
            Some(slot) => *slot = v,
            None => self.0.push((name.to_string(), v)),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.0.iter().map(|(n, v)| (n.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(String, Value)> for Locals {
    fn from_iter<I: IntoIterator<Item = (String, Value)>>(iter: I) -> Self {
        Locals(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone)]
pub struct Frame {
    pub function: Arc<str>,
    pub params: Arc<[String]>,
    pub args: Vec<Value>,
    pub locals: Locals,
}

impl Frame {
    pub fn toplevel() -> Frame {
        Frame {
            function: Arc::from(TOPLEVEL),
            params: Arc::from(Vec::new()),
            args: Vec::new(),
            locals: Locals::default(),
        }
    }

    pub fn is_toplevel(&self) -> bool {
        &*self.function == TOPLEVEL
    }

    pub fn is_param(&self, name: &str) -> bool {
        self.params.iter().any(|p| p == name)
    }
}

/// A function whose body lives on the other side of the enclave boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProxyTarget {
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy)]
pub enum CallTarget<'a> {
    Guest(&'a Node),
    Proxy(&'a ProxyTarget),
    Builtin(&'static str),
}

/// Services the engine needs from its embedding: I/O and boundary crossing.
pub trait Host {
    fn print(&self, args: &[Value]) -> Result<(), EngineError>;
    fn read_line(&self) -> Result<Value, EngineError>;
    fn read_file(&self, path: &str) -> Result<Value, EngineError>;
    fn call_proxy(
        &self,
        name: &str,
        proxy: &ProxyTarget,
        args: Vec<Value>,
    ) -> Result<Value, EngineError> {
        let _ = args;
        Err(EngineError::Boundary(format!(
            "no boundary available for {} `{name}`",
            proxy.direction
        )))
    }
    /// Whether `secV` constructors may run here.
    fn may_create_secure(&self) -> bool {
        true
    }
}

/// Host that captures output in memory and serves queued input lines.
#[derive(Debug, Default)]
pub struct BufferedHost {
    out: RefCell<String>,
    input: RefCell<VecDeque<String>>,
    echo: bool,
}

impl BufferedHost {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_input<I, S>(lines: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        BufferedHost {
            input: RefCell::new(lines.into_iter().map(Into::into).collect()),
            ..Self::default()
        }
    }

    /// Also forward output to the process stdout.
    pub fn echo(mut self, on: bool) -> Self {
        self.echo = on;
        self
    }

    pub fn output(&self) -> String {
        self.out.borrow().clone()
    }

    pub fn write_line(&self, line: &str) {
        if self.echo {
            println!("{line}");
        }
        let mut out = self.out.borrow_mut();
        out.push_str(line);
        out.push('\n');
    }
}

pub fn render_print_line(args: &[Value]) -> String {
    args.iter().map(Value::render).collect::<Vec<_>>().join(" ")
}

impl Host for BufferedHost {
    fn print(&self, args: &[Value]) -> Result<(), EngineError> {
        self.write_line(&render_print_line(args));
        Ok(())
    }

    fn read_line(&self) -> Result<Value, EngineError> {
        Ok(Value::str(self.input.borrow_mut().pop_front().unwrap_or_default()))
    }

    fn read_file(&self, path: &str) -> Result<Value, EngineError> {
        std::fs::read_to_string(path)
            .map(Value::str)
            .map_err(|e| EngineError::Io(format!("{path}: {e}")))
    }
}

/// Evaluates `Polyglot.eval` requests.
pub trait PolyglotHost: Send + Sync {
    fn eval(
        &self,
        language: &str,
        code: &str,
        origin: NodeId,
        host: &dyn Host,
    ) -> Result<Value, EngineError>;
}

enum Unwind {
    Return(Value),
    Error(EngineError),
}

impl From<EngineError> for Unwind {
    fn from(e: EngineError) -> Self {
        Unwind::Error(e)
    }
}

type Exec<T> = Result<T, Unwind>;

/// A tree-walking interpreter over one loaded program (or partition).
///
/// All methods take `&self`: a call may cross the boundary and re-enter
/// this interpreter before returning, so mutable state is kept in cells and
/// borrowed only for the duration of a single access.
pub struct Interpreter {
    file: Arc<str>,
    functions: IndexMap<String, Node>,
    proxies: HashMap<String, ProxyTarget>,
    globals: RefCell<HashMap<String, Value>>,
    agent: Option<Arc<InstrumentationAgent>>,
    polyglot: Arc<dyn PolyglotHost>,
    depth: Cell<usize>,
    max_depth: usize,
    entry_source: SourceSection,
    next_synthetic: Cell<u32>,
}

impl Interpreter {
    pub fn new(file: impl Into<Arc<str>>, polyglot: Arc<dyn PolyglotHost>) -> Self {
        let empty = SourceFile::new("<entry>", "");
        Interpreter {
            file: file.into(),
            functions: IndexMap::new(),
            proxies: HashMap::new(),
            globals: RefCell::new(HashMap::new()),
            agent: None,
            polyglot,
            depth: Cell::new(0),
            max_depth: DEFAULT_MAX_DEPTH,
            entry_source: SourceSection::new(empty, 0, 0),
            next_synthetic: Cell::new(u32::MAX - 1),
        }
    }

    pub fn with_agent(mut self, agent: Arc<InstrumentationAgent>) -> Self {
        self.agent = Some(agent);
        self
    }

    pub fn with_max_depth(mut self, depth: usize) -> Self {
        self.max_depth = depth;
        self
    }

    pub fn file(&self) -> &str {
        &self.file
    }

    /// Adds a `FunctionDef` to the guest symbol table.
    pub fn define_function(&mut self, def: Node) {
        let name = def
            .function_name()
            .expect("define_function requires a FunctionDef node")
            .to_string();
        self.functions.insert(name, def);
    }

    pub fn register_proxy(&mut self, name: impl Into<String>, proxy: ProxyTarget) {
        self.proxies.insert(name.into(), proxy);
    }

    pub fn function(&self, name: &str) -> Option<&Node> {
        self.functions.get(name)
    }

    pub fn function_names(&self) -> impl Iterator<Item = &str> {
        self.functions.keys().map(String::as_str)
    }

    pub fn proxy(&self, name: &str) -> Option<&ProxyTarget> {
        self.proxies.get(name)
    }

    pub fn global(&self, name: &str) -> Option<Value> {
        self.globals.borrow().get(name).cloned()
    }

    pub fn set_global(&self, name: &str, v: Value) {
        self.globals.borrow_mut().insert(name.to_string(), v);
    }

    pub fn globals_snapshot(&self) -> Vec<(String, Value)> {
        let mut g: Vec<_> = self
            .globals
            .borrow()
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        g.sort_by(|a, b| a.0.cmp(&b.0));
        g
    }

    pub fn clear_globals(&self) {
        self.globals.borrow_mut().clear();
    }

    /// Runs statements in the top-level scope.
    pub fn run_toplevel(&self, stmts: &[Node], host: &dyn Host) -> Result<(), EngineError> {
        let mut frame = Frame::toplevel();
        for stmt in stmts {
            match self.exec(stmt, &mut frame, host) {
                Ok(_) => {}
                Err(Unwind::Return(_)) => break,
                Err(Unwind::Error(e)) => return Err(e),
            }
        }
        Ok(())
    }

    /// Invokes `name` from the top-level scope through a synthetic call
    /// node, so instrumentation observes the entry call like any other.
    pub fn call_entry(
        &self,
        name: &str,
        args: Vec<Value>,
        host: &dyn Host,
    ) -> Result<Value, EngineError> {
        let arg_nodes = args
            .into_iter()
            .map(|v| literal_node(v, &self.entry_source))
            .collect::<Result<Vec<_>, _>>()?;
        let mut call = Node::new(
            NodeKind::Call(name.to_string()),
            arg_nodes,
            self.entry_source.clone(),
        );
        let id = self.next_synthetic.get();
        self.next_synthetic.set(id - call.count() as u32);
        call.number_preorder(id - call.count() as u32 + 1);
        let mut frame = Frame::toplevel();
        match self.exec(&call, &mut frame, host) {
            Ok(v) | Err(Unwind::Return(v)) => Ok(v),
            Err(Unwind::Error(e)) => Err(e),
        }
    }

    /// Calls a function by name with already-evaluated arguments, without a
    /// call node. Used by the boundary to run the real side of a proxy.
    pub fn call_function(
        &self,
        name: &str,
        args: Vec<Value>,
        host: &dyn Host,
    ) -> Result<Value, EngineError> {
        let target = self.resolve_global_target(name)?;
        self.invoke(target, name, args, host).map_err(|u| match u {
            Unwind::Error(e) => e,
            Unwind::Return(_) => unreachable!("invoke absorbs returns"),
        })
    }

    /// Resolution order: frame-local function reference, guest table,
    /// proxy table, builtin.
    pub fn resolve_call_target<'a>(
        &'a self,
        name: &str,
        frame: &Frame,
    ) -> Result<CallTarget<'a>, EngineError> {
        if let Some(Value::FunctionRef(target)) = frame.locals.get(name) {
            return self.resolve_global_target(target);
        }
        self.resolve_global_target(name)
    }

    fn resolve_global_target<'a>(&'a self, name: &str) -> Result<CallTarget<'a>, EngineError> {
        if let Some(def) = self.functions.get(name) {
            return Ok(CallTarget::Guest(def));
        }
        if let Some(p) = self.proxies.get(name) {
            return Ok(CallTarget::Proxy(p));
        }
        if let Some(b) = BUILTINS.iter().find(|b| **b == name) {
            return Ok(CallTarget::Builtin(b));
        }
        Err(EngineError::UnboundSymbol(name.to_string()))
    }

    /// Executes `node` in `frame`, honoring the wrapper protocol when an
    /// agent is attached.
    pub fn execute(&self, node: &Node, frame: &mut Frame, host: &dyn Host) -> Result<Value, EngineError> {
        match self.exec(node, frame, host) {
            Ok(v) | Err(Unwind::Return(v)) => Ok(v),
            Err(Unwind::Error(e)) => Err(e),
        }
    }

    fn exec(&self, node: &Node, frame: &mut Frame, host: &dyn Host) -> Exec<Value> {
        let probe = match &self.agent {
            Some(agent) if !node.tags.is_empty() => wrap_first_visit(node, agent),
            _ => None,
        };
        let Some(event) = probe else {
            return self.exec_node(node, frame, host, None);
        };
        event.on_enter(&self.event_context(node, frame, None));
        let result = self.exec_node(node, frame, host, Some(event))?;
        event.on_return_value(&self.event_context(node, frame, None), &result);
        Ok(result)
    }

    fn event_context<'a>(
        &'a self,
        node: &'a Node,
        frame: &'a Frame,
        target: Option<CallTargetInfo<'a>>,
    ) -> EventContext<'a> {
        EventContext {
            node,
            frame,
            file: &self.file,
            target,
        }
    }

    fn exec_node(
        &self,
        node: &Node,
        frame: &mut Frame,
        host: &dyn Host,
        event: Option<&dyn EventNode>,
    ) -> Exec<Value> {
        let ch = &node.children;
        match &node.kind {
            NodeKind::IntLiteral(i) => Ok(Value::Int(*i)),
            NodeKind::DoubleLiteral(d) => Ok(Value::Double(*d)),
            NodeKind::BoolLiteral(b) => Ok(Value::Bool(*b)),
            NodeKind::StringLiteral(s) => Ok(Value::str(s)),
            NodeKind::ArrayLiteral => {
                let mut items = Vec::with_capacity(ch.len());
                for c in ch {
                    items.push(self.exec(c, frame, host)?);
                }
                Ok(Value::array(items))
            }
            NodeKind::VarRead(var) => Ok(self.read_var(var, frame)?),
            NodeKind::PropertyRead(name) => Ok(self.read_var(&VarRef::global(name.clone()), frame)?),
            NodeKind::VarWrite(var) => {
                let v = self.exec(&ch[0], frame, host)?;
                self.write_var(var, v.clone(), frame);
                Ok(v)
            }
            NodeKind::PropertyWrite(name) => {
                let v = self.exec(&ch[0], frame, host)?;
                self.globals.borrow_mut().insert(name.clone(), v.clone());
                Ok(v)
            }
            NodeKind::ArrayRead => {
                let arr = self.exec(&ch[0], frame, host)?;
                let idx = self.exec(&ch[1], frame, host)?;
                Ok(secv::index(&arr, &idx)?)
            }
            NodeKind::ArrayWrite(var) => {
                let idx = self.exec(&ch[0], frame, host)?;
                let v = self.exec(&ch[1], frame, host)?;
                self.with_place(var, frame, |slot| secv::store(slot, &idx, v.clone()))?;
                Ok(v)
            }
            NodeKind::BinaryOp(op @ (BinOp::And | BinOp::Or)) => {
                let lhs = self.exec(&ch[0], frame, host)?;
                let decided = secv::condition(&lhs)?;
                if (*op == BinOp::And && !decided) || (*op == BinOp::Or && decided) {
                    return Ok(lhs);
                }
                let rhs = self.exec(&ch[1], frame, host)?;
                Ok(secv::secure_binary_op(*op, &lhs, &rhs)?)
            }
            NodeKind::BinaryOp(op) => {
                let lhs = self.exec(&ch[0], frame, host)?;
                let rhs = self.exec(&ch[1], frame, host)?;
                Ok(secv::secure_binary_op(*op, &lhs, &rhs)?)
            }
            NodeKind::UnaryOp(op) => {
                let v = self.exec(&ch[0], frame, host)?;
                Ok(secv::secure_unary_op(*op, &v)?)
            }
            NodeKind::Call(name) => {
                let mut args = Vec::with_capacity(ch.len());
                for c in ch {
                    args.push(self.exec(c, frame, host)?);
                }
                let target = self.resolve_call_target(name, frame)?;
                if let Some(event) = event {
                    let info = match target {
                        CallTarget::Guest(def) => CallTargetInfo::Guest {
                            name: def.function_name().unwrap_or(name),
                            params: def.params(),
                        },
                        CallTarget::Proxy(_) => CallTargetInfo::Proxy { name },
                        CallTarget::Builtin(b) => CallTargetInfo::Builtin { name: b },
                    };
                    event.on_input_values(&self.event_context(node, frame, Some(info)), &args);
                }
                let callee = match target {
                    CallTarget::Guest(def) => def.function_name().unwrap_or(name),
                    _ => name,
                };
                self.invoke(target, callee, args, host)
            }
            NodeKind::PolyglotEval => {
                let lang = self.exec(&ch[0], frame, host)?;
                let code = self.exec(&ch[1], frame, host)?;
                let (Value::Str(lang), Value::Str(code)) = (&lang, &code) else {
                    return Err(EngineError::type_mismatch(
                        "polyglot eval expects (language, code) strings",
                    )
                    .into());
                };
                if let Some(event) = event {
                    let info = CallTargetInfo::Polyglot { language: lang };
                    event.on_input_values(
                        &self.event_context(node, frame, Some(info)),
                        &[Value::Str(lang.clone()), Value::Str(code.clone())],
                    );
                }
                Ok(self.polyglot.eval(lang, code, node.id, host)?)
            }
            NodeKind::If => {
                let cond = self.exec(&ch[0], frame, host)?;
                if secv::condition(&cond)? {
                    self.exec(&ch[1], frame, host)?;
                } else if let Some(alt) = ch.get(2) {
                    self.exec(alt, frame, host)?;
                }
                Ok(Value::Unit)
            }
            NodeKind::While => {
                loop {
                    let cond = self.exec(&ch[0], frame, host)?;
                    if !secv::condition(&cond)? {
                        break;
                    }
                    self.exec(&ch[1], frame, host)?;
                }
                Ok(Value::Unit)
            }
            NodeKind::ForRange(var) => {
                let start = secv::loop_bound(&self.exec(&ch[0], frame, host)?)?;
                let end = secv::loop_bound(&self.exec(&ch[1], frame, host)?)?;
                let mut i = start;
                while i < end {
                    self.write_var(var, Value::Int(i), frame);
                    self.exec(&ch[2], frame, host)?;
                    i += 1;
                }
                Ok(Value::Unit)
            }
            NodeKind::Return => {
                let v = match ch.first() {
                    Some(e) => self.exec(e, frame, host)?,
                    None => Value::Unit,
                };
                Err(Unwind::Return(v))
            }
            NodeKind::Block => {
                for stmt in ch {
                    self.exec(stmt, frame, host)?;
                }
                Ok(Value::Unit)
            }
            NodeKind::FunctionDef { .. } => Ok(Value::Unit),
            NodeKind::Print => {
                let mut args = Vec::with_capacity(ch.len());
                for c in ch {
                    args.push(self.exec(c, frame, host)?);
                }
                host.print(&args)?;
                Ok(Value::Unit)
            }
        }
    }

    fn read_var(&self, var: &VarRef, frame: &Frame) -> Result<Value, EngineError> {
        match var.scope {
            Scope::Local => frame
                .locals
                .get(&var.name)
                .cloned()
                .ok_or_else(|| EngineError::UnboundSymbol(var.name.clone())),
            Scope::Global => {
                if let Some(v) = self.globals.borrow().get(&var.name) {
                    return Ok(v.clone());
                }
                if self.functions.contains_key(&var.name) || self.proxies.contains_key(&var.name) {
                    return Ok(Value::FunctionRef(Arc::from(var.name.as_str())));
                }
                Err(EngineError::UnboundSymbol(var.name.clone()))
            }
        }
    }

    fn write_var(&self, var: &VarRef, v: Value, frame: &mut Frame) {
        match var.scope {
            Scope::Local => {
                frame.locals.insert(&var.name, v);
            }
            Scope::Global => {
                self.globals.borrow_mut().insert(var.name.clone(), v);
            }
        }
    }

    fn with_place<R>(
        &self,
        var: &VarRef,
        frame: &mut Frame,
        f: impl FnOnce(&mut Value) -> Result<R, EngineError>,
    ) -> Result<R, EngineError> {
        let unbound = || EngineError::UnboundSymbol(var.name.clone());
        match var.scope {
            Scope::Local => f(frame.locals.get_mut(&var.name).ok_or_else(unbound)?),
            Scope::Global => {
                let mut globals = self.globals.borrow_mut();
                f(globals.get_mut(&var.name).ok_or_else(unbound)?)
            }
        }
    }

    fn invoke(
        &self,
        target: CallTarget<'_>,
        name: &str,
        args: Vec<Value>,
        host: &dyn Host,
    ) -> Exec<Value> {
        match target {
            CallTarget::Guest(def) => {
                let params = def.params();
                if params.len() != args.len() {
                    return Err(EngineError::ArityMismatch {
                        name: name.to_string(),
                        expected: params.len(),
                        got: args.len(),
                    }
                    .into());
                }
                let depth = self.depth.get();
                if depth >= self.max_depth {
                    return Err(EngineError::CallDepthExceeded(self.max_depth).into());
                }
                let mut frame = Frame {
                    function: Arc::from(name),
                    params: Arc::from(params),
                    locals: params.iter().cloned().zip(args.iter().cloned()).collect(),
                    args,
                };
                self.depth.set(depth + 1);
                let result = self.exec(&def.children[0], &mut frame, host);
                self.depth.set(depth);
                match result {
                    Ok(_) => Ok(Value::Unit),
                    Err(Unwind::Return(v)) => Ok(v),
                    Err(e) => Err(e),
                }
            }
            CallTarget::Proxy(proxy) => Ok(host.call_proxy(name, proxy, args)?),
            CallTarget::Builtin(b) => Ok(call_builtin(b, args, host)?),
        }
    }
}

fn expect_arity(name: &str, args: &[Value], n: usize) -> Result<(), EngineError> {
    if args.len() != n {
        return Err(EngineError::ArityMismatch {
            name: name.to_string(),
            expected: n,
            got: args.len(),
        });
    }
    Ok(())
}

fn call_builtin(name: &str, args: Vec<Value>, host: &dyn Host) -> Result<Value, EngineError> {
    match name {
        "len" => {
            expect_arity(name, &args, 1)?;
            secv::length(&args[0])
        }
        "newArray" => {
            expect_arity(name, &args, 2)?;
            secv::new_array(&args[0], &args[1])
        }
        "readLine" => {
            expect_arity(name, &args, 0)?;
            host.read_line()
        }
        "readFile" => {
            expect_arity(name, &args, 1)?;
            match &args[0] {
                Value::Str(p) => host.read_file(p),
                other => Err(EngineError::type_mismatch(format!(
                    "readFile expects a path string, got {}",
                    other.kind_name()
                ))),
            }
        }
        _ => Err(EngineError::UnboundSymbol(name.to_string())),
    }
}

fn literal_node(v: Value, src: &SourceSection) -> Result<Node, EngineError> {
    let kind = match v {
        Value::Int(i) => NodeKind::IntLiteral(i),
        Value::Double(d) => NodeKind::DoubleLiteral(d),
        Value::Bool(b) => NodeKind::BoolLiteral(b),
        Value::Str(s) => NodeKind::StringLiteral(s.to_string()),
        Value::Array(items) => {
            let children = items
                .iter()
                .cloned()
                .map(|v| literal_node(v, src))
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(Node::new(NodeKind::ArrayLiteral, children, src.clone()));
        }
        other => {
            return Err(EngineError::type_mismatch(format!(
                "entry arguments must be literals, got {}",
                other.kind_name()
            )))
        }
    };
    Ok(Node::new(kind, Vec::new(), src.clone()))
}
