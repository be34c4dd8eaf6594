// SPDX-License-Identifier: Apache-2.0

//! Simulated enclave runtime.
//!
//! The two halves of a partitioned program run in separate interpreters
//! that share nothing. Proxy calls become [`BoundaryMessage`]s whose
//! payload and reply are codec bytes, so the codec is the only path
//! between the sides. Every value leaving the trusted side passes the
//! [`escape_guard`] first.

mod envelope;

use std::cell::{Cell, RefCell};
use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ast::{Host, Interpreter, Node, ProxyTarget, Value};
use crate::error::{CodecError, Direction, EngineError, GuardError, LoadError};
use crate::frontends::{LanguageRegistry, Program};
use crate::partition::{codec, Partition, PartitionManifest, Side, Transition};
use crate::polytaint::Entry;
use crate::secv;

pub use envelope::{decode_reply, encode_error, encode_reply};

/// Cycles charged per boundary crossing, the upper end of the measured
/// cost of one SGX transition.
pub const DEFAULT_COST: u64 = 13_500;

pub const SHIM_PRINT: &str = "__shim_print";
pub const SHIM_READ_LINE: &str = "__shim_readLine";
pub const SHIM_READ_FILE: &str = "__shim_readFile";

const MAX_NESTING: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryMessage {
    pub direction: Direction,
    pub function_name: String,
    /// Serialized argument array.
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FunctionTransitions {
    pub ecalls: u64,
    pub ocalls: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TransitionStats {
    pub ecalls: u64,
    pub ocalls: u64,
    pub shim_ocalls: u64,
    pub charged_cycles: u64,
    pub cost_per_transition: u64,
    pub per_function: BTreeMap<String, FunctionTransitions>,
}

impl TransitionStats {
    pub fn new(cost_per_transition: u64) -> Self {
        TransitionStats {
            ecalls: 0,
            ocalls: 0,
            shim_ocalls: 0,
            charged_cycles: 0,
            cost_per_transition,
            per_function: BTreeMap::new(),
        }
    }

    pub fn transitions(&self) -> u64 {
        self.ecalls + self.ocalls
    }

    fn charge(&mut self, direction: Direction, function: &str, shim: bool) {
        let per = self.per_function.entry(function.to_string()).or_default();
        match direction {
            Direction::Ecall => {
                self.ecalls += 1;
                per.ecalls += 1;
            }
            Direction::Ocall => {
                self.ocalls += 1;
                per.ocalls += 1;
                if shim {
                    self.shim_ocalls += 1;
                }
            }
        }
        self.charged_cycles += self.cost_per_transition;
    }
}

/// Serializes a value that is about to leave the trusted side, refusing
/// secure values.
pub fn escape_guard(v: &Value, direction: Direction, function: &str) -> Result<Vec<u8>, EngineError> {
    if secv::is_secure(v) {
        return Err(GuardError {
            direction,
            function: function.to_string(),
            detail: format!("{} is secure", describe(v)),
        }
        .into());
    }
    codec::serialize(v).map_err(|e| codec_failure(e, direction, function))
}

fn describe(v: &Value) -> String {
    match v {
        Value::Secure(s) => format!("{} value", s.payload.kind_name()),
        Value::Array(items) => match items.iter().position(secv::is_secure) {
            Some(i) => format!("element {i} of {}", describe_array(items.len())),
            None => describe_array(items.len()),
        },
        other => format!("{} value", other.kind_name()),
    }
}

fn describe_array(len: usize) -> String {
    format!("an array of {len}")
}

fn codec_failure(e: CodecError, direction: Direction, function: &str) -> EngineError {
    match e {
        CodecError::SecureValuePresent => GuardError {
            direction,
            function: function.to_string(),
            detail: "payload carries a secure value".into(),
        }
        .into(),
        other => EngineError::Boundary(format!("{direction} `{function}`: {other}")),
    }
}

/// One side of the boundary: an interpreter over the side's real
/// functions, with proxies for the rest.
pub struct Environment {
    pub side: Side,
    pub manifest: PartitionManifest,
    pub program: Program,
    pub interpreter: Interpreter,
    /// Top-level statements, parsed.
    init: Vec<Node>,
}

impl Environment {
    fn load(manifest: PartitionManifest, registry: &LanguageRegistry) -> Result<Self, LoadError> {
        let program = manifest.parse(registry)?;
        for e in manifest.reals() {
            if program.function(&e.name).is_none() {
                return Err(LoadError::MissingSource(e.name.clone()));
            }
        }
        if program.functions.len() != manifest.tcb_size() {
            return Err(LoadError::Mismatch(format!(
                "{} side defines functions outside its manifest",
                manifest.side
            )));
        }
        let mut interpreter = program.interpreter(Arc::new(registry.clone()));
        for e in manifest.proxies() {
            interpreter.register_proxy(
                e.name.clone(),
                ProxyTarget {
                    direction: manifest.side.outgoing(),
                },
            );
        }
        let init = program.globals.clone();
        Ok(Environment {
            side: manifest.side,
            manifest,
            program,
            interpreter,
            init,
        })
    }
}

fn check_pair(p: &Partition) -> Result<(), LoadError> {
    for (m, expected) in [(&p.trusted, Side::Trusted), (&p.untrusted, Side::Untrusted)] {
        if m.side != expected {
            return Err(LoadError::WrongSide {
                expected: expected.to_string(),
                found: m.side.to_string(),
            });
        }
    }
    if p.trusted.program != p.untrusted.program {
        return Err(LoadError::Mismatch("program".into()));
    }
    if p.trusted.language_id != p.untrusted.language_id {
        return Err(LoadError::Mismatch("language".into()));
    }
    if p.trusted.entry != p.untrusted.entry {
        return Err(LoadError::Mismatch("entry".into()));
    }
    for m in [&p.trusted, &p.untrusted] {
        let other = p.side(m.side.other());
        let direction = m.side.outgoing();
        for e in m.entries.iter() {
            if e.is_real() {
                if e.source_text.is_none() {
                    return Err(LoadError::MissingSource(e.name.clone()));
                }
                continue;
            }
            let stub_error = || LoadError::StubSignature {
                name: e.name.clone(),
                direction,
            };
            if e.transition != Transition::from(direction) {
                return Err(stub_error());
            }
            let mut stubs = m.stubs.iter().filter(|s| s.name == e.name);
            let (Some(stub), None) = (stubs.next(), stubs.next()) else {
                return Err(stub_error());
            };
            let real = other.entry(&e.name).filter(|r| r.is_real()).ok_or_else(stub_error)?;
            let same = stub.direction == direction
                && stub.arg_types == real.arg_types
                && stub.return_type == real.return_type
                && stub.arg_types == e.arg_types
                && stub.return_type == e.return_type;
            if !same {
                return Err(stub_error());
            }
        }
        if let Some(s) = m.stubs.iter().find(|s| m.entry(&s.name).is_none_or(|e| e.is_real())) {
            return Err(LoadError::StubSignature {
                name: s.name.clone(),
                direction: s.direction,
            });
        }
    }
    Ok(())
}

/// Both environments, the I/O of the untrusted world and the counters.
pub struct Runtime<'io> {
    trusted: Environment,
    untrusted: Environment,
    io: &'io dyn Host,
    stats: RefCell<TransitionStats>,
    nesting: Cell<usize>,
    started: Cell<bool>,
}

/// The [`Host`] one side's interpreter sees.
struct SideHost<'r, 'io> {
    rt: &'r Runtime<'io>,
    side: Side,
}

impl Host for SideHost<'_, '_> {
    fn print(&self, args: &[Value]) -> Result<(), EngineError> {
        match self.side {
            Side::Untrusted => self.rt.io.print(args),
            Side::Trusted => self
                .rt
                .transition(self.side, SHIM_PRINT, args.to_vec(), true)
                .map(drop),
        }
    }

    fn read_line(&self) -> Result<Value, EngineError> {
        match self.side {
            Side::Untrusted => self.rt.io.read_line(),
            Side::Trusted => self.rt.transition(self.side, SHIM_READ_LINE, Vec::new(), true),
        }
    }

    fn read_file(&self, path: &str) -> Result<Value, EngineError> {
        match self.side {
            Side::Untrusted => self.rt.io.read_file(path),
            Side::Trusted => {
                self.rt
                    .transition(self.side, SHIM_READ_FILE, vec![Value::str(path)], true)
            }
        }
    }

    fn call_proxy(&self, name: &str, proxy: &ProxyTarget, args: Vec<Value>) -> Result<Value, EngineError> {
        if proxy.direction != self.side.outgoing() {
            return Err(EngineError::Boundary(format!(
                "{} proxy `{name}` registered on the {} side",
                proxy.direction, self.side
            )));
        }
        self.rt.transition(self.side, name, args, false)
    }

    fn may_create_secure(&self) -> bool {
        self.side == Side::Trusted
    }
}

impl<'io> Runtime<'io> {
    /// Loads both manifests and runs the trusted side's top-level
    /// statements.
    pub fn load(
        partition: Partition,
        registry: &LanguageRegistry,
        io: &'io dyn Host,
        cost_per_transition: u64,
    ) -> Result<Self, LoadError> {
        check_pair(&partition)?;
        let rt = Runtime {
            trusted: Environment::load(partition.trusted, registry)?,
            untrusted: Environment::load(partition.untrusted, registry)?,
            io,
            stats: RefCell::new(TransitionStats::new(cost_per_transition)),
            nesting: Cell::new(0),
            started: Cell::new(false),
        };
        let host = rt.host(Side::Trusted);
        rt.trusted
            .interpreter
            .run_toplevel(&rt.trusted.init, &host)
            .map_err(LoadError::GlobalInit)?;
        Ok(rt)
    }

    fn host(&self, side: Side) -> SideHost<'_, 'io> {
        SideHost { rt: self, side }
    }

    pub fn environment(&self, side: Side) -> &Environment {
        match side {
            Side::Trusted => &self.trusted,
            Side::Untrusted => &self.untrusted,
        }
    }

    pub fn stats(&self) -> TransitionStats {
        self.stats.borrow().clone()
    }

    pub fn entry(&self) -> &Entry {
        &self.untrusted.manifest.entry
    }

    /// Runs the untrusted side's top-level statements, once.
    pub fn start(&self) -> Result<(), EngineError> {
        if self.started.replace(true) {
            return Ok(());
        }
        let u = &self.untrusted;
        u.interpreter.run_toplevel(&u.init, &self.host(Side::Untrusted))
    }

    /// Calls `name` on the untrusted side, where program execution begins.
    pub fn invoke_entry(&self, name: &str, args: Vec<Value>) -> Result<Value, EngineError> {
        self.start()?;
        self.untrusted
            .interpreter
            .call_function(name, args, &self.host(Side::Untrusted))
    }

    /// Runs the program from its recorded entry.
    pub fn run(&self) -> Result<(), EngineError> {
        self.start()?;
        if let Some(f) = self.entry().function() {
            self.invoke_entry(f, Vec::new())?;
        }
        Ok(())
    }

    /// Sends a call from `from` to the other side.
    fn transition(&self, from: Side, name: &str, args: Vec<Value>, shim: bool) -> Result<Value, EngineError> {
        let direction = from.outgoing();
        let args = Value::array(args);
        let payload = match from {
            Side::Trusted => escape_guard(&args, direction, name)?,
            Side::Untrusted => codec::serialize(&args).map_err(|e| codec_failure(e, direction, name))?,
        };
        let msg = BoundaryMessage {
            direction,
            function_name: name.to_string(),
            payload,
        };
        let reply = if shim {
            self.stats.borrow_mut().charge(direction, name, true);
            self.serve_shim(&msg)
        } else {
            self.cross_boundary(&msg)
        };
        decode_reply(&reply)
    }

    /// Delivers `msg` to its destination side and returns the reply bytes.
    /// Failures on the far side come back as error replies.
    pub fn cross_boundary(&self, msg: &BoundaryMessage) -> Vec<u8> {
        self.stats.borrow_mut().charge(msg.direction, &msg.function_name, false);
        let dest = match msg.direction {
            Direction::Ecall => Side::Trusted,
            Direction::Ocall => Side::Untrusted,
        };
        let depth = self.nesting.get();
        if depth >= MAX_NESTING {
            return encode_error(&EngineError::CallDepthExceeded(MAX_NESTING));
        }
        self.nesting.set(depth + 1);
        let result = self.execute_remote(dest, msg);
        self.nesting.set(depth);
        match result.and_then(|v| self.encode_return(dest, &v, msg)) {
            Ok(bytes) => encode_reply(bytes),
            Err(e) => encode_error(&e),
        }
    }

    fn execute_remote(&self, dest: Side, msg: &BoundaryMessage) -> Result<Value, EngineError> {
        let env = self.environment(dest);
        let args = decode_args(&msg.payload)?;
        let registered = env
            .manifest
            .entry(&msg.function_name)
            .is_some_and(|e| e.is_real())
            && self
                .environment(dest.other())
                .manifest
                .stubs
                .iter()
                .any(|s| s.name == msg.function_name && s.direction == msg.direction);
        if !registered {
            return Err(EngineError::UnboundSymbol(msg.function_name.clone()));
        }
        env.interpreter.call_function(&msg.function_name, args, &self.host(dest))
    }

    fn encode_return(&self, dest: Side, v: &Value, msg: &BoundaryMessage) -> Result<Vec<u8>, EngineError> {
        match dest {
            Side::Trusted => escape_guard(v, msg.direction, &msg.function_name),
            Side::Untrusted => {
                codec::serialize(v).map_err(|e| codec_failure(e, msg.direction, &msg.function_name))
            }
        }
    }

    /// Performs a relayed system call on the untrusted side.
    fn serve_shim(&self, msg: &BoundaryMessage) -> Vec<u8> {
        let result = decode_args(&msg.payload).and_then(|args| match msg.function_name.as_str() {
            SHIM_PRINT => self.io.print(&args).map(|_| Value::Unit),
            SHIM_READ_LINE => self.io.read_line(),
            SHIM_READ_FILE => match args.as_slice() {
                [Value::Str(p)] => self.io.read_file(p),
                _ => Err(EngineError::type_mismatch("readFile expects a path string")),
            },
            other => Err(EngineError::UnboundSymbol(other.to_string())),
        });
        match result.and_then(|v| codec::serialize(&v).map_err(|e| codec_failure(e, msg.direction, &msg.function_name))) {
            Ok(bytes) => encode_reply(bytes),
            Err(e) => encode_error(&e),
        }
    }
}

fn decode_args(payload: &[u8]) -> Result<Vec<Value>, EngineError> {
    match codec::deserialize(payload) {
        Ok(Value::Array(items)) => Ok(Arc::try_unwrap(items).unwrap_or_else(|a| (*a).clone())),
        Ok(other) => Err(EngineError::Boundary(format!(
            "argument payload must be an array, got {}",
            other.kind_name()
        ))),
        Err(e) => Err(EngineError::Boundary(e.to_string())),
    }
}
