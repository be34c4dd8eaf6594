// SPDX-License-Identifier: Apache-2.0

//! Event nodes that maintain the taint map and the seen list.

use std::sync::{Arc, Mutex, MutexGuard};

use indexmap::IndexMap;

use super::symbols::{assigned_value, function_symbol, identifier, is_global, local_symbol, SymbolScope};
use super::taint_map::{Label, Provenance, TaintMap};
use super::traverse::is_secv_eval;
use crate::ast::{
    CallTargetInfo, EventContext, EventNode, InstrumentationAgent, Node, SyntaxTag, TypeName, Value,
};
use crate::secv;

/// Observed signature of one guest function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub arg_types: Vec<TypeName>,
    pub return_type: TypeName,
    pub calls: u64,
}

#[derive(Debug, Default)]
pub struct TaintState {
    pub map: TaintMap,
    /// Functions in first-call order.
    pub seen: IndexMap<String, Observation>,
}

impl TaintState {
    /// Reserves the function's place in first-call order.
    fn observe_call(&mut self, name: &str, args: &[TypeName]) {
        if !self.seen.contains_key(name) {
            self.seen.insert(
                name.to_string(),
                Observation {
                    arg_types: args.to_vec(),
                    return_type: TypeName::Unit,
                    calls: 0,
                },
            );
        }
    }

    fn observe(&mut self, name: &str, args: Vec<TypeName>, ret: TypeName) {
        match self.seen.get_mut(name) {
            Some(o) if o.calls == 0 => {
                o.arg_types = args;
                o.return_type = ret;
                o.calls = 1;
            }
            Some(o) => {
                for (slot, t) in o.arg_types.iter_mut().zip(args) {
                    *slot = slot.join(t);
                }
                o.return_type = o.return_type.join(ret);
                o.calls += 1;
            }
            None => {
                self.seen.insert(
                    name.to_string(),
                    Observation {
                        arg_types: args,
                        return_type: ret,
                        calls: 1,
                    },
                );
            }
        }
    }
}

pub type SharedState = Arc<Mutex<TaintState>>;

fn lock(state: &SharedState) -> MutexGuard<'_, TaintState> {
    state.lock().unwrap_or_else(|p| p.into_inner())
}

fn scope<'a>(cx: &'a EventContext<'a>) -> SymbolScope<'a> {
    SymbolScope::new(cx.file, &cx.frame.function)
}

/// Per-node memo of symbol ids. A node always executes in the same
/// function, but the key is checked anyway so a stale entry can never be
/// used.
struct Memo<T>(Mutex<Option<(Arc<str>, Arc<T>)>>);

impl<T> Memo<T> {
    fn new() -> Self {
        Memo(Mutex::new(None))
    }

    fn get(&self, function: &Arc<str>, compute: impl FnOnce() -> T) -> Arc<T> {
        let mut slot = self.0.lock().unwrap_or_else(|p| p.into_inner());
        match &*slot {
            Some((f, v)) if f == function => v.clone(),
            _ => {
                let v = Arc::new(compute());
                *slot = Some((function.clone(), v.clone()));
                v
            }
        }
    }
}

/// Everything in a subtree that can make it tainted: polyglot `secV`
/// evals and the symbols it mentions.
#[derive(Debug, Default)]
struct Footprint {
    secv: bool,
    symbols: Vec<String>,
}

impl Footprint {
    fn of(node: &Node, sc: SymbolScope<'_>) -> Self {
        let mut fp = Footprint::default();
        node.walk(&mut |n| {
            fp.secv |= is_secv_eval(n);
            if let Some(id) = identifier(n, sc) {
                fp.symbols.push(id);
            }
        });
        fp
    }

    /// Same answer as [`super::taint_provenance`] on the subtree.
    fn provenance(&self, map: &TaintMap) -> Option<Provenance> {
        if self.secv {
            return Some(Provenance::Source);
        }
        let mut found = None;
        for id in &self.symbols {
            if map.is_tainted(id) {
                match map.provenance(id).unwrap_or(Provenance::Source) {
                    Provenance::Source => return Some(Provenance::Source),
                    p => found = Some(p),
                }
            }
        }
        found
    }

    fn tainted(&self, map: &TaintMap) -> bool {
        self.secv || self.symbols.iter().any(|id| map.is_tainted(id))
    }
}

struct WriteFacts {
    target: Option<String>,
    rhs: Footprint,
}

struct WriteEvent {
    state: SharedState,
    memo: Memo<WriteFacts>,
}

impl EventNode for WriteEvent {
    fn on_return_value(&self, cx: &EventContext<'_>, result: &Value) {
        let sc = scope(cx);
        let facts = self.memo.get(&cx.frame.function, || WriteFacts {
            target: identifier(cx.node, sc),
            rhs: assigned_value(cx.node).map_or_else(Footprint::default, |r| Footprint::of(r, sc)),
        });
        let Some(target) = &facts.target else {
            return;
        };
        let mut st = lock(&self.state);
        if st.map.get(target).is_some() {
            return;
        }
        let provenance = match facts.rhs.provenance(&st.map) {
            Some(p) => p,
            None if secv::is_secure(result) => Provenance::Source,
            None => return,
        };
        let provenance = if is_global(target) {
            Provenance::Source
        } else {
            provenance
        };
        st.map.taint_symbol(target, provenance);
        let label = match provenance {
            Provenance::Source => Label::Trusted,
            Provenance::Parameter => Label::Neutral,
        };
        st.map.raise(&sc.function_symbol(), label);
    }
}

struct ReadFacts {
    id: Option<String>,
    function: String,
    param: bool,
}

struct ReadEvent {
    state: SharedState,
    memo: Memo<ReadFacts>,
}

impl EventNode for ReadEvent {
    fn on_return_value(&self, cx: &EventContext<'_>, result: &Value) {
        let sc = scope(cx);
        let facts = self.memo.get(&cx.frame.function, || ReadFacts {
            id: identifier(cx.node, sc),
            function: sc.function_symbol(),
            param: reads_parameter(cx),
        });
        let Some(id) = &facts.id else {
            return;
        };
        let mut st = lock(&self.state);
        let label = match st.map.entry(id) {
            Some(e) if e.label == Label::Trusted => match e.provenance {
                Some(Provenance::Parameter) => Label::Neutral,
                _ => Label::Trusted,
            },
            None if facts.param && secv::is_secure(result) => Label::Neutral,
            _ => return,
        };
        st.map.raise(&facts.function, label);
    }
}

fn reads_parameter(cx: &EventContext<'_>) -> bool {
    let var = match &cx.node.kind {
        crate::NodeKind::VarRead(v) => Some(v),
        crate::NodeKind::ArrayRead => match cx.node.children.first().map(|c| &c.kind) {
            Some(crate::NodeKind::VarRead(v)) => Some(v),
            _ => None,
        },
        _ => None,
    };
    var.is_some_and(|v| v.scope == crate::ast::Scope::Local && cx.frame.is_param(&v.name))
}

/// Fires on calls and polyglot evals. Guest calls are recorded in the
/// seen list when they return; a pending entry per activation keeps
/// recursive calls apart.
struct CallEvent {
    state: SharedState,
    args: Memo<Vec<Footprint>>,
    pending: Mutex<Vec<Option<PendingCall>>>,
}

/// Callee name and argument types of an activation still running.
type PendingCall = (String, Vec<TypeName>);

impl EventNode for CallEvent {
    fn on_input_values(&self, cx: &EventContext<'_>, inputs: &[Value]) {
        let entry = match &cx.target {
            Some(CallTargetInfo::Guest { name, params }) => {
                self.taint_callee(cx, name, params, inputs);
                let types: Vec<TypeName> = inputs.iter().map(TypeName::of).collect();
                lock(&self.state).observe_call(name, &types);
                Some((name.to_string(), types))
            }
            _ => None,
        };
        self.pending.lock().unwrap_or_else(|p| p.into_inner()).push(entry);
    }

    fn on_return_value(&self, _cx: &EventContext<'_>, result: &Value) {
        let entry = self.pending.lock().unwrap_or_else(|p| p.into_inner()).pop();
        if let Some(Some((name, args))) = entry {
            lock(&self.state).observe(&name, args, TypeName::of(result));
        }
    }
}

impl CallEvent {
    fn taint_callee(&self, cx: &EventContext<'_>, callee: &str, params: &[String], inputs: &[Value]) {
        let sc = scope(cx);
        let args = self.args.get(&cx.frame.function, || {
            cx.node.children.iter().map(|a| Footprint::of(a, sc)).collect()
        });
        let mut st = lock(&self.state);
        let mut any = false;
        for (i, arg) in args.iter().enumerate() {
            let secure = inputs.get(i).is_some_and(secv::is_secure);
            if secure || arg.tainted(&st.map) {
                any = true;
                if let Some(p) = params.get(i) {
                    st.map
                        .taint_symbol(&local_symbol(cx.file, callee, p), Provenance::Parameter);
                }
            }
        }
        if any {
            st.map.raise(&function_symbol(cx.file, callee), Label::Neutral);
        }
    }
}

/// An agent wiring the taint event nodes to `state`.
pub fn taint_agent(state: SharedState) -> InstrumentationAgent {
    let mut agent = InstrumentationAgent::new("polytaint");
    for tag in [
        SyntaxTag::WriteVariable,
        SyntaxTag::PropertyWrite,
        SyntaxTag::ArrayElementWrite,
    ] {
        let st = state.clone();
        agent.register(tag, move |_: &Node| -> Box<dyn EventNode> {
            Box::new(WriteEvent {
                state: st.clone(),
                memo: Memo::new(),
            })
        });
    }
    for tag in [
        SyntaxTag::ReadVariable,
        SyntaxTag::PropertyRead,
        SyntaxTag::ArrayElementRead,
    ] {
        let st = state.clone();
        agent.register(tag, move |_: &Node| -> Box<dyn EventNode> {
            Box::new(ReadEvent {
                state: st.clone(),
                memo: Memo::new(),
            })
        });
    }
    agent.register(SyntaxTag::Call, move |_: &Node| -> Box<dyn EventNode> {
        Box::new(CallEvent {
            state: state.clone(),
            args: Memo::new(),
            pending: Mutex::new(Vec::new()),
        })
    });
    agent
}
