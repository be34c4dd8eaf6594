// SPDX-License-Identifier: Apache-2.0

//! Instrumentation agents and the wrapper protocol.
//!
//! An agent maps syntax tags to event-node factories. The first time the
//! interpreter visits a node carrying a registered tag, the node's wrapper
//! slot is filled with an event node; every later execution of that node
//! calls `on_enter`, executes the node, then calls `on_return_value`.
//! Nodes with arguments additionally report their evaluated inputs through
//! `on_input_values` before dispatch.

use super::interp::Frame;
use super::node::{Node, SyntaxTag};
use super::value::Value;

/// What a call node resolved to, as seen by an event node.
#[derive(Debug, Clone)]
pub enum CallTargetInfo<'a> {
    Guest { name: &'a str, params: &'a [String] },
    Proxy { name: &'a str },
    Builtin { name: &'a str },
    Polyglot { language: &'a str },
}

impl CallTargetInfo<'_> {
    pub fn guest_name(&self) -> Option<&str> {
        match self {
            CallTargetInfo::Guest { name, .. } => Some(name),
            _ => None,
        }
    }
}

pub struct EventContext<'a> {
    pub node: &'a Node,
    pub frame: &'a Frame,
    /// Stable stem of the source file the node came from.
    pub file: &'a str,
    pub target: Option<CallTargetInfo<'a>>,
}

pub trait EventNode: Send + Sync {
    fn on_enter(&self, _cx: &EventContext<'_>) {}
    fn on_input_values(&self, _cx: &EventContext<'_>, _inputs: &[Value]) {}
    fn on_return_value(&self, _cx: &EventContext<'_>, _result: &Value) {}
}

pub trait EventNodeFactory: Send + Sync {
    fn create(&self, node: &Node) -> Box<dyn EventNode>;
}

impl<F> EventNodeFactory for F
where
    F: Fn(&Node) -> Box<dyn EventNode> + Send + Sync,
{
    fn create(&self, node: &Node) -> Box<dyn EventNode> {
        self(node)
    }
}

/// A named set of tag -> factory registrations.
#[derive(Default)]
pub struct InstrumentationAgent {
    name: String,
    factories: Vec<(SyntaxTag, Box<dyn EventNodeFactory>)>,
}

impl InstrumentationAgent {
    pub fn new(name: impl Into<String>) -> Self {
        InstrumentationAgent {
            name: name.into(),
            factories: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Registers a factory for `tag`. The first matching registration wins
    /// when a node carries several tags.
    pub fn register(&mut self, tag: SyntaxTag, factory: impl EventNodeFactory + 'static) {
        self.factories.push((tag, Box::new(factory)));
    }

    pub fn with(mut self, tag: SyntaxTag, factory: impl EventNodeFactory + 'static) -> Self {
        self.register(tag, factory);
        self
    }

    pub fn registered_tags(&self) -> impl Iterator<Item = SyntaxTag> + '_ {
        self.factories.iter().map(|(t, _)| *t)
    }

    fn event_node_for(&self, node: &Node) -> Option<Box<dyn EventNode>> {
        self.factories
            .iter()
            .find(|(tag, _)| node.tags.contains_tag(*tag))
            .map(|(_, f)| f.create(node))
    }
}

/// Installs the agent's wrapper on `node` if this is its first visit.
/// Idempotent: later calls return the wrapper installed the first time.
pub fn wrap_first_visit<'n>(
    node: &'n Node,
    agent: &InstrumentationAgent,
) -> Option<&'n dyn EventNode> {
    node.probe
        .get_or_init(|| agent.event_node_for(node))
        .as_deref()
}
