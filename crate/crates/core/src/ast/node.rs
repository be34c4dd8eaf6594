// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::sync::OnceLock;

use bitflags::bitflags;
use serde::{Deserialize, Serialize};

use super::instrument::EventNode;
use super::source::SourceSection;

/// Pre-order index of a node within one loaded program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scope {
    Local,
    Global,
}

/// A named variable together with the scope the frontend resolved it to.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VarRef {
    pub name: String,
    pub scope: Scope,
}

impl VarRef {
    pub fn local(name: impl Into<String>) -> Self {
        VarRef {
            name: name.into(),
            scope: Scope::Local,
        }
    }

    pub fn global(name: impl Into<String>) -> Self {
        VarRef {
            name: name.into(),
            scope: Scope::Global,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

/// The closed set of node kinds. Child layout per kind:
///
/// | kind | children |
/// |------|----------|
/// | `ArrayLiteral` | elements |
/// | `VarWrite`, `PropertyWrite` | `[value]` |
/// | `ArrayRead` | `[array, index]` |
/// | `ArrayWrite` | `[index, value]` (target array is the `VarRef`) |
/// | `BinaryOp` | `[lhs, rhs]` |
/// | `UnaryOp` | `[operand]` |
/// | `Call`, `Print` | arguments |
/// | `PolyglotEval` | `[language, code]` |
/// | `If` | `[cond, then]` or `[cond, then, else]` |
/// | `While` | `[cond, body]` |
/// | `ForRange` | `[start, end, body]` |
/// | `Return` | `[]` or `[value]` |
/// | `Block` | statements |
/// | `FunctionDef` | `[body]` |
#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    IntLiteral(i64),
    DoubleLiteral(f64),
    BoolLiteral(bool),
    StringLiteral(String),
    ArrayLiteral,
    VarRead(VarRef),
    VarWrite(VarRef),
    PropertyRead(String),
    PropertyWrite(String),
    ArrayRead,
    ArrayWrite(VarRef),
    BinaryOp(BinOp),
    UnaryOp(UnOp),
    Call(String),
    PolyglotEval,
    If,
    While,
    ForRange(VarRef),
    Return,
    Block,
    FunctionDef { name: String, params: Vec<String> },
    Print,
}

bitflags! {
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
    pub struct TagSet: u8 {
        const WRITE_VARIABLE = 1 << 0;
        const READ_VARIABLE = 1 << 1;
        const CALL = 1 << 2;
        const PROPERTY_READ = 1 << 3;
        const PROPERTY_WRITE = 1 << 4;
        const ARRAY_ELEMENT_READ = 1 << 5;
        const ARRAY_ELEMENT_WRITE = 1 << 6;
        const ROOT = 1 << 7;
    }
}

/// Syntactic tags instrumentation agents attach event nodes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SyntaxTag {
    WriteVariable,
    ReadVariable,
    Call,
    PropertyRead,
    PropertyWrite,
    ArrayElementRead,
    ArrayElementWrite,
    Root,
}

impl SyntaxTag {
    pub const ALL: [SyntaxTag; 8] = [
        SyntaxTag::WriteVariable,
        SyntaxTag::ReadVariable,
        SyntaxTag::Call,
        SyntaxTag::PropertyRead,
        SyntaxTag::PropertyWrite,
        SyntaxTag::ArrayElementRead,
        SyntaxTag::ArrayElementWrite,
        SyntaxTag::Root,
    ];

    pub fn flag(self) -> TagSet {
        match self {
            SyntaxTag::WriteVariable => TagSet::WRITE_VARIABLE,
            SyntaxTag::ReadVariable => TagSet::READ_VARIABLE,
            SyntaxTag::Call => TagSet::CALL,
            SyntaxTag::PropertyRead => TagSet::PROPERTY_READ,
            SyntaxTag::PropertyWrite => TagSet::PROPERTY_WRITE,
            SyntaxTag::ArrayElementRead => TagSet::ARRAY_ELEMENT_READ,
            SyntaxTag::ArrayElementWrite => TagSet::ARRAY_ELEMENT_WRITE,
            SyntaxTag::Root => TagSet::ROOT,
        }
    }
}

impl TagSet {
    pub fn contains_tag(self, tag: SyntaxTag) -> bool {
        self.contains(tag.flag())
    }

    pub fn iter_tags(self) -> impl Iterator<Item = SyntaxTag> {
        SyntaxTag::ALL
            .into_iter()
            .filter(move |t| self.contains_tag(*t))
    }
}

impl NodeKind {
    /// The tags a node of this kind carries.
    pub fn tags(&self) -> TagSet {
        match self {
            NodeKind::VarWrite(_) => TagSet::WRITE_VARIABLE,
            NodeKind::VarRead(_) => TagSet::READ_VARIABLE,
            NodeKind::Call(_) | NodeKind::PolyglotEval => TagSet::CALL,
            NodeKind::PropertyRead(_) => TagSet::PROPERTY_READ,
            NodeKind::PropertyWrite(_) => TagSet::PROPERTY_WRITE,
            NodeKind::ArrayRead => TagSet::ARRAY_ELEMENT_READ,
            NodeKind::ArrayWrite(_) => TagSet::ARRAY_ELEMENT_WRITE,
            NodeKind::FunctionDef { .. } => TagSet::ROOT,
            _ => TagSet::empty(),
        }
    }

    pub fn is_statement_only(&self) -> bool {
        matches!(
            self,
            NodeKind::If
                | NodeKind::While
                | NodeKind::ForRange(_)
                | NodeKind::Return
                | NodeKind::Block
                | NodeKind::FunctionDef { .. }
                | NodeKind::Print
        )
    }
}

/// An AST node.
///
/// `probe` is the wrapper slot: empty until the node is first executed under
/// an instrumentation agent, then holds the event node (or `None` when no
/// factory matched). Cloning a node yields an unwrapped copy.
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub children: Vec<Node>,
    pub tags: TagSet,
    pub source: SourceSection,
    pub(crate) probe: OnceLock<Option<Box<dyn EventNode>>>,
}

impl Node {
    pub fn new(kind: NodeKind, children: Vec<Node>, source: SourceSection) -> Node {
        let tags = kind.tags();
        Node {
            id: NodeId(0),
            kind,
            children,
            tags,
            source,
            probe: OnceLock::new(),
        }
    }

    pub fn is_wrapped(&self) -> bool {
        matches!(self.probe.get(), Some(Some(_)))
    }

    /// Pre-order numbering starting at `next`; returns the next free id.
    pub fn number_preorder(&mut self, next: u32) -> u32 {
        self.id = NodeId(next);
        let mut n = next + 1;
        for child in &mut self.children {
            n = child.number_preorder(n);
        }
        n
    }

    /// Depth-first, pre-order walk.
    pub fn walk<'a>(&'a self, visit: &mut dyn FnMut(&'a Node)) {
        visit(self);
        for c in &self.children {
            c.walk(visit);
        }
    }

    pub fn function_name(&self) -> Option<&str> {
        match &self.kind {
            NodeKind::FunctionDef { name, .. } => Some(name),
            _ => None,
        }
    }

    pub fn params(&self) -> &[String] {
        match &self.kind {
            NodeKind::FunctionDef { params, .. } => params,
            _ => &[],
        }
    }

    /// Structural equality ignoring ids and source sections. Global variable
    /// access is compared by name whether the frontend lowered it to a
    /// variable or to a property of the global object.
    pub fn isomorphic(&self, other: &Node) -> bool {
        fn canon(kind: &NodeKind) -> NodeKind {
            match kind {
                NodeKind::PropertyRead(n) => NodeKind::VarRead(VarRef::global(n.clone())),
                NodeKind::PropertyWrite(n) => NodeKind::VarWrite(VarRef::global(n.clone())),
                other => other.clone(),
            }
        }
        canon(&self.kind) == canon(&other.kind)
            && self.children.len() == other.children.len()
            && self
                .children
                .iter()
                .zip(&other.children)
                .all(|(a, b)| a.isomorphic(b))
    }

    pub fn count(&self) -> usize {
        1 + self.children.iter().map(Node::count).sum::<usize>()
    }
}

impl Clone for Node {
    fn clone(&self) -> Self {
        Node {
            id: self.id,
            kind: self.kind.clone(),
            children: self.children.clone(),
            tags: self.tags,
            source: self.source.clone(),
            probe: OnceLock::new(),
        }
    }
}

impl fmt::Debug for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("Node");
        d.field("id", &self.id).field("kind", &self.kind);
        if !self.children.is_empty() {
            d.field("children", &self.children);
        }
        d.finish()
    }
}
