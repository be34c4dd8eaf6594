// SPDX-License-Identifier: Apache-2.0

//! The shared AST every frontend lowers to, plus the tree-walking engine and
//! the instrumentation hook where wrappers are spliced in on first visit.

mod instrument;
mod ops;
mod interp;
mod node;
mod source;
mod value;

pub use instrument::{
    wrap_first_visit, CallTargetInfo, EventContext, EventNode, EventNodeFactory,
    InstrumentationAgent,
};
pub use interp::{
    render_print_line, BufferedHost, CallTarget, Frame, Host, Interpreter, Locals, PolyglotHost,
    ProxyTarget, BUILTINS, TOPLEVEL,
};
pub use node::{BinOp, Node, NodeId, NodeKind, Scope, SyntaxTag, TagSet, UnOp, VarRef};
pub use ops::{binary, unary};
pub use source::{SourceFile, SourceSection};
pub use value::{TypeName, Value};
