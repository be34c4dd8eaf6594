// SPDX-License-Identifier: Apache-2.0

//! Stable symbol identifiers.

use crate::ast::{Node, NodeKind, Scope, VarRef};

/// The file and function a node executes in, which together with a
/// variable name determine its symbol.
#[derive(Debug, Clone, Copy)]
pub struct SymbolScope<'a> {
    pub file: &'a str,
    pub function: &'a str,
}

impl<'a> SymbolScope<'a> {
    pub fn new(file: &'a str, function: &'a str) -> Self {
        SymbolScope { file, function }
    }

    pub fn var(&self, var: &VarRef) -> String {
        match var.scope {
            Scope::Local => local_symbol(self.file, self.function, &var.name),
            Scope::Global => global_symbol(self.file, &var.name),
        }
    }

    pub fn function_symbol(&self) -> String {
        function_symbol(self.file, self.function)
    }
}

pub fn local_symbol(file: &str, function: &str, name: &str) -> String {
    format!("{file}::{function}::{name}")
}

pub fn global_symbol(file: &str, name: &str) -> String {
    format!("{file}::global::{name}")
}

pub fn function_symbol(file: &str, function: &str) -> String {
    format!("{file}::fn::{function}")
}

/// Function name of a `<file>::fn::<name>` symbol.
pub fn function_name(symbol: &str) -> Option<&str> {
    symbol.split_once("::fn::").map(|(_, name)| name)
}

pub fn is_global(symbol: &str) -> bool {
    symbol.contains("::global::")
}

/// The symbol a node reads or writes, if it has one. Element accesses
/// resolve to the array variable; calls and literals have none.
pub fn identifier(node: &Node, scope: SymbolScope<'_>) -> Option<String> {
    match &node.kind {
        NodeKind::VarRead(v) | NodeKind::VarWrite(v) | NodeKind::ArrayWrite(v) => {
            Some(scope.var(v))
        }
        NodeKind::PropertyRead(name) | NodeKind::PropertyWrite(name) => {
            Some(global_symbol(scope.file, name))
        }
        NodeKind::ArrayRead => node.children.first().and_then(|a| match &a.kind {
            NodeKind::VarRead(_) | NodeKind::PropertyRead(_) => identifier(a, scope),
            _ => None,
        }),
        _ => None,
    }
}

/// The right-hand side of an assignment node.
pub fn assigned_value(node: &Node) -> Option<&Node> {
    match &node.kind {
        NodeKind::VarWrite(_) | NodeKind::PropertyWrite(_) => node.children.first(),
        NodeKind::ArrayWrite(_) => node.children.get(1),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{SourceFile, SourceSection};

    fn leaf(kind: NodeKind) -> Node {
        Node::new(kind, Vec::new(), SourceSection::new(SourceFile::new("t", ""), 0, 0))
    }

    #[test]
    fn symbol_formats() {
        let s = SymbolScope::new("regression", "arraySum");
        assert_eq!(s.var(&VarRef::local("sumA")), "regression::arraySum::sumA");
        assert_eq!(s.var(&VarRef::global("m")), "regression::global::m");
        assert_eq!(s.function_symbol(), "regression::fn::arraySum");
        assert_eq!(function_name("regression::fn::arraySum"), Some("arraySum"));
        assert!(is_global("regression::global::m"));
    }

    #[test]
    fn identifiers_by_kind() {
        let s = SymbolScope::new("f", "g");
        let read = leaf(NodeKind::PropertyRead("m".into()));
        assert_eq!(identifier(&read, s).as_deref(), Some("f::global::m"));
        let idx = leaf(NodeKind::IntLiteral(0));
        let arr = Node::new(NodeKind::ArrayRead, vec![leaf(NodeKind::VarRead(VarRef::local("A"))), idx], read.source.clone());
        assert_eq!(identifier(&arr, s).as_deref(), Some("f::g::A"));
        assert_eq!(identifier(&leaf(NodeKind::Call("h".into())), s), None);
    }
}
