// SPDX-License-Identifier: Apache-2.0

//! Tainted-node checks over AST subtrees.

use super::symbols::{identifier, SymbolScope};
use super::taint_map::{Provenance, TaintMap};
use crate::ast::{Node, NodeKind};
use crate::secv;

/// A polyglot eval whose language operand is the literal `"secV"`.
pub fn is_secv_eval(node: &Node) -> bool {
    matches!(node.kind, NodeKind::PolyglotEval)
        && node
            .children
            .iter()
            .any(|c| matches!(&c.kind, NodeKind::StringLiteral(s) if s == secv::LANGUAGE_ID))
}

pub fn is_tainted(node: &Node, map: &TaintMap, scope: SymbolScope<'_>) -> bool {
    if is_secv_eval(node) {
        return true;
    }
    identifier(node, scope).is_some_and(|id| map.is_tainted(&id))
}

/// Depth-first, short-circuiting search for a tainted node.
pub fn traverse_ast(node: &Node, map: &TaintMap, scope: SymbolScope<'_>) -> bool {
    is_tainted(node, map, scope) || node.children.iter().any(|c| traverse_ast(c, map, scope))
}

/// Like [`traverse_ast`] but reports where the taint comes from. A taint
/// source anywhere in the tree wins over parameter-derived taint.
pub fn taint_provenance(node: &Node, map: &TaintMap, scope: SymbolScope<'_>) -> Option<Provenance> {
    if is_secv_eval(node) {
        return Some(Provenance::Source);
    }
    let mut found = identifier(node, scope).and_then(|id| {
        map.is_tainted(&id)
            .then(|| map.provenance(&id).unwrap_or(Provenance::Source))
    });
    if found == Some(Provenance::Source) {
        return found;
    }
    for c in &node.children {
        match taint_provenance(c, map, scope) {
            Some(Provenance::Source) => return Some(Provenance::Source),
            Some(p) => found = Some(p),
            None => {}
        }
    }
    found
}
