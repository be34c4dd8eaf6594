// SPDX-License-Identifier: Apache-2.0

//! Run-time taint tracking over a shared guest-language AST, function
//! classification into trusted/neutral/untrusted sets, program partitioning,
//! and a simulated enclave runtime that executes the two halves across a
//! serialization-only boundary.
//!
//! The pipeline is `parse -> analyze -> partition -> load -> invoke`:
//!
//! ```
//! use polysplit::frontends::LanguageRegistry;
//! use polysplit::polytaint::analyze;
//!
//! let registry = LanguageRegistry::with_defaults();
//! let src = "function main() {\n  var s = Polyglot.eval(\"secV\", \"sInt(4)\");\n  var t = s + 2;\n}\n";
//! let program = registry.parse(src, "demo.mjs.txt", None).unwrap();
//! let report = analyze(&program, &registry, &Default::default()).unwrap();
//! assert_eq!(report.classification.trusted_names(), vec!["main"]);
//! ```

pub mod ast;
pub mod bench;
pub mod corpus;
pub mod error;
pub mod frontends;
pub mod partition;
pub mod pipeline;
pub mod polytaint;
pub mod secv;
pub mod teesim;

pub use ast::{Node, NodeId, NodeKind, SyntaxTag, Value};
pub use error::{
    AnalysisError, CodecError, EngineError, Error, GuardError, LoadError, ParseError,
    PartitionError,
};
