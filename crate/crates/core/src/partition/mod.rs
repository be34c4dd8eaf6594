// SPDX-License-Identifier: Apache-2.0

//! Splitting a classified program into trusted and untrusted manifests.
//!
//! The trusted side holds the real bodies of T and N functions and an
//! ocall proxy for every U function. The untrusted side holds the real
//! bodies of U and N functions and an ecall proxy for every T function.
//! Manifests carry guest source text; the runtime re-parses it.

pub mod codec;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ast::{Node, NodeKind, Scope, TypeName};
use crate::error::{Direction, ParseError, PartitionError};
use crate::frontends::{LanguageRegistry, Program};
use crate::polytaint::{global_symbol, AnalysisReport, Classification, Entry, Label};

pub use codec::{deserialize, serialize};

pub const TRUSTED_MANIFEST: &str = "trusted.manifest.json";
pub const UNTRUSTED_MANIFEST: &str = "untrusted.manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Trusted,
    Untrusted,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Trusted => Side::Untrusted,
            Side::Untrusted => Side::Trusted,
        }
    }

    /// Direction of a call leaving this side.
    pub fn outgoing(self) -> Direction {
        match self {
            Side::Trusted => Direction::Ocall,
            Side::Untrusted => Direction::Ecall,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Trusted => "trusted",
            Side::Untrusted => "untrusted",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    Real,
    Proxy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transition {
    Ecall,
    Ocall,
    None,
}

impl From<Direction> for Transition {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Ecall => Transition::Ecall,
            Direction::Ocall => Transition::Ocall,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FunctionEntry {
    pub name: String,
    pub kind: EntryKind,
    #[serde(default)]
    pub source_text: Option<String>,
    pub arg_types: Vec<TypeName>,
    pub return_type: TypeName,
    pub transition: Transition,
}

impl FunctionEntry {
    pub fn is_real(&self) -> bool {
        self.kind == EntryKind::Real
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundaryStub {
    pub name: String,
    pub direction: Direction,
    pub arg_types: Vec<TypeName>,
    pub return_type: TypeName,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PartitionManifest {
    pub side: Side,
    pub program: String,
    pub language_id: String,
    pub entry: Entry,
    pub entries: Vec<FunctionEntry>,
    pub stubs: Vec<BoundaryStub>,
    /// Top-level statements this side runs, in source order.
    pub global_init: Vec<String>,
}

impl PartitionManifest {
    pub fn entry(&self, name: &str) -> Option<&FunctionEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn reals(&self) -> impl Iterator<Item = &FunctionEntry> {
        self.entries.iter().filter(|e| e.is_real())
    }

    pub fn proxies(&self) -> impl Iterator<Item = &FunctionEntry> {
        self.entries.iter().filter(|e| !e.is_real())
    }

    pub fn real_names(&self) -> Vec<&str> {
        self.reals().map(|e| e.name.as_str()).collect()
    }

    pub fn proxy_names(&self) -> Vec<&str> {
        self.proxies().map(|e| e.name.as_str()).collect()
    }

    /// Number of real function bodies; for the trusted side this is the
    /// size of the trusted code base.
    pub fn tcb_size(&self) -> usize {
        self.reals().count()
    }

    /// Guest source of the whole partition: top-level statements, then
    /// every real function.
    pub fn source(&self) -> String {
        let mut out = String::new();
        for stmt in &self.global_init {
            out.push_str(stmt);
            out.push('\n');
        }
        for e in self.reals() {
            if let Some(src) = &e.source_text {
                out.push('\n');
                out.push_str(src);
                out.push('\n');
            }
        }
        out
    }

    /// Parses [`Self::source`] with the program's frontend.
    pub fn parse(&self, registry: &LanguageRegistry) -> Result<Program, ParseError> {
        let path = format!("{}.{}", self.program, self.side);
        let lang = registry.get(&self.language_id).ok_or_else(|| {
            ParseError::new(1, 1, format!("unknown language `{}`", self.language_id))
        })?;
        let mut program = lang.parse(crate::ast::SourceFile::new(path, self.source()))?;
        program.stem = self.program.clone();
        Ok(program)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// The trusted and untrusted halves of one program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub trusted: PartitionManifest,
    pub untrusted: PartitionManifest,
}

impl Partition {
    pub fn side(&self, side: Side) -> &PartitionManifest {
        match side {
            Side::Trusted => &self.trusted,
            Side::Untrusted => &self.untrusted,
        }
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(TRUSTED_MANIFEST), self.trusted.to_json())?;
        std::fs::write(dir.join(UNTRUSTED_MANIFEST), self.untrusted.to_json())?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Partition, crate::Error> {
        let load = |name: &str| -> Result<PartitionManifest, crate::Error> {
            let text = std::fs::read_to_string(dir.join(name))?;
            Ok(serde_json::from_str(&text)?)
        };
        Ok(Partition {
            trusted: load(TRUSTED_MANIFEST)?,
            untrusted: load(UNTRUSTED_MANIFEST)?,
        })
    }
}

/// Global a top-level statement assigns, if any.
fn assigned_global(stmt: &Node) -> Option<&str> {
    match &stmt.kind {
        NodeKind::VarWrite(v) if v.scope == Scope::Global => Some(&v.name),
        NodeKind::PropertyWrite(name) => Some(name),
        _ => None,
    }
}

fn contains_call(node: &Node) -> bool {
    let mut found = false;
    node.walk(&mut |n| found |= matches!(n.kind, NodeKind::Call(_)));
    found
}

/// Where a top-level statement runs.
fn place_statement(stmt: &Node, tainted: &dyn Fn(&str) -> bool) -> (bool, bool) {
    match assigned_global(stmt) {
        Some(g) if tainted(g) => (true, false),
        Some(_) if !contains_call(stmt) => (true, true),
        _ => (false, true),
    }
}

/// Program functions that `node` refers to by name.
fn referenced_functions<'a>(node: &'a Node, program: &Program, out: &mut Vec<&'a str>) {
    node.walk(&mut |n| {
        let name = match &n.kind {
            NodeKind::Call(name) => name.as_str(),
            NodeKind::VarRead(v) if v.scope == Scope::Global => v.name.as_str(),
            NodeKind::PropertyRead(name) => name.as_str(),
            _ => return,
        };
        if program.functions.contains_key(name) {
            out.push(name);
        }
    });
}

/// Builds both manifests from a program and its analysis.
pub fn partition(program: &Program, report: &AnalysisReport) -> Result<Partition, PartitionError> {
    partition_with(program, report, &report.classification)
}

/// The whole-program-in-the-enclave baseline: every executed function is
/// trusted, so the untrusted side holds only proxies and top-level code.
pub fn unpartitioned(program: &Program, report: &AnalysisReport) -> Result<Partition, PartitionError> {
    let cls = Classification {
        trusted: report.function_records.iter().map(|r| r.name.clone()).collect(),
        neutral: Vec::new(),
        untrusted: Vec::new(),
    };
    partition_with(program, report, &cls)
}

pub fn partition_with(
    program: &Program,
    report: &AnalysisReport,
    cls: &Classification,
) -> Result<Partition, PartitionError> {
    if report.program != program.stem {
        return Err(PartitionError::ProgramMismatch {
            report: report.program.clone(),
            program: program.stem.clone(),
        });
    }
    if let Some(unknown) = cls.all().find(|f| program.function(f).is_none()) {
        return Err(PartitionError::UnknownFunction(unknown.to_string()));
    }

    let prelude: Vec<&Node> = report
        .entry
        .prelude(program)
        .into_iter()
        .map(|i| &program.globals[i])
        .collect();

    let mut referenced = Vec::new();
    for stmt in &prelude {
        referenced_functions(stmt, program, &mut referenced);
    }
    for name in cls.all() {
        referenced_functions(&program.functions[name], program, &mut referenced);
    }
    if let Some(entry) = report.entry.function() {
        referenced.push(entry);
    }
    if let Some(missing) = referenced.iter().find(|f| cls.label_of(f).is_none()) {
        return Err(PartitionError::UnclassifiedFunction(missing.to_string()));
    }

    let file = program.stem.as_str();
    let tainted = |g: &str| report.taint_map.is_tainted(&global_symbol(file, g));
    let mut trusted_init = Vec::new();
    let mut untrusted_init = Vec::new();
    for stmt in prelude {
        let (t, u) = place_statement(stmt, &tainted);
        if t {
            trusted_init.push(stmt.source.text().to_string());
        }
        if u {
            untrusted_init.push(stmt.source.text().to_string());
        }
    }

    let mut sides = [Side::Trusted, Side::Untrusted].map(|side| PartitionManifest {
        side,
        program: program.stem.clone(),
        language_id: program.language.clone(),
        entry: report.entry.clone(),
        entries: Vec::new(),
        stubs: Vec::new(),
        global_init: Vec::new(),
    });
    sides[0].global_init = trusted_init;
    sides[1].global_init = untrusted_init;

    let mut stub_names: HashSet<(Direction, String)> = HashSet::new();
    // Program order keeps manifests stable across frontends and runs.
    for (name, def) in &program.functions {
        let Some(label) = cls.label_of(name) else {
            continue;
        };
        let (arg_types, return_type) = match report.record(name) {
            Some(r) => (r.arg_types.clone(), r.return_type),
            None => (vec![TypeName::Object; def.params().len()], TypeName::Object),
        };
        let home: &[Side] = match label {
            Label::Trusted => &[Side::Trusted],
            Label::Neutral => &[Side::Trusted, Side::Untrusted],
            Label::Untrusted => &[Side::Untrusted],
        };
        for m in sides.iter_mut() {
            if home.contains(&m.side) {
                m.entries.push(FunctionEntry {
                    name: name.clone(),
                    kind: EntryKind::Real,
                    source_text: Some(def.source.text().to_string()),
                    arg_types: arg_types.clone(),
                    return_type,
                    transition: Transition::None,
                });
            } else {
                let direction = m.side.outgoing();
                m.entries.push(FunctionEntry {
                    name: name.clone(),
                    kind: EntryKind::Proxy,
                    source_text: None,
                    arg_types: arg_types.clone(),
                    return_type,
                    transition: direction.into(),
                });
                let fresh = stub_names.insert((direction, name.clone()));
                debug_assert!(fresh, "one stub per proxy");
                m.stubs.push(BoundaryStub {
                    name: name.clone(),
                    direction,
                    arg_types: arg_types.clone(),
                    return_type,
                });
            }
        }
    }

    let [trusted, untrusted] = sides;
    Ok(Partition { trusted, untrusted })
}
