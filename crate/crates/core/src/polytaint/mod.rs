// SPDX-License-Identifier: Apache-2.0

//! Dynamic taint tracking and function classification.
//!
//! One instrumented run of the program labels symbols in a [`TaintMap`]
//! and records every guest function that executed. Functions labeled 1
//! are trusted (T), 2 neutral (N), and the remaining executed functions
//! untrusted (U).

mod agent;
mod symbols;
mod taint_map;
mod traverse;

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::ast::{BufferedHost, InstrumentationAgent, NodeId, TypeName, TOPLEVEL};
use crate::error::{AnalysisError, EngineError};
use crate::frontends::{is_global_assignment, LanguageRegistry, Program};

pub use agent::{taint_agent, Observation, SharedState, TaintState};
pub use symbols::{
    assigned_value, function_name, function_symbol, global_symbol, identifier, is_global,
    local_symbol, SymbolScope,
};
pub use taint_map::{TaintEntry, Label, Provenance, TaintMap};
pub use traverse::{is_secv_eval, is_tainted, taint_provenance, traverse_ast};

/// Where execution starts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind", content = "name")]
pub enum Entry {
    /// Run the top-level statements as a script.
    Script,
    /// Run the top-level assignments, then call the function.
    Function(String),
}

impl Entry {
    /// An explicit entry wins; otherwise a file with top-level statements
    /// beyond global assignments is a script, and failing that `main` is
    /// called.
    pub fn resolve(program: &Program, explicit: Option<&str>) -> Result<Entry, AnalysisError> {
        match explicit {
            Some(name) if program.function(name).is_some() => Ok(Entry::Function(name.into())),
            Some(name) => Err(EngineError::UnboundSymbol(name.to_string()).into()),
            None if program.has_script() => Ok(Entry::Script),
            None if program.function("main").is_some() => Ok(Entry::Function("main".into())),
            None => Err(AnalysisError::NoEntry),
        }
    }

    pub fn function(&self) -> Option<&str> {
        match self {
            Entry::Script => None,
            Entry::Function(f) => Some(f),
        }
    }

    /// Indices of the top-level statements this entry runs first.
    pub fn prelude(&self, program: &Program) -> Vec<usize> {
        program
            .globals
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(self, Entry::Script) || is_global_assignment(s))
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct AnalyzeOptions {
    pub entry: Option<String>,
    /// Lines served to `readLine`.
    pub input: Vec<String>,
}

/// T, N and U by function name, each in first-call order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    #[serde(rename = "T")]
    pub trusted: Vec<String>,
    #[serde(rename = "N")]
    pub neutral: Vec<String>,
    #[serde(rename = "U")]
    pub untrusted: Vec<String>,
}

impl Classification {
    pub fn trusted_names(&self) -> Vec<&str> {
        self.trusted.iter().map(String::as_str).collect()
    }

    pub fn neutral_names(&self) -> Vec<&str> {
        self.neutral.iter().map(String::as_str).collect()
    }

    pub fn untrusted_names(&self) -> Vec<&str> {
        self.untrusted.iter().map(String::as_str).collect()
    }

    pub fn label_of(&self, function: &str) -> Option<Label> {
        let has = |v: &Vec<String>| v.iter().any(|f| f == function);
        if has(&self.trusted) {
            Some(Label::Trusted)
        } else if has(&self.neutral) {
            Some(Label::Neutral)
        } else if has(&self.untrusted) {
            Some(Label::Untrusted)
        } else {
            None
        }
    }

    pub fn all(&self) -> impl Iterator<Item = &str> {
        self.trusted
            .iter()
            .chain(&self.neutral)
            .chain(&self.untrusted)
            .map(String::as_str)
    }

    /// T = label 1, N = label 2, U = every other seen function.
    pub fn finalize<'a>(map: &TaintMap, file: &str, seen: impl IntoIterator<Item = &'a str>) -> Self {
        let mut c = Classification::default();
        for f in seen {
            match map.get(&function_symbol(file, f)) {
                Some(Label::Trusted) => c.trusted.push(f.to_string()),
                Some(Label::Neutral) => c.neutral.push(f.to_string()),
                _ => c.untrusted.push(f.to_string()),
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FunctionRecord {
    pub name: String,
    pub symbol: String,
    pub root_node: NodeId,
    pub arg_types: Vec<TypeName>,
    pub return_type: TypeName,
    pub taint_label: Label,
    pub calls: u64,
}

/// The contents of `analysis.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalysisReport {
    pub program: String,
    pub language: String,
    pub entry: Entry,
    pub taint_map: TaintMap,
    pub classification: Classification,
    pub function_records: Vec<FunctionRecord>,
    /// Program output of the instrumented run.
    #[serde(skip)]
    pub output: String,
}

impl AnalysisReport {
    pub fn record(&self, name: &str) -> Option<&FunctionRecord> {
        self.function_records.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Runs `program` from `entry` with an optional agent attached, returning
/// its output.
pub fn execute(
    program: &Program,
    registry: &LanguageRegistry,
    entry: &Entry,
    agent: Option<Arc<InstrumentationAgent>>,
    input: &[String],
) -> Result<String, EngineError> {
    let mut interp = program.interpreter(Arc::new(registry.clone()));
    if let Some(agent) = agent {
        interp = interp.with_agent(agent);
    }
    let host = BufferedHost::with_input(input.iter().cloned());
    let prelude: Vec<_> = entry
        .prelude(program)
        .into_iter()
        .map(|i| program.globals[i].clone())
        .collect();
    interp.run_toplevel(&prelude, &host)?;
    if let Some(f) = entry.function() {
        interp.call_entry(f, Vec::new(), &host)?;
    }
    Ok(host.output())
}

/// One instrumented run followed by classification.
pub fn analyze(
    program: &Program,
    registry: &LanguageRegistry,
    opts: &AnalyzeOptions,
) -> Result<AnalysisReport, AnalysisError> {
    let entry = Entry::resolve(program, opts.entry.as_deref())?;
    let state: SharedState = Arc::new(Mutex::new(TaintState::default()));
    let agent = Arc::new(taint_agent(state.clone()));
    let output = execute(program, registry, &entry, Some(agent), &opts.input)?;
    let st = std::mem::take(&mut *state.lock().unwrap_or_else(|p| p.into_inner()));
    if st.seen.is_empty() {
        return Err(AnalysisError::NothingExecuted);
    }
    if let Some(f) = entry.function() {
        if !st.seen.contains_key(f) {
            return Err(AnalysisError::EntryNotRun(f.to_string()));
        }
    }
    let file = program.stem.as_str();
    let classification = Classification::finalize(&st.map, file, st.seen.keys().map(String::as_str));
    let function_records = st
        .seen
        .iter()
        .map(|(name, o)| FunctionRecord {
            name: name.clone(),
            symbol: function_symbol(file, name),
            root_node: program.function(name).map_or(NodeId(0), |f| f.id),
            arg_types: o.arg_types.clone(),
            return_type: o.return_type,
            taint_label: classification.label_of(name).unwrap_or(Label::Untrusted),
            calls: o.calls,
        })
        .collect();
    Ok(AnalysisReport {
        program: program.stem.clone(),
        language: program.language.clone(),
        entry,
        taint_map: st.map,
        classification,
        function_records,
        output,
    })
}

/// Symbol of the pseudo-function that owns top-level statements.
pub fn toplevel_symbol(file: &str) -> String {
    function_symbol(file, TOPLEVEL)
}
