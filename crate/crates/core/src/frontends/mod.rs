// SPDX-License-Identifier: Apache-2.0

//! Guest-language frontends and the polyglot language registry.
//!
//! Every language is a [`Language`] registered by id. Program languages
//! (MiniJS, MiniPy) parse whole files; the `secV` language only evaluates
//! constructor snippets through `Polyglot.eval`.

mod lexer;
mod minijs;
mod minipy;
mod parser;

use std::path::Path;
use std::sync::Arc;

use indexmap::IndexMap;

use crate::ast::{Frame, Host, Interpreter, Node, NodeId, NodeKind, PolyglotHost, SourceFile, Value};
use crate::error::{Direction, EngineError, GuardError, ParseError};
use crate::secv::{self, Constructors};

pub use lexer::{lex, Mode, Tok, Token};
pub use minijs::MiniJs;
pub use minipy::MiniPy;

pub const MINIJS: &str = minijs::ID;
pub const MINIPY: &str = minipy::ID;
pub const SECV: &str = secv::LANGUAGE_ID;

/// A top-level item as produced by a frontend, before numbering.
#[derive(Debug)]
pub enum Item {
    Function(Node, usize, usize),
    Stmt(Node),
}

/// A parsed guest program.
#[derive(Debug, Clone)]
pub struct Program {
    pub language: String,
    pub path: String,
    /// File name with the frontend extension removed; twin programs in
    /// different languages share a stem.
    pub stem: String,
    pub source: Arc<SourceFile>,
    pub functions: IndexMap<String, Node>,
    pub globals: Vec<Node>,
}

impl Program {
    /// Numbers all nodes in source order and checks for duplicate
    /// function names.
    pub fn assemble(
        language: &str,
        source: Arc<SourceFile>,
        items: Vec<Item>,
    ) -> Result<Program, ParseError> {
        let path = source.path.display().to_string();
        let mut functions = IndexMap::new();
        let mut globals = Vec::new();
        let mut next = 1;
        for item in items {
            match item {
                Item::Function(mut def, line, col) => {
                    next = def.number_preorder(next);
                    let name = def.function_name().unwrap_or_default().to_string();
                    if functions.contains_key(&name) {
                        return Err(ParseError::new(
                            line,
                            col,
                            format!("function `{name}` defined twice"),
                        ));
                    }
                    functions.insert(name, def);
                }
                Item::Stmt(mut stmt) => {
                    next = stmt.number_preorder(next);
                    globals.push(stmt);
                }
            }
        }
        Ok(Program {
            language: language.to_string(),
            stem: stem_of(&path),
            path,
            source,
            functions,
            globals,
        })
    }

    pub fn function(&self, name: &str) -> Option<&Node> {
        self.functions.get(name)
    }

    pub fn function_source(&self, name: &str) -> Option<&str> {
        self.functions.get(name).map(|f| f.source.text())
    }

    /// True if any top-level statement is something other than a global
    /// assignment, i.e. the file is a script rather than a library with a
    /// `main`.
    pub fn has_script(&self) -> bool {
        self.globals.iter().any(|s| !is_global_assignment(s))
    }

    /// An interpreter with every function of this program defined.
    pub fn interpreter(&self, polyglot: Arc<dyn PolyglotHost>) -> Interpreter {
        let mut interp = Interpreter::new(self.stem.as_str(), polyglot);
        for def in self.functions.values() {
            interp.define_function(def.clone());
        }
        interp
    }
}

pub fn is_global_assignment(stmt: &Node) -> bool {
    matches!(stmt.kind, NodeKind::VarWrite(_) | NodeKind::PropertyWrite(_))
}

/// `dir/regression.mpy.txt` -> `regression`.
pub fn stem_of(path: &str) -> String {
    let name = Path::new(path)
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    for ext in [".mjs.txt", ".mpy.txt"] {
        if let Some(stem) = name.strip_suffix(ext) {
            return stem.to_string();
        }
    }
    Path::new(&name)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or(name)
}

pub trait Language: Send + Sync {
    fn id(&self) -> &str;

    /// File extension for auto-detection, including the leading dot.
    fn extension(&self) -> Option<&str> {
        None
    }

    fn parse(&self, file: Arc<SourceFile>) -> Result<Program, ParseError> {
        let _ = file;
        Err(ParseError::new(
            1,
            1,
            format!("`{}` snippets cannot be loaded as programs", self.id()),
        ))
    }

    fn parse_expression(&self, text: &str) -> Result<Node, ParseError>;

    /// Evaluates `code` in a fresh top-level scope.
    fn eval(
        &self,
        code: &str,
        origin: NodeId,
        host: &dyn Host,
        registry: &LanguageRegistry,
    ) -> Result<Value, EngineError> {
        let _ = origin;
        let mut expr = self.parse_expression(code)?;
        expr.number_preorder(1);
        let interp = Interpreter::new("<eval>", Arc::new(registry.clone()));
        interp.execute(&expr, &mut Frame::toplevel(), host)
    }
}

/// The secure node generator exposed as a polyglot language.
#[derive(Clone, Default)]
pub struct SecVLanguage {
    pub constructors: Constructors,
}

impl Language for SecVLanguage {
    fn id(&self) -> &str {
        SECV
    }

    fn parse_expression(&self, _text: &str) -> Result<Node, ParseError> {
        Err(ParseError::new(1, 1, "secV snippets are evaluated, not parsed"))
    }

    fn eval(
        &self,
        code: &str,
        origin: NodeId,
        host: &dyn Host,
        _registry: &LanguageRegistry,
    ) -> Result<Value, EngineError> {
        if !host.may_create_secure() {
            return Err(GuardError {
                direction: Direction::Ocall,
                function: SECV.to_string(),
                detail: format!("`{code}` evaluated outside the trusted partition"),
            }
            .into());
        }
        Ok(self.constructors.eval(code, origin)?)
    }
}

/// Languages registered by id.
#[derive(Clone)]
pub struct LanguageRegistry {
    languages: IndexMap<String, Arc<dyn Language>>,
}

impl Default for LanguageRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

impl LanguageRegistry {
    pub fn empty() -> Self {
        LanguageRegistry {
            languages: IndexMap::new(),
        }
    }

    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register(MiniJs);
        r.register(MiniPy);
        r.register(SecVLanguage::default());
        r
    }

    pub fn register(&mut self, lang: impl Language + 'static) {
        self.languages.insert(lang.id().to_string(), Arc::new(lang));
    }

    pub fn get(&self, id: &str) -> Option<&Arc<dyn Language>> {
        self.languages.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.languages.keys().map(String::as_str)
    }

    pub fn detect(&self, path: &str) -> Option<&Arc<dyn Language>> {
        self.languages
            .values()
            .find(|l| l.extension().is_some_and(|ext| path.ends_with(ext)))
    }

    /// Parses `text` as the file at `path`, using `lang` when given and
    /// the file extension otherwise.
    pub fn parse(&self, text: &str, path: &str, lang: Option<&str>) -> Result<Program, EngineError> {
        let language = match lang {
            Some(id) => self
                .get(id)
                .ok_or_else(|| EngineError::UnknownLanguage(id.to_string()))?,
            None => self
                .detect(path)
                .ok_or_else(|| EngineError::UnknownLanguage(format!("no frontend for `{path}`")))?,
        };
        Ok(language.parse(SourceFile::new(path, text))?)
    }

    pub fn parse_file(&self, path: &Path, lang: Option<&str>) -> Result<Program, EngineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EngineError::Io(format!("{}: {e}", path.display())))?;
        self.parse(&text, &path.display().to_string(), lang)
    }
}

impl PolyglotHost for LanguageRegistry {
    fn eval(
        &self,
        language: &str,
        code: &str,
        origin: NodeId,
        host: &dyn Host,
    ) -> Result<Value, EngineError> {
        let lang = self
            .get(language)
            .ok_or_else(|| EngineError::UnknownLanguage(language.to_string()))?;
        lang.eval(code, origin, host, self)
    }
}
