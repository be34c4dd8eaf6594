// SPDX-License-Identifier: Apache-2.0

//! Token cursor, scope resolution and the expression grammar shared by both
//! frontends. Statement grammars live in the per-language modules.

use std::collections::HashSet;
use std::sync::Arc;

use super::lexer::{Tok, Token};
use crate::ast::{BinOp, Node, NodeKind, SourceFile, SourceSection, UnOp, VarRef};
use crate::error::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum Dialect {
    Js,
    Py,
}

#[derive(Default)]
pub(super) struct FnScope {
    pub locals: HashSet<String>,
    pub declared_global: HashSet<String>,
}

pub(super) struct Parser {
    pub toks: Vec<Token>,
    pub pos: usize,
    pub file: Arc<SourceFile>,
    pub dialect: Dialect,
    pub scope: Option<FnScope>,
}

impl Parser {
    pub fn new(toks: Vec<Token>, file: Arc<SourceFile>, dialect: Dialect) -> Self {
        Parser {
            toks,
            pos: 0,
            file,
            dialect,
            scope: None,
        }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.pos + ahead).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn token(&self) -> &Token {
        &self.toks[self.pos]
    }

    pub fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub fn start(&self) -> usize {
        self.token().start
    }

    /// End offset of the last consumed token that is not layout.
    pub fn prev_end(&self) -> usize {
        self.toks[..self.pos]
            .iter()
            .rev()
            .find(|t| !matches!(t.tok, Tok::Newline | Tok::Indent | Tok::Dedent))
            .map_or(0, |t| t.end)
    }

    pub fn section(&self, start: usize) -> SourceSection {
        SourceSection::new(self.file.clone(), start, self.prev_end().max(start))
    }

    pub fn node(&self, kind: NodeKind, children: Vec<Node>, start: usize) -> Node {
        Node::new(kind, children, self.section(start))
    }

    pub fn error(&self, msg: impl Into<String>) -> ParseError {
        let t = self.token();
        ParseError::new(t.line, t.col, msg)
    }

    pub fn unexpected(&self, wanted: &str) -> ParseError {
        let found = match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Double(d) => format!("`{d}`"),
            Tok::Str(s) => format!("{s:?}"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Newline => "end of line".into(),
            Tok::Indent => "indent".into(),
            Tok::Dedent => "dedent".into(),
            Tok::Eof => "end of input".into(),
        };
        self.error(format!("expected {wanted}, found {found}"))
    }

    pub fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    pub fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    pub fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect_punct(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    pub fn expect_word(&mut self, w: &str) -> Result<(), ParseError> {
        if self.eat_word(w) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{w}`")))
        }
    }

    pub fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !self.is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    pub fn is_keyword(&self, w: &str) -> bool {
        match self.dialect {
            Dialect::Js => matches!(
                w,
                "var" | "function" | "if" | "else" | "while" | "for" | "return" | "true"
                    | "false"
            ),
            Dialect::Py => matches!(
                w,
                "def" | "if" | "elif" | "else" | "while" | "for" | "in" | "return" | "True"
                    | "False" | "and" | "or" | "not" | "global" | "pass" | "import"
            ),
        }
    }

    pub fn in_function(&self) -> bool {
        self.scope.is_some()
    }

    pub fn resolve(&self, name: &str) -> VarRef {
        match &self.scope {
            Some(s) if s.locals.contains(name) && !s.declared_global.contains(name) => {
                VarRef::local(name)
            }
            _ => VarRef::global(name),
        }
    }

    /// Variable read, lowered to a property of the global object for
    /// MiniJS globals.
    pub fn read_node(&self, name: &str, start: usize) -> Node {
        let var = self.resolve(name);
        let kind = if var.scope == crate::ast::Scope::Global && self.dialect == Dialect::Js {
            NodeKind::PropertyRead(var.name)
        } else {
            NodeKind::VarRead(var)
        };
        self.node(kind, Vec::new(), start)
    }

    pub fn write_node(&self, name: &str, value: Node, start: usize) -> Node {
        let var = self.resolve(name);
        let kind = if var.scope == crate::ast::Scope::Global && self.dialect == Dialect::Js {
            NodeKind::PropertyWrite(var.name)
        } else {
            NodeKind::VarWrite(var)
        };
        self.node(kind, vec![value], start)
    }

    /// Compound assignment operator at the cursor, if any.
    pub fn compound_op(&self) -> Option<BinOp> {
        match self.peek() {
            Tok::Punct("+=") => Some(BinOp::Add),
            Tok::Punct("-=") => Some(BinOp::Sub),
            Tok::Punct("*=") => Some(BinOp::Mul),
            Tok::Punct("/=") => Some(BinOp::Div),
            _ => None,
        }
    }

    /// Parses the tail of an assignment statement whose target identifier
    /// has just been consumed: `= e`, `op= e`, `[i] = e` or `[i] op= e`.
    /// Returns `None` when the cursor is not at an assignment.
    pub fn assignment_tail(&mut self, name: &str, start: usize) -> Result<Option<Node>, ParseError> {
        if self.eat_punct("=") {
            let value = self.expr()?;
            return Ok(Some(self.write_node(name, value, start)));
        }
        if let Some(op) = self.compound_op() {
            self.bump();
            let rhs = self.expr()?;
            let cur = self.read_node(name, start);
            let value = self.node(NodeKind::BinaryOp(op), vec![cur, rhs], start);
            return Ok(Some(self.write_node(name, value, start)));
        }
        if self.is_punct("[") {
            let save = self.pos;
            self.bump();
            let index = self.expr()?;
            self.expect_punct("]")?;
            let var = self.resolve(name);
            if self.eat_punct("=") {
                let value = self.expr()?;
                return Ok(Some(self.node(NodeKind::ArrayWrite(var), vec![index, value], start)));
            }
            if let Some(op) = self.compound_op() {
                self.bump();
                let rhs = self.expr()?;
                let arr = self.read_node(name, start);
                let cur = self.node(NodeKind::ArrayRead, vec![arr, index.clone()], start);
                let value = self.node(NodeKind::BinaryOp(op), vec![cur, rhs], start);
                return Ok(Some(self.node(NodeKind::ArrayWrite(var), vec![index, value], start)));
            }
            self.pos = save;
        }
        Ok(None)
    }

    pub fn args(&mut self) -> Result<Vec<Node>, ParseError> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if self.eat_punct(")") {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat_punct(")") {
                return Ok(args);
            }
            self.expect_punct(",")?;
        }
    }

    pub fn expr(&mut self) -> Result<Node, ParseError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        let mut lhs = self.and_expr()?;
        while self.eat_logical("||", "or") {
            let rhs = self.and_expr()?;
            lhs = self.node(NodeKind::BinaryOp(BinOp::Or), vec![lhs, rhs], start);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        let mut lhs = self.not_expr()?;
        while self.eat_logical("&&", "and") {
            let rhs = self.not_expr()?;
            lhs = self.node(NodeKind::BinaryOp(BinOp::And), vec![lhs, rhs], start);
        }
        Ok(lhs)
    }

    fn eat_logical(&mut self, js: &str, py: &str) -> bool {
        match self.dialect {
            Dialect::Js => self.eat_punct(js),
            Dialect::Py => self.eat_word(py),
        }
    }

    fn not_expr(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        if self.dialect == Dialect::Py && self.eat_word("not") {
            let operand = self.not_expr()?;
            return Ok(self.node(NodeKind::UnaryOp(UnOp::Not), vec![operand], start));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        let mut lhs = self.add_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("<") => BinOp::Lt,
                Tok::Punct("<=") => BinOp::Le,
                Tok::Punct(">") => BinOp::Gt,
                Tok::Punct(">=") => BinOp::Ge,
                Tok::Punct("==") => BinOp::Eq,
                Tok::Punct("!=") => BinOp::Ne,
                Tok::Punct("===") if self.dialect == Dialect::Js => BinOp::Eq,
                Tok::Punct("!==") if self.dialect == Dialect::Js => BinOp::Ne,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.add_expr()?;
            lhs = self.node(NodeKind::BinaryOp(op), vec![lhs, rhs], start);
        }
    }

    fn add_expr(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("+") => BinOp::Add,
                Tok::Punct("-") => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.mul_expr()?;
            lhs = self.node(NodeKind::BinaryOp(op), vec![lhs, rhs], start);
        }
    }

    fn mul_expr(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("*") => BinOp::Mul,
                Tok::Punct("/") => BinOp::Div,
                Tok::Punct("%") => BinOp::Mod,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary_expr()?;
            lhs = self.node(NodeKind::BinaryOp(op), vec![lhs, rhs], start);
        }
    }

    fn unary_expr(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        if self.eat_punct("-") {
            let operand = self.unary_expr()?;
            return Ok(self.node(NodeKind::UnaryOp(UnOp::Neg), vec![operand], start));
        }
        if self.dialect == Dialect::Js && self.eat_punct("!") {
            let operand = self.unary_expr()?;
            return Ok(self.node(NodeKind::UnaryOp(UnOp::Not), vec![operand], start));
        }
        self.postfix_expr()
    }

    fn postfix_expr(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        let mut e = self.primary()?;
        while self.eat_punct("[") {
            let index = self.expr()?;
            self.expect_punct("]")?;
            e = self.node(NodeKind::ArrayRead, vec![e, index], start);
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(self.node(NodeKind::IntLiteral(i), Vec::new(), start))
            }
            Tok::Double(d) => {
                self.bump();
                Ok(self.node(NodeKind::DoubleLiteral(d), Vec::new(), start))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(self.node(NodeKind::StringLiteral(s), Vec::new(), start))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Punct("[") => {
                self.bump();
                let mut items = Vec::new();
                if !self.eat_punct("]") {
                    loop {
                        items.push(self.expr()?);
                        if self.eat_punct("]") {
                            break;
                        }
                        self.expect_punct(",")?;
                        if self.eat_punct("]") {
                            break;
                        }
                    }
                }
                Ok(self.node(NodeKind::ArrayLiteral, items, start))
            }
            Tok::Ident(w) => {
                let (t, f) = match self.dialect {
                    Dialect::Js => ("true", "false"),
                    Dialect::Py => ("True", "False"),
                };
                if w == t || w == f {
                    self.bump();
                    return Ok(self.node(NodeKind::BoolLiteral(w == t), Vec::new(), start));
                }
                if self.at_polyglot() {
                    return self.polyglot_eval();
                }
                let name = self.ident()?;
                if self.is_punct("(") {
                    let args = self.args()?;
                    return Ok(self.node(NodeKind::Call(name), args, start));
                }
                Ok(self.read_node(&name, start))
            }
            _ => Err(self.unexpected("expression")),
        }
    }

    fn at_polyglot(&self) -> bool {
        let object = match self.dialect {
            Dialect::Js => "Polyglot",
            Dialect::Py => "polyglot",
        };
        matches!(self.peek(), Tok::Ident(s) if s == object)
            && matches!(self.peek_at(1), Tok::Punct("."))
            && matches!(self.peek_at(2), Tok::Ident(s) if s == "eval")
    }

    /// `Polyglot.eval(lang, code)`; MiniPy also accepts the keyword form
    /// `polyglot.eval(language=..., string=...)`.
    fn polyglot_eval(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        self.bump();
        self.bump();
        self.bump();
        self.expect_punct("(")?;
        let lang = self.polyglot_arg("language")?;
        self.expect_punct(",")?;
        let code = self.polyglot_arg("string")?;
        self.expect_punct(")")?;
        Ok(self.node(NodeKind::PolyglotEval, vec![lang, code], start))
    }

    fn polyglot_arg(&mut self, keyword: &str) -> Result<Node, ParseError> {
        if self.dialect == Dialect::Py
            && self.is_word(keyword)
            && matches!(self.peek_at(1), Tok::Punct("="))
        {
            self.bump();
            self.bump();
        }
        self.expr()
    }
}
