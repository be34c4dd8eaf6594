// SPDX-License-Identifier: Apache-2.0

//! MiniPy: indentation-delimited, `def` definitions, module-level globals
//! rebound inside functions only after a `global` declaration.

use std::sync::Arc;

use super::lexer::{lex, Mode, Tok};
use super::parser::{Dialect, FnScope, Parser};
use super::{Item, Language, Program};
use crate::ast::{Node, NodeKind, SourceFile};
use crate::error::ParseError;

#[derive(Debug, Default, Clone, Copy)]
pub struct MiniPy;

pub const ID: &str = "minipy";

impl Language for MiniPy {
    fn id(&self) -> &str {
        ID
    }

    fn extension(&self) -> Option<&str> {
        Some(".mpy.txt")
    }

    fn parse(&self, file: Arc<SourceFile>) -> Result<Program, ParseError> {
        let toks = lex(&file.text, Mode::Indent)?;
        let mut p = Parser::new(toks, file.clone(), Dialect::Py);
        let mut items = Vec::new();
        loop {
            match p.peek() {
                Tok::Eof => break,
                Tok::Newline => {
                    p.bump();
                }
                Tok::Indent => return Err(p.error("unexpected indent")),
                Tok::Ident(w) if w == "def" => {
                    let (line, col) = (p.token().line, p.token().col);
                    items.push(Item::Function(function_def(&mut p)?, line, col));
                }
                Tok::Ident(w) if w == "import" => {
                    p.bump();
                    p.ident()?;
                    end_of_statement(&mut p)?;
                }
                _ => {
                    if let Some(stmt) = statement(&mut p)? {
                        items.push(Item::Stmt(stmt));
                    }
                }
            }
        }
        Program::assemble(ID, file, items)
    }

    fn parse_expression(&self, text: &str) -> Result<Node, ParseError> {
        let file = SourceFile::new("<eval>", text);
        let toks = lex(text, Mode::Indent)?;
        let mut p = Parser::new(toks, file, Dialect::Py);
        let e = p.expr()?;
        while *p.peek() == Tok::Newline {
            p.bump();
        }
        if *p.peek() != Tok::Eof {
            return Err(p.unexpected("end of input"));
        }
        Ok(e)
    }
}

fn function_def(p: &mut Parser) -> Result<Node, ParseError> {
    let start = p.start();
    p.expect_word("def")?;
    let name = p.ident()?;
    p.expect_punct("(")?;
    let mut params = Vec::new();
    if !p.eat_punct(")") {
        loop {
            params.push(p.ident()?);
            if p.eat_punct(")") {
                break;
            }
            p.expect_punct(",")?;
        }
    }
    let mut scope = prescan(p);
    scope.locals.extend(params.iter().cloned());
    p.scope = Some(scope);
    let body = suite(p);
    p.scope = None;
    let body = body?;
    Ok(p.node(NodeKind::FunctionDef { name, params }, vec![body], start))
}

/// Finds assigned names and `global` declarations in the suite following
/// the cursor, following the usual rule that assignment makes a name local.
fn prescan(p: &Parser) -> FnScope {
    let mut scope = FnScope::default();
    let toks = &p.toks[p.pos..];
    let mut depth = 0usize;
    let mut stmt_start = false;
    let mut i = 0;
    while i < toks.len() {
        let tok = &toks[i].tok;
        match tok {
            Tok::Indent => depth += 1,
            Tok::Dedent => {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            }
            Tok::Eof => break,
            _ => {}
        }
        if stmt_start && depth > 0 {
            let next = toks.get(i + 1).map(|t| &t.tok);
            match (tok, next) {
                (Tok::Ident(w), _) if w == "global" => {
                    let mut j = i + 1;
                    while let Some(Tok::Ident(n)) = toks.get(j).map(|t| &t.tok) {
                        scope.declared_global.insert(n.clone());
                        j += 1;
                        if !matches!(toks.get(j).map(|t| &t.tok), Some(Tok::Punct(","))) {
                            break;
                        }
                        j += 1;
                    }
                }
                (Tok::Ident(w), Some(Tok::Ident(n))) if w == "for" => {
                    scope.locals.insert(n.clone());
                }
                (Tok::Ident(n), Some(Tok::Punct("=" | "+=" | "-=" | "*=" | "/="))) => {
                    scope.locals.insert(n.clone());
                }
                _ => {}
            }
        }
        stmt_start = matches!(tok, Tok::Newline | Tok::Indent | Tok::Dedent);
        i += 1;
    }
    scope
}

fn suite(p: &mut Parser) -> Result<Node, ParseError> {
    p.expect_punct(":")?;
    if *p.peek() != Tok::Newline {
        return Err(p.unexpected("end of line"));
    }
    p.bump();
    if *p.peek() != Tok::Indent {
        return Err(p.unexpected("indented block"));
    }
    p.bump();
    let start = p.start();
    let mut stmts = Vec::new();
    loop {
        match p.peek() {
            Tok::Dedent => {
                p.bump();
                break;
            }
            Tok::Eof => break,
            Tok::Newline => {
                p.bump();
            }
            Tok::Ident(w) if w == "def" => {
                return Err(p.error("nested function definitions are not supported"))
            }
            _ => {
                if let Some(stmt) = statement(p)? {
                    stmts.push(stmt);
                }
            }
        }
    }
    Ok(p.node(NodeKind::Block, stmts, start))
}

fn end_of_statement(p: &mut Parser) -> Result<(), ParseError> {
    match p.peek() {
        Tok::Newline => {
            p.bump();
            Ok(())
        }
        Tok::Dedent | Tok::Eof => Ok(()),
        _ => Err(p.unexpected("end of line")),
    }
}

/// Parses one statement. Declarations with no run-time effect (`global`,
/// `pass`) yield `None`.
fn statement(p: &mut Parser) -> Result<Option<Node>, ParseError> {
    let start = p.start();
    let stmt = match p.peek().clone() {
        Tok::Ident(w) if w == "if" => return if_stmt(p).map(Some),
        Tok::Ident(w) if w == "while" => {
            p.bump();
            let cond = p.expr()?;
            let body = suite(p)?;
            return Ok(Some(p.node(NodeKind::While, vec![cond, body], start)));
        }
        Tok::Ident(w) if w == "for" => return for_stmt(p).map(Some),
        Tok::Ident(w) if w == "global" => {
            if !p.in_function() {
                return Err(p.error("`global` outside a function"));
            }
            p.bump();
            loop {
                p.ident()?;
                if !p.eat_punct(",") {
                    break;
                }
            }
            end_of_statement(p)?;
            return Ok(None);
        }
        Tok::Ident(w) if w == "pass" => {
            p.bump();
            end_of_statement(p)?;
            return Ok(None);
        }
        Tok::Ident(w) if w == "return" => {
            p.bump();
            let mut children = Vec::new();
            if !matches!(p.peek(), Tok::Newline | Tok::Dedent | Tok::Eof) {
                children.push(p.expr()?);
            }
            p.node(NodeKind::Return, children, start)
        }
        Tok::Ident(w) if w == "print" && matches!(p.peek_at(1), Tok::Punct("(")) => {
            p.bump();
            let args = p.args()?;
            p.node(NodeKind::Print, args, start)
        }
        Tok::Ident(_) => {
            let save = p.pos;
            let name = p.ident()?;
            match p.assignment_tail(&name, start)? {
                Some(stmt) => stmt,
                None => {
                    p.pos = save;
                    let e = p.expr()?;
                    if !matches!(e.kind, NodeKind::Call(_) | NodeKind::PolyglotEval) {
                        return Err(p.error("expression statement must be a call"));
                    }
                    e
                }
            }
        }
        _ => return Err(p.unexpected("statement")),
    };
    end_of_statement(p)?;
    Ok(Some(stmt))
}

fn if_stmt(p: &mut Parser) -> Result<Node, ParseError> {
    let start = p.start();
    p.bump();
    let cond = p.expr()?;
    let then = suite(p)?;
    let mut children = vec![cond, then];
    if p.is_word("elif") {
        let else_start = p.start();
        let nested = if_stmt(p)?;
        children.push(p.node(NodeKind::Block, vec![nested], else_start));
    } else if p.eat_word("else") {
        children.push(suite(p)?);
    }
    Ok(p.node(NodeKind::If, children, start))
}

/// `for i in range(b):` or `for i in range(a, b):`.
fn for_stmt(p: &mut Parser) -> Result<Node, ParseError> {
    let start = p.start();
    p.expect_word("for")?;
    let var = p.ident()?;
    p.expect_word("in")?;
    if !p.is_word("range") {
        return Err(p.unexpected("`range(...)`"));
    }
    p.bump();
    let range_start = p.start();
    let mut bounds = p.args()?;
    let (from, to) = match bounds.len() {
        1 => (
            p.node(NodeKind::IntLiteral(0), Vec::new(), range_start),
            bounds.pop().unwrap(),
        ),
        2 => {
            let to = bounds.pop().unwrap();
            (bounds.pop().unwrap(), to)
        }
        _ => return Err(p.error("range takes one or two arguments")),
    };
    let body = suite(p)?;
    let target = p.resolve(&var);
    Ok(p.node(NodeKind::ForRange(target), vec![from, to, body], start))
}
