// SPDX-License-Identifier: Apache-2.0

//! MiniJS: brace-delimited, `var` declarations, `function` definitions.
//! Globals are properties of the global object.

use std::sync::Arc;

use super::lexer::{lex, Mode, Tok};
use super::parser::{Dialect, FnScope, Parser};
use super::{Item, Language, Program};
use crate::ast::{BinOp, Node, NodeKind, SourceFile};
use crate::error::ParseError;

#[derive(Debug, Default, Clone, Copy)]
pub struct MiniJs;

pub const ID: &str = "minijs";

impl Language for MiniJs {
    fn id(&self) -> &str {
        ID
    }

    fn extension(&self) -> Option<&str> {
        Some(".mjs.txt")
    }

    fn parse(&self, file: Arc<SourceFile>) -> Result<Program, ParseError> {
        let toks = lex(&file.text, Mode::Braces)?;
        let mut p = Parser::new(toks, file.clone(), Dialect::Js);
        let mut items = Vec::new();
        while *p.peek() != Tok::Eof {
            if p.is_word("function") {
                let (line, col) = (p.token().line, p.token().col);
                items.push(Item::Function(function_def(&mut p)?, line, col));
            } else {
                items.push(Item::Stmt(statement(&mut p)?));
            }
        }
        Program::assemble(ID, file, items)
    }

    fn parse_expression(&self, text: &str) -> Result<Node, ParseError> {
        let file = SourceFile::new("<eval>", text);
        let toks = lex(text, Mode::Braces)?;
        let mut p = Parser::new(toks, file, Dialect::Js);
        let e = p.expr()?;
        p.eat_punct(";");
        if *p.peek() != Tok::Eof {
            return Err(p.unexpected("end of input"));
        }
        Ok(e)
    }
}

fn function_def(p: &mut Parser) -> Result<Node, ParseError> {
    let start = p.start();
    p.expect_word("function")?;
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
    if !p.is_punct("{") {
        return Err(p.unexpected("`{`"));
    }
    let mut scope = FnScope::default();
    scope.locals.extend(params.iter().cloned());
    scope.locals.extend(declared_vars(p));
    p.scope = Some(scope);
    let body = block(p);
    p.scope = None;
    let body = body?;
    Ok(p.node(NodeKind::FunctionDef { name, params }, vec![body], start))
}

/// Names declared with `var` anywhere in the brace block at the cursor.
fn declared_vars(p: &Parser) -> Vec<String> {
    let mut names = Vec::new();
    let mut depth = 0usize;
    for (i, t) in p.toks[p.pos..].iter().enumerate() {
        match &t.tok {
            Tok::Punct("{") => depth += 1,
            Tok::Punct("}") => {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            }
            Tok::Ident(w) if w == "var" => {
                if let Some(Tok::Ident(n)) = p.toks.get(p.pos + i + 1).map(|t| &t.tok) {
                    names.push(n.clone());
                }
            }
            Tok::Eof => break,
            _ => {}
        }
    }
    names
}

fn block(p: &mut Parser) -> Result<Node, ParseError> {
    let start = p.start();
    p.expect_punct("{")?;
    let mut stmts = Vec::new();
    while !p.eat_punct("}") {
        if *p.peek() == Tok::Eof {
            return Err(p.unexpected("`}`"));
        }
        stmts.push(statement(p)?);
    }
    Ok(p.node(NodeKind::Block, stmts, start))
}

fn statement(p: &mut Parser) -> Result<Node, ParseError> {
    let start = p.start();
    let stmt = match p.peek().clone() {
        Tok::Ident(w) if w == "function" => {
            return Err(p.error("nested function definitions are not supported"))
        }
        Tok::Ident(w) if w == "var" => {
            p.bump();
            let name = p.ident()?;
            p.expect_punct("=")?;
            let value = p.expr()?;
            p.write_node(&name, value, start)
        }
        Tok::Ident(w) if w == "if" => return if_stmt(p),
        Tok::Ident(w) if w == "while" => {
            p.bump();
            p.expect_punct("(")?;
            let cond = p.expr()?;
            p.expect_punct(")")?;
            let body = block(p)?;
            return Ok(p.node(NodeKind::While, vec![cond, body], start));
        }
        Tok::Ident(w) if w == "for" => return for_stmt(p),
        Tok::Ident(w) if w == "return" => {
            p.bump();
            let mut children = Vec::new();
            if !p.is_punct(";") && !p.is_punct("}") {
                children.push(p.expr()?);
            }
            p.node(NodeKind::Return, children, start)
        }
        Tok::Ident(w)
            if w == "console"
                && matches!(p.peek_at(1), Tok::Punct("."))
                && matches!(p.peek_at(2), Tok::Ident(l) if l == "log") =>
        {
            p.bump();
            p.bump();
            p.bump();
            let args = p.args()?;
            p.node(NodeKind::Print, args, start)
        }
        Tok::Ident(_) => simple_statement(p)?,
        _ => return Err(p.unexpected("statement")),
    };
    p.eat_punct(";");
    Ok(stmt)
}

fn simple_statement(p: &mut Parser) -> Result<Node, ParseError> {
    let start = p.start();
    let save = p.pos;
    let name = p.ident()?;
    if p.eat_punct("++") {
        let cur = p.read_node(&name, start);
        let one = p.node(NodeKind::IntLiteral(1), Vec::new(), start);
        let value = p.node(NodeKind::BinaryOp(BinOp::Add), vec![cur, one], start);
        return Ok(p.write_node(&name, value, start));
    }
    if let Some(stmt) = p.assignment_tail(&name, start)? {
        return Ok(stmt);
    }
    p.pos = save;
    let e = p.expr()?;
    if !matches!(e.kind, NodeKind::Call(_) | NodeKind::PolyglotEval) {
        return Err(p.error("expression statement must be a call"));
    }
    Ok(e)
}

fn if_stmt(p: &mut Parser) -> Result<Node, ParseError> {
    let start = p.start();
    p.expect_word("if")?;
    p.expect_punct("(")?;
    let cond = p.expr()?;
    p.expect_punct(")")?;
    let then = block(p)?;
    let mut children = vec![cond, then];
    if p.eat_word("else") {
        if p.is_word("if") {
            let else_start = p.start();
            let nested = if_stmt(p)?;
            children.push(p.node(NodeKind::Block, vec![nested], else_start));
        } else {
            children.push(block(p)?);
        }
    }
    Ok(p.node(NodeKind::If, children, start))
}

/// `for (var i = a; i < b; i++) { ... }`, the only loop shape MiniJS
/// accepts besides `while`.
fn for_stmt(p: &mut Parser) -> Result<Node, ParseError> {
    let start = p.start();
    p.expect_word("for")?;
    p.expect_punct("(")?;
    p.eat_word("var");
    let var = p.ident()?;
    p.expect_punct("=")?;
    let from = p.expr()?;
    p.expect_punct(";")?;
    expect_name(p, &var)?;
    p.expect_punct("<")?;
    let to = p.expr()?;
    p.expect_punct(";")?;
    expect_name(p, &var)?;
    if p.eat_punct("++") {
    } else if p.eat_punct("+=") {
        expect_one(p)?;
    } else {
        p.expect_punct("=")?;
        expect_name(p, &var)?;
        p.expect_punct("+")?;
        expect_one(p)?;
    }
    p.expect_punct(")")?;
    let body = block(p)?;
    let target = p.resolve(&var);
    Ok(p.node(NodeKind::ForRange(target), vec![from, to, body], start))
}

fn expect_name(p: &mut Parser, name: &str) -> Result<(), ParseError> {
    if p.is_word(name) {
        p.bump();
        Ok(())
    } else {
        Err(p.unexpected(&format!("loop variable `{name}`")))
    }
}

fn expect_one(p: &mut Parser) -> Result<(), ParseError> {
    if *p.peek() == Tok::Int(1) {
        p.bump();
        Ok(())
    } else {
        Err(p.unexpected("`1`"))
    }
}
