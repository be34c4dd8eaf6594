// SPDX-License-Identifier: Apache-2.0

//! Secure values: the `secV` constructor language and the propagation rules
//! for operations that touch a secure operand.
//!
//! Secureness is tracked per whole value. Any operation with a secure
//! operand produces a secure result; the only way back to a plain value is
//! [`deep_unwrap`], which the runtime calls exclusively inside the trusted
//! partition.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::ast::{self, BinOp, NodeId, UnOp, Value};
use crate::error::{EngineError, ParseError};

pub const LANGUAGE_ID: &str = "secV";

/// A payload flagged as sensitive, with the id of the `secV` eval node that
/// created it. Equality ignores the origin.
#[derive(Clone)]
pub struct SecureValue {
    pub payload: Value,
    pub origin: NodeId,
}

impl SecureValue {
    /// Wraps `payload`, stripping any secure components inside it so a
    /// secure value never nests another.
    pub fn new(payload: Value, origin: NodeId) -> Self {
        SecureValue {
            payload: deep_unwrap(&payload),
            origin,
        }
    }
}

impl PartialEq for SecureValue {
    fn eq(&self, other: &Self) -> bool {
        self.payload == other.payload
    }
}

impl fmt::Debug for SecureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecureValue({:?} from {})", self.payload, self.origin)
    }
}

impl fmt::Display for SecureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "secure:{}", self.payload.render())
    }
}

pub fn secure(payload: Value, origin: NodeId) -> Value {
    Value::Secure(Arc::new(SecureValue::new(payload, origin)))
}

/// True for a secure value or an array containing one at any depth.
pub fn is_secure(v: &Value) -> bool {
    match v {
        Value::Secure(_) => true,
        Value::Array(items) => items.iter().any(is_secure),
        _ => false,
    }
}

/// The origin of the first secure component, in evaluation order.
pub fn origin_of(v: &Value) -> Option<NodeId> {
    match v {
        Value::Secure(s) => Some(s.origin),
        Value::Array(items) => items.iter().find_map(origin_of),
        _ => None,
    }
}

pub fn deep_unwrap(v: &Value) -> Value {
    match v {
        Value::Secure(s) => s.payload.clone(),
        Value::Array(items) if items.iter().any(is_secure) => {
            Value::array(items.iter().map(deep_unwrap).collect())
        }
        other => other.clone(),
    }
}

fn rewrap(result: Value, origin: Option<NodeId>) -> Value {
    match origin {
        Some(o) => secure(result, o),
        None => result,
    }
}

pub fn secure_binary_op(op: BinOp, a: &Value, b: &Value) -> Result<Value, EngineError> {
    let origin = origin_of(a).or_else(|| origin_of(b));
    if origin.is_none() {
        return ast::binary(op, a, b);
    }
    let result = ast::binary(op, &deep_unwrap(a), &deep_unwrap(b))?;
    Ok(rewrap(result, origin))
}

pub fn secure_unary_op(op: UnOp, v: &Value) -> Result<Value, EngineError> {
    let origin = origin_of(v);
    if origin.is_none() {
        return ast::unary(op, v);
    }
    Ok(rewrap(ast::unary(op, &deep_unwrap(v))?, origin))
}

fn plain_index(v: &Value) -> Result<i64, EngineError> {
    match v {
        Value::Int(i) => Ok(*i),
        other => Err(EngineError::type_mismatch(format!(
            "array index must be Int, got {}",
            other.kind_name()
        ))),
    }
}

fn bounds(i: i64, len: usize) -> Result<usize, EngineError> {
    if i < 0 || i as usize >= len {
        return Err(EngineError::IndexOutOfBounds { index: i, len });
    }
    Ok(i as usize)
}

/// Element read. Reading from a secure array, or at a secure index, yields
/// a secure element.
pub fn index(arr: &Value, idx: &Value) -> Result<Value, EngineError> {
    let idx_origin = idx.as_secure().map(|s| s.origin);
    let i = plain_index(&deep_unwrap(idx))?;
    let (items, arr_origin) = match arr {
        Value::Array(items) => (items, None),
        Value::Secure(s) => match &s.payload {
            Value::Array(items) => (items, Some(s.origin)),
            other => {
                return Err(EngineError::type_mismatch(format!(
                    "cannot index secure {}",
                    other.kind_name()
                )))
            }
        },
        other => {
            return Err(EngineError::type_mismatch(format!(
                "cannot index {}",
                other.kind_name()
            )))
        }
    };
    let elem = items[bounds(i, items.len())?].clone();
    match arr_origin.or(idx_origin) {
        Some(o) if !is_secure(&elem) => Ok(secure(elem, o)),
        _ => Ok(elem),
    }
}

/// Element write into the array held in `slot`. A secure array stays
/// secure and stores plain payloads; a write at a secure index makes the
/// whole array secure.
pub fn store(slot: &mut Value, idx: &Value, v: Value) -> Result<(), EngineError> {
    let idx_origin = idx.as_secure().map(|s| s.origin);
    let i = plain_index(&deep_unwrap(idx))?;
    match slot {
        Value::Array(items) => {
            let len = items.len();
            Arc::make_mut(items)[bounds(i, len)?] = v;
            if let Some(o) = idx_origin {
                *slot = secure(slot.clone(), o);
            }
            Ok(())
        }
        Value::Secure(s) => {
            let sv = Arc::make_mut(s);
            match &mut sv.payload {
                Value::Array(items) => {
                    let len = items.len();
                    Arc::make_mut(items)[bounds(i, len)?] = deep_unwrap(&v);
                    Ok(())
                }
                other => Err(EngineError::type_mismatch(format!(
                    "cannot index secure {}",
                    other.kind_name()
                ))),
            }
        }
        other => Err(EngineError::type_mismatch(format!(
            "cannot index {}",
            other.kind_name()
        ))),
    }
}

/// Branch condition. Secure booleans are accepted: only explicit data flow
/// is tracked.
pub fn condition(v: &Value) -> Result<bool, EngineError> {
    match deep_unwrap(v) {
        Value::Bool(b) => Ok(b),
        other => Err(EngineError::type_mismatch(format!(
            "condition must be Bool, got {}",
            other.kind_name()
        ))),
    }
}

pub fn loop_bound(v: &Value) -> Result<i64, EngineError> {
    match deep_unwrap(v) {
        Value::Int(i) => Ok(i),
        other => Err(EngineError::type_mismatch(format!(
            "range bound must be Int, got {}",
            other.kind_name()
        ))),
    }
}

pub fn length(v: &Value) -> Result<Value, EngineError> {
    match v {
        Value::Array(items) => Ok(Value::Int(items.len() as i64)),
        Value::Str(s) => Ok(Value::Int(s.chars().count() as i64)),
        Value::Secure(s) => Ok(secure(length(&s.payload)?, s.origin)),
        other => Err(EngineError::type_mismatch(format!(
            "len expects Array or Str, got {}",
            other.kind_name()
        ))),
    }
}

pub fn new_array(n: &Value, init: &Value) -> Result<Value, EngineError> {
    let count = loop_bound(n)?;
    if count < 0 {
        return Err(EngineError::IndexOutOfBounds { index: count, len: 0 });
    }
    let items = Value::array(vec![init.clone(); count as usize]);
    match n.as_secure() {
        Some(s) => Ok(secure(items, s.origin)),
        None => Ok(items),
    }
}

type Constructor = fn(&Literal) -> Option<Value>;

/// Literal argument of a `secV` constructor.
#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Int(i64),
    Double(f64),
    Bool(bool),
    Array(Vec<Literal>),
}

impl Literal {
    fn to_value(&self) -> Value {
        match self {
            Literal::Int(i) => Value::Int(*i),
            Literal::Double(d) => Value::Double(*d),
            Literal::Bool(b) => Value::Bool(*b),
            Literal::Array(items) => Value::array(items.iter().map(Literal::to_value).collect()),
        }
    }
}

/// Named secure constructors. Ships with `sInt`, `sDouble`, `sBoolean` and
/// `sArray`; further node types register here.
#[derive(Clone)]
pub struct Constructors {
    table: BTreeMap<String, Constructor>,
}

impl Default for Constructors {
    fn default() -> Self {
        let mut c = Constructors {
            table: BTreeMap::new(),
        };
        c.register("sInt", |l| match l {
            Literal::Int(i) => Some(Value::Int(*i)),
            _ => None,
        });
        c.register("sDouble", |l| match l {
            Literal::Double(d) => Some(Value::Double(*d)),
            Literal::Int(i) => Some(Value::Double(*i as f64)),
            _ => None,
        });
        c.register("sBoolean", |l| match l {
            Literal::Bool(b) => Some(Value::Bool(*b)),
            _ => None,
        });
        c.register("sArray", |l| match l {
            Literal::Array(_) => Some(l.to_value()),
            _ => None,
        });
        c
    }
}

impl Constructors {
    pub fn register(&mut self, name: impl Into<String>, ctor: Constructor) {
        self.table.insert(name.into(), ctor);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.table.keys().map(String::as_str)
    }

    /// Evaluates one `secV` snippet such as `sDouble(0.5)`.
    pub fn eval(&self, snippet: &str, origin: NodeId) -> Result<Value, ParseError> {
        let mut p = SnippetParser::new(snippet);
        p.skip_ws();
        let name = p.ident()?;
        let ctor = self
            .table
            .get(name)
            .ok_or_else(|| p.error(format!("unknown secure constructor `{name}`")))?;
        p.expect('(')?;
        let lit = p.literal()?;
        p.expect(')')?;
        p.skip_ws();
        if !p.at_end() {
            return Err(p.error("trailing input after constructor"));
        }
        let payload = ctor(&lit)
            .ok_or_else(|| ParseError::new(1, 1, format!("`{name}` does not accept {lit:?}")))?;
        Ok(secure(payload, origin))
    }
}

pub fn eval_sec_v(snippet: &str, origin: NodeId) -> Result<Value, ParseError> {
    Constructors::default().eval(snippet, origin)
}

struct SnippetParser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> SnippetParser<'a> {
    fn new(src: &'a str) -> Self {
        SnippetParser { src, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        let before = &self.src[..self.pos];
        let line = before.matches('\n').count() + 1;
        let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
        ParseError::new(line, column, msg)
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> Result<&'a str, ParseError> {
        let rest = self.rest();
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        if len == 0 || rest.starts_with(|c: char| c.is_ascii_digit()) {
            return Err(self.error("expected constructor name"));
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        self.skip_ws();
        let rest = self.rest();
        if rest.starts_with('[') {
            self.pos += 1;
            let mut items = Vec::new();
            self.skip_ws();
            if self.rest().starts_with(']') {
                self.pos += 1;
                return Ok(Literal::Array(items));
            }
            loop {
                items.push(self.literal()?);
                self.skip_ws();
                if self.rest().starts_with(',') {
                    self.pos += 1;
                } else {
                    self.expect(']')?;
                    return Ok(Literal::Array(items));
                }
            }
        }
        for (word, b) in [("true", true), ("false", false)] {
            if rest.starts_with(word) {
                self.pos += word.len();
                return Ok(Literal::Bool(b));
            }
        }
        let len = rest
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '-' | '+' | '.' | 'e' | 'E')))
            .unwrap_or(rest.len());
        let text = &rest[..len];
        if text.is_empty() {
            return Err(self.error("expected a literal"));
        }
        let lit = if text.contains(['.', 'e', 'E']) {
            text.parse().map(Literal::Double).ok()
        } else {
            text.parse().map(Literal::Int).ok()
        };
        let lit = lit.ok_or_else(|| self.error(format!("malformed number `{text}`")))?;
        self.pos += len;
        Ok(lit)
    }
}
