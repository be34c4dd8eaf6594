// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::secv::SecureValue;

/// Run-time guest value.
///
/// Arrays have value semantics: they are shared copy-on-write, so a callee
/// mutating an argument never affects the caller. This keeps the plain
/// interpreter and the boundary (which copies through serialization)
/// observationally identical.
#[derive(Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Double(f64),
    Bool(bool),
    Str(Arc<str>),
    Array(Arc<Vec<Value>>),
    Unit,
    Secure(Arc<SecureValue>),
    FunctionRef(Arc<str>),
}

impl Value {
    pub fn str(s: impl AsRef<str>) -> Value {
        Value::Str(Arc::from(s.as_ref()))
    }

    pub fn array(items: Vec<Value>) -> Value {
        Value::Array(Arc::new(items))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "Int",
            Value::Double(_) => "Double",
            Value::Bool(_) => "Bool",
            Value::Str(_) => "Str",
            Value::Array(_) => "Array",
            Value::Unit => "Unit",
            Value::Secure(_) => "Secure",
            Value::FunctionRef(_) => "FunctionRef",
        }
    }

    pub fn as_secure(&self) -> Option<&SecureValue> {
        match self {
            Value::Secure(s) => Some(s),
            _ => None,
        }
    }

    /// Renders the value the way `print` writes it. Secure values render as
    /// their payload; callers that must not reveal payloads gate on
    /// [`crate::secv::is_secure`] first.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out);
        out
    }

    fn render_into(&self, out: &mut String) {
        use std::fmt::Write;
        match self {
            Value::Int(i) => write!(out, "{i}").unwrap(),
            Value::Double(d) => out.push_str(&format_double(*d)),
            Value::Bool(b) => write!(out, "{b}").unwrap(),
            Value::Str(s) => out.push_str(s),
            Value::Array(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    item.render_into(out);
                }
                out.push(']');
            }
            Value::Unit => out.push_str("unit"),
            Value::Secure(s) => s.payload.render_into(out),
            Value::FunctionRef(name) => write!(out, "<function {name}>").unwrap(),
        }
    }
}

/// Doubles always carry a fractional part or exponent so they never read
/// back as integers.
pub fn format_double(d: f64) -> String {
    if d.is_finite() && d.fract() == 0.0 && d.abs() < 1e16 {
        format!("{d:.1}")
    } else {
        format!("{d}")
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "Int({i})"),
            Value::Double(d) => write!(f, "Double({d:?})"),
            Value::Bool(b) => write!(f, "Bool({b})"),
            Value::Str(s) => write!(f, "Str({s:?})"),
            Value::Array(items) => f.debug_list().entries(items.iter()).finish(),
            Value::Unit => f.write_str("Unit"),
            Value::Secure(s) => write!(f, "Secure({:?})", s.payload),
            Value::FunctionRef(n) => write!(f, "FunctionRef({n})"),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Double(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

/// Observed run-time type of a function argument or return value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TypeName {
    Int,
    Double,
    Bool,
    Str,
    Array,
    Object,
    Unit,
}

impl TypeName {
    /// Secure scalars surface as their payload type; secure containers and
    /// function handles are opaque host objects.
    pub fn of(v: &Value) -> TypeName {
        match v {
            Value::Int(_) => TypeName::Int,
            Value::Double(_) => TypeName::Double,
            Value::Bool(_) => TypeName::Bool,
            Value::Str(_) => TypeName::Str,
            Value::Array(_) => TypeName::Array,
            Value::Unit => TypeName::Unit,
            Value::FunctionRef(_) => TypeName::Object,
            Value::Secure(s) => match &s.payload {
                Value::Array(_) => TypeName::Object,
                other => TypeName::of(other),
            },
        }
    }

    /// Least upper bound of two observations of the same slot.
    pub fn join(self, other: TypeName) -> TypeName {
        match (self, other) {
            (a, b) if a == b => a,
            (TypeName::Int, TypeName::Double) | (TypeName::Double, TypeName::Int) => {
                TypeName::Double
            }
            _ => TypeName::Object,
        }
    }
}
