// SPDX-License-Identifier: Apache-2.0

//! Operator semantics on plain (non-secure) values. Secure operands are
//! handled one level up in [`crate::secv`].

use std::sync::Arc;

use super::node::{BinOp, UnOp};
use super::value::Value;
use crate::error::EngineError;

pub fn binary(op: BinOp, a: &Value, b: &Value) -> Result<Value, EngineError> {
    use Value::*;
    match (a, b) {
        (Array(_), _) | (_, Array(_)) => array_binary(op, a, b),
        (Int(x), Int(y)) => int_binary(op, *x, *y),
        (Int(_) | Double(_), Int(_) | Double(_)) => {
            double_binary(op, as_f64(a).unwrap(), as_f64(b).unwrap())
        }
        (Bool(x), Bool(y)) => match op {
            BinOp::And => Ok(Bool(*x && *y)),
            BinOp::Or => Ok(Bool(*x || *y)),
            BinOp::Eq => Ok(Bool(x == y)),
            BinOp::Ne => Ok(Bool(x != y)),
            _ => Err(mismatch(op, a, b)),
        },
        (Str(x), Str(y)) => match op {
            BinOp::Add => {
                let mut s = String::with_capacity(x.len() + y.len());
                s.push_str(x);
                s.push_str(y);
                Ok(Value::Str(Arc::from(s)))
            }
            BinOp::Eq => Ok(Bool(x == y)),
            BinOp::Ne => Ok(Bool(x != y)),
            BinOp::Lt => Ok(Bool(x < y)),
            BinOp::Le => Ok(Bool(x <= y)),
            BinOp::Gt => Ok(Bool(x > y)),
            BinOp::Ge => Ok(Bool(x >= y)),
            _ => Err(mismatch(op, a, b)),
        },
        _ => match op {
            BinOp::Eq => Ok(Bool(a == b)),
            BinOp::Ne => Ok(Bool(a != b)),
            _ => Err(mismatch(op, a, b)),
        },
    }
}

pub fn unary(op: UnOp, v: &Value) -> Result<Value, EngineError> {
    match (op, v) {
        (UnOp::Neg, Value::Int(i)) => Ok(Value::Int(i.wrapping_neg())),
        (UnOp::Neg, Value::Double(d)) => Ok(Value::Double(-d)),
        (UnOp::Neg, Value::Array(items)) => items
            .iter()
            .map(|e| unary(op, e))
            .collect::<Result<Vec<_>, _>>()
            .map(Value::array),
        (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
        _ => Err(EngineError::type_mismatch(format!(
            "cannot apply {op:?} to {}",
            v.kind_name()
        ))),
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Int(i) => Some(*i as f64),
        Value::Double(d) => Some(*d),
        _ => None,
    }
}

fn mismatch(op: BinOp, a: &Value, b: &Value) -> EngineError {
    EngineError::type_mismatch(format!(
        "cannot apply `{}` to {} and {}",
        op.symbol(),
        a.kind_name(),
        b.kind_name()
    ))
}

fn int_binary(op: BinOp, x: i64, y: i64) -> Result<Value, EngineError> {
    Ok(match op {
        BinOp::Add => Value::Int(x.wrapping_add(y)),
        BinOp::Sub => Value::Int(x.wrapping_sub(y)),
        BinOp::Mul => Value::Int(x.wrapping_mul(y)),
        // `/` is true division in both guest languages.
        BinOp::Div => Value::Double(x as f64 / y as f64),
        BinOp::Mod => {
            if y == 0 {
                return Err(EngineError::DivisionByZero);
            }
            Value::Int(x.wrapping_rem_euclid(y))
        }
        BinOp::Lt => Value::Bool(x < y),
        BinOp::Le => Value::Bool(x <= y),
        BinOp::Gt => Value::Bool(x > y),
        BinOp::Ge => Value::Bool(x >= y),
        BinOp::Eq => Value::Bool(x == y),
        BinOp::Ne => Value::Bool(x != y),
        BinOp::And | BinOp::Or => {
            return Err(mismatch(op, &Value::Int(x), &Value::Int(y)));
        }
    })
}

fn double_binary(op: BinOp, x: f64, y: f64) -> Result<Value, EngineError> {
    Ok(match op {
        BinOp::Add => Value::Double(x + y),
        BinOp::Sub => Value::Double(x - y),
        BinOp::Mul => Value::Double(x * y),
        BinOp::Div => Value::Double(x / y),
        BinOp::Mod => Value::Double(x.rem_euclid(y)),
        BinOp::Lt => Value::Bool(x < y),
        BinOp::Le => Value::Bool(x <= y),
        BinOp::Gt => Value::Bool(x > y),
        BinOp::Ge => Value::Bool(x >= y),
        BinOp::Eq => Value::Bool(x == y),
        BinOp::Ne => Value::Bool(x != y),
        BinOp::And | BinOp::Or => {
            return Err(mismatch(op, &Value::Double(x), &Value::Double(y)));
        }
    })
}

fn array_binary(op: BinOp, a: &Value, b: &Value) -> Result<Value, EngineError> {
    if matches!(op, BinOp::Eq | BinOp::Ne) {
        let eq = values_equal(a, b);
        return Ok(Value::Bool(if op == BinOp::Eq { eq } else { !eq }));
    }
    if op.is_comparison() || matches!(op, BinOp::And | BinOp::Or) {
        return Err(mismatch(op, a, b));
    }
    match (a, b) {
        (Value::Array(xs), Value::Array(ys)) => {
            if xs.len() != ys.len() {
                return Err(EngineError::type_mismatch(format!(
                    "element-wise `{}` on arrays of length {} and {}",
                    op.symbol(),
                    xs.len(),
                    ys.len()
                )));
            }
            xs.iter()
                .zip(ys.iter())
                .map(|(x, y)| binary(op, x, y))
                .collect::<Result<Vec<_>, _>>()
                .map(Value::array)
        }
        (Value::Array(xs), scalar) => xs
            .iter()
            .map(|x| binary(op, x, scalar))
            .collect::<Result<Vec<_>, _>>()
            .map(Value::array),
        (scalar, Value::Array(ys)) => ys
            .iter()
            .map(|y| binary(op, scalar, y))
            .collect::<Result<Vec<_>, _>>()
            .map(Value::array),
        _ => unreachable!("array_binary called without an array operand"),
    }
}

/// Guest-level equality: numbers compare by value across Int/Double.
pub fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Int(_) | Value::Double(_), Value::Int(_) | Value::Double(_)) => {
            match (a, b) {
                (Value::Int(x), Value::Int(y)) => x == y,
                _ => as_f64(a) == as_f64(b),
            }
        }
        (Value::Array(xs), Value::Array(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys.iter()).all(|(x, y)| values_equal(x, y))
        }
        _ => a == b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn int_arithmetic_wraps() {
        assert_eq!(
            binary(BinOp::Add, &Value::Int(i64::MAX), &Value::Int(1)).unwrap(),
            Value::Int(i64::MIN)
        );
        assert_eq!(
            binary(BinOp::Add, &Value::Int(3), &Value::Int(4)).unwrap(),
            Value::Int(7)
        );
    }

    #[test]
    fn mixing_promotes_to_double() {
        assert_eq!(
            binary(BinOp::Mul, &Value::Int(2), &Value::Double(0.5)).unwrap(),
            Value::Double(1.0)
        );
        assert_eq!(
            binary(BinOp::Div, &Value::Int(-2), &Value::Int(4)).unwrap(),
            Value::Double(-0.5)
        );
    }

    #[test]
    fn array_ops_are_elementwise_and_length_checked() {
        let a = Value::array(vec![Value::Int(1), Value::Int(2)]);
        let b = Value::array(vec![Value::Int(10), Value::Int(20)]);
        assert_eq!(
            binary(BinOp::Add, &a, &b).unwrap(),
            Value::array(vec![Value::Int(11), Value::Int(22)])
        );
        assert_eq!(
            binary(BinOp::Mul, &Value::Int(3), &a).unwrap(),
            Value::array(vec![Value::Int(3), Value::Int(6)])
        );
        let short = Value::array(vec![Value::Int(1)]);
        assert!(matches!(
            binary(BinOp::Sub, &a, &short),
            Err(EngineError::TypeMismatch(_))
        ));
    }

    #[test]
    fn modulo_by_zero_is_an_error() {
        assert_eq!(
            binary(BinOp::Mod, &Value::Int(1), &Value::Int(0)),
            Err(EngineError::DivisionByZero)
        );
        assert_eq!(
            binary(BinOp::Mod, &Value::Int(-7), &Value::Int(3)).unwrap(),
            Value::Int(2)
        );
    }

    #[test]
    fn cross_kind_equality_is_false_not_an_error() {
        assert_eq!(
            binary(BinOp::Eq, &Value::str("1"), &Value::Int(1)).unwrap(),
            Value::Bool(false)
        );
        assert_eq!(
            binary(BinOp::Eq, &Value::Int(1), &Value::Double(1.0)).unwrap(),
            Value::Bool(true)
        );
    }
}
