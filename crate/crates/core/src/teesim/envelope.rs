// SPDX-License-Identifier: Apache-2.0

//! Reply framing. A reply is `00` followed by the encoded return value, or
//! `01` followed by an encoded error that the caller re-raises.

use crate::ast::Value;
use crate::error::{Direction, EngineError, GuardError, ParseError};
use crate::partition::codec;

const OK: u8 = 0x00;
const ERR: u8 = 0x01;

pub fn encode_reply(value_bytes: Vec<u8>) -> Vec<u8> {
    let mut out = Vec::with_capacity(value_bytes.len() + 1);
    out.push(OK);
    out.extend(value_bytes);
    out
}

pub fn encode_error(e: &EngineError) -> Vec<u8> {
    let mut out = vec![ERR];
    codec::serialize_into(&error_value(e), &mut out).expect("error values are plain");
    out
}

pub fn decode_reply(reply: &[u8]) -> Result<Value, EngineError> {
    let malformed = |what: String| EngineError::Boundary(format!("malformed reply: {what}"));
    match reply.split_first() {
        Some((&OK, rest)) => codec::deserialize(rest).map_err(|e| malformed(e.to_string())),
        Some((&ERR, rest)) => {
            let v = codec::deserialize(rest).map_err(|e| malformed(e.to_string()))?;
            Err(error_from_value(&v).ok_or_else(|| malformed(format!("{v:?}")))?)
        }
        Some((other, _)) => Err(malformed(format!("status byte {other:#04x}"))),
        None => Err(malformed("empty".into())),
    }
}

fn s(x: &str) -> Value {
    Value::str(x)
}

fn int(x: usize) -> Value {
    Value::Int(x as i64)
}

fn error_value(e: &EngineError) -> Value {
    let fields = match e {
        EngineError::UnboundSymbol(n) => vec![s("UnboundSymbol"), s(n)],
        EngineError::TypeMismatch(m) => vec![s("TypeMismatch"), s(m)],
        EngineError::IndexOutOfBounds { index, len } => {
            vec![s("IndexOutOfBounds"), Value::Int(*index), int(*len)]
        }
        EngineError::ArityMismatch {
            name,
            expected,
            got,
        } => vec![s("ArityMismatch"), s(name), int(*expected), int(*got)],
        EngineError::DivisionByZero => vec![s("DivisionByZero")],
        EngineError::CallDepthExceeded(n) => vec![s("CallDepthExceeded"), int(*n)],
        EngineError::UnknownLanguage(l) => vec![s("UnknownLanguage"), s(l)],
        EngineError::Parse(p) => vec![s("Parse"), int(p.line), int(p.column), s(&p.message)],
        EngineError::Guard(g) => vec![
            s("Guard"),
            s(&g.direction.to_string()),
            s(&g.function),
            s(&g.detail),
        ],
        EngineError::Io(m) => vec![s("Io"), s(m)],
        EngineError::Boundary(m) => vec![s("Boundary"), s(m)],
    };
    Value::array(fields)
}

fn error_from_value(v: &Value) -> Option<EngineError> {
    let Value::Array(items) = v else {
        return None;
    };
    let text = |i: usize| match items.get(i) {
        Some(Value::Str(x)) => Some(x.to_string()),
        _ => None,
    };
    let num = |i: usize| match items.get(i) {
        Some(Value::Int(x)) => Some(*x),
        _ => None,
    };
    let size = |i: usize| num(i).and_then(|x| usize::try_from(x).ok());
    let e = match text(0)?.as_str() {
        "UnboundSymbol" => EngineError::UnboundSymbol(text(1)?),
        "TypeMismatch" => EngineError::TypeMismatch(text(1)?),
        "IndexOutOfBounds" => EngineError::IndexOutOfBounds {
            index: num(1)?,
            len: size(2)?,
        },
        "ArityMismatch" => EngineError::ArityMismatch {
            name: text(1)?,
            expected: size(2)?,
            got: size(3)?,
        },
        "DivisionByZero" => EngineError::DivisionByZero,
        "CallDepthExceeded" => EngineError::CallDepthExceeded(size(1)?),
        "UnknownLanguage" => EngineError::UnknownLanguage(text(1)?),
        "Parse" => EngineError::Parse(ParseError::new(size(1)?, size(2)?, text(3)?)),
        "Guard" => EngineError::Guard(GuardError {
            direction: match text(1)?.as_str() {
                "ecall" => Direction::Ecall,
                "ocall" => Direction::Ocall,
                _ => return None,
            },
            function: text(2)?,
            detail: text(3)?,
        }),
        "Io" => EngineError::Io(text(1)?),
        "Boundary" => EngineError::Boundary(text(1)?),
        _ => return None,
    };
    Some(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_survive_the_boundary() {
        let cases = [
            EngineError::UnboundSymbol("f".into()),
            EngineError::TypeMismatch("x".into()),
            EngineError::IndexOutOfBounds { index: -3, len: 2 },
            EngineError::ArityMismatch {
                name: "g".into(),
                expected: 1,
                got: 2,
            },
            EngineError::DivisionByZero,
            EngineError::CallDepthExceeded(200),
            EngineError::UnknownLanguage("ruby".into()),
            EngineError::Parse(ParseError::new(3, 4, "bad")),
            EngineError::Guard(GuardError {
                direction: Direction::Ecall,
                function: "secret".into(),
                detail: "Double carries a secure value".into(),
            }),
            EngineError::Io("gone".into()),
            EngineError::Boundary("b".into()),
        ];
        for e in cases {
            assert_eq!(decode_reply(&encode_error(&e)), Err(e));
        }
    }

    #[test]
    fn ok_reply() {
        let bytes = codec::serialize(&Value::Int(5)).unwrap();
        assert_eq!(decode_reply(&encode_reply(bytes)), Ok(Value::Int(5)));
    }

    #[test]
    fn garbage_reply() {
        assert!(matches!(decode_reply(&[]), Err(EngineError::Boundary(_))));
        assert!(matches!(decode_reply(&[9, 6]), Err(EngineError::Boundary(_))));
        assert!(matches!(decode_reply(&[1, 6]), Err(EngineError::Boundary(_))));
    }
}
