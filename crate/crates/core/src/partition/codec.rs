// SPDX-License-Identifier: Apache-2.0

//! Tag-length-value encoding for values crossing the boundary.
//!
//! | tag  | value  | body                                  |
//! |------|--------|---------------------------------------|
//! | `01` | Int    | 8 bytes, little-endian two's complement |
//! | `02` | Double | 8 bytes, IEEE 754 little-endian       |
//! | `03` | Bool   | 1 byte, `00` or `01`                  |
//! | `04` | Str    | u32-LE byte length, then UTF-8        |
//! | `05` | Array  | u32-LE element count, then elements   |
//! | `06` | Unit   | empty                                 |

use std::sync::Arc;

use crate::ast::Value;
use crate::error::CodecError;

pub const TAG_INT: u8 = 0x01;
pub const TAG_DOUBLE: u8 = 0x02;
pub const TAG_BOOL: u8 = 0x03;
pub const TAG_STR: u8 = 0x04;
pub const TAG_ARRAY: u8 = 0x05;
pub const TAG_UNIT: u8 = 0x06;

const MAX_DEPTH: usize = 256;

pub fn serialize(v: &Value) -> Result<Vec<u8>, CodecError> {
    let mut out = Vec::new();
    serialize_into(v, &mut out)?;
    Ok(out)
}

pub fn serialize_into(v: &Value, out: &mut Vec<u8>) -> Result<(), CodecError> {
    match v {
        Value::Int(i) => {
            out.push(TAG_INT);
            out.extend_from_slice(&i.to_le_bytes());
        }
        Value::Double(d) => {
            out.push(TAG_DOUBLE);
            out.extend_from_slice(&d.to_le_bytes());
        }
        Value::Bool(b) => {
            out.push(TAG_BOOL);
            out.push(u8::from(*b));
        }
        Value::Str(s) => {
            out.push(TAG_STR);
            out.extend_from_slice(&length_prefix(s.len())?);
            out.extend_from_slice(s.as_bytes());
        }
        Value::Array(items) => {
            out.push(TAG_ARRAY);
            out.extend_from_slice(&length_prefix(items.len())?);
            for item in items.iter() {
                serialize_into(item, out)?;
            }
        }
        Value::Unit => out.push(TAG_UNIT),
        Value::Secure(_) => return Err(CodecError::SecureValuePresent),
        Value::FunctionRef(_) => return Err(CodecError::UnsupportedType("FunctionRef")),
    }
    Ok(())
}

fn length_prefix(n: usize) -> Result<[u8; 4], CodecError> {
    u32::try_from(n)
        .map(u32::to_le_bytes)
        .map_err(|_| CodecError::UnsupportedType("collection longer than u32::MAX"))
}

/// Decodes exactly one value; trailing bytes are an error.
pub fn deserialize(b: &[u8]) -> Result<Value, CodecError> {
    let mut r = Reader { buf: b, pos: 0 };
    let v = r.value(0)?;
    if r.pos != b.len() {
        return Err(CodecError::Malformed(format!(
            "{} trailing byte(s) after value",
            b.len() - r.pos
        )));
    }
    Ok(v)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.buf.len() - self.pos < n {
            return Err(CodecError::Malformed(format!(
                "need {n} byte(s) at offset {}, have {}",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn fixed<const N: usize>(&mut self) -> Result<[u8; N], CodecError> {
        Ok(self.take(N)?.try_into().expect("take returns N bytes"))
    }

    fn len(&mut self) -> Result<usize, CodecError> {
        Ok(u32::from_le_bytes(self.fixed()?) as usize)
    }

    fn value(&mut self, depth: usize) -> Result<Value, CodecError> {
        if depth > MAX_DEPTH {
            return Err(CodecError::Malformed("arrays nested too deeply".into()));
        }
        let [tag] = self.fixed()?;
        match tag {
            TAG_INT => Ok(Value::Int(i64::from_le_bytes(self.fixed()?))),
            TAG_DOUBLE => Ok(Value::Double(f64::from_le_bytes(self.fixed()?))),
            TAG_BOOL => match self.fixed()? {
                [0] => Ok(Value::Bool(false)),
                [1] => Ok(Value::Bool(true)),
                [b] => Err(CodecError::Malformed(format!("bool byte {b:#04x}"))),
            },
            TAG_STR => {
                let n = self.len()?;
                let bytes = self.take(n)?;
                let s = std::str::from_utf8(bytes)
                    .map_err(|e| CodecError::Malformed(format!("string: {e}")))?;
                Ok(Value::Str(Arc::from(s)))
            }
            TAG_ARRAY => {
                let n = self.len()?;
                // Every element takes at least one byte.
                let mut items = Vec::with_capacity(n.min(self.buf.len() - self.pos));
                for _ in 0..n {
                    items.push(self.value(depth + 1)?);
                }
                Ok(Value::array(items))
            }
            TAG_UNIT => Ok(Value::Unit),
            other => Err(CodecError::Malformed(format!(
                "unknown tag {other:#04x} at offset {}",
                self.pos - 1
            ))),
        }
    }
}
