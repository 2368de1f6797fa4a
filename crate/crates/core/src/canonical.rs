//! Canonical JSON encoding.
//!
//! Rules: object keys sorted by code point, no insignificant whitespace,
//! UTF-8 output, numbers in shortest round-trip form (`-0.0` written as
//! `0.0`), absent values as `null`. Non-finite floats are rejected; the
//! sanctioned infinity travels as the string `"inf"` (see
//! [`ExtendedReal`](crate::ExtendedReal)).

use serde::ser::{self, Serialize};
use serde_json::Value;

use crate::digest::Digest32;

#[derive(Debug, thiserror::Error)]
pub enum CanonicalError {
    #[error("non-finite number cannot be serialized canonically")]
    NonFinite,
    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// Canonical bytes of any serializable value.
pub fn to_canonical_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, CanonicalError> {
    let value = to_checked_value(value)?;
    Ok(value_to_canonical_bytes(&value))
}

pub fn canonical_digest_of<T: Serialize + ?Sized>(value: &T) -> Result<Digest32, CanonicalError> {
    Ok(Digest32::of(&to_canonical_bytes(value)?))
}

/// Converts to a JSON tree, failing (instead of silently writing `null`) on
/// NaN or infinite floats.
pub fn to_checked_value<T: Serialize + ?Sized>(value: &T) -> Result<Value, CanonicalError> {
    value.serialize(FiniteGuard).map_err(|_| CanonicalError::NonFinite)?;
    Ok(serde_json::to_value(value)?)
}

pub fn value_to_canonical_bytes(value: &Value) -> Vec<u8> {
    let mut out = Vec::with_capacity(256);
    write_value(&mut out, value);
    out
}

fn write_value(out: &mut Vec<u8>, value: &Value) {
    match value {
        Value::Null => out.extend_from_slice(b"null"),
        Value::Bool(true) => out.extend_from_slice(b"true"),
        Value::Bool(false) => out.extend_from_slice(b"false"),
        Value::Number(n) => {
            if n.as_f64() == Some(0.0) && n.is_f64() {
                out.extend_from_slice(b"0.0");
            } else {
                out.extend_from_slice(n.to_string().as_bytes());
            }
        }
        Value::String(s) => write_string(out, s),
        Value::Array(items) => {
            out.push(b'[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_value(out, item);
            }
            out.push(b']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push(b'{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_string(out, key);
                out.push(b':');
                write_value(out, &map[key]);
            }
            out.push(b'}');
        }
    }
}

fn write_string(out: &mut Vec<u8>, s: &str) {
    // serde_json's string escaping is already minimal and deterministic.
    serde_json::to_writer(&mut *out, s).expect("writing to a Vec cannot fail");
}

#[derive(Debug)]
struct GuardError;

impl std::fmt::Display for GuardError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("non-finite float")
    }
}

impl std::error::Error for GuardError {}

impl ser::Error for GuardError {
    fn custom<T: std::fmt::Display>(_msg: T) -> Self {
        GuardError
    }
}

/// A serializer that produces nothing and only checks floats for finiteness.
#[derive(Clone, Copy)]
struct FiniteGuard;

type GuardResult = Result<(), GuardError>;

impl ser::Serializer for FiniteGuard {
    type Ok = ();
    type Error = GuardError;
    type SerializeSeq = Self;
    type SerializeTuple = Self;
    type SerializeTupleStruct = Self;
    type SerializeTupleVariant = Self;
    type SerializeMap = Self;
    type SerializeStruct = Self;
    type SerializeStructVariant = Self;

    fn serialize_bool(self, _: bool) -> GuardResult {
        Ok(())
    }
    fn serialize_i8(self, _: i8) -> GuardResult {
        Ok(())
    }
    fn serialize_i16(self, _: i16) -> GuardResult {
        Ok(())
    }
    fn serialize_i32(self, _: i32) -> GuardResult {
        Ok(())
    }
    fn serialize_i64(self, _: i64) -> GuardResult {
        Ok(())
    }
    fn serialize_u8(self, _: u8) -> GuardResult {
        Ok(())
    }
    fn serialize_u16(self, _: u16) -> GuardResult {
        Ok(())
    }
    fn serialize_u32(self, _: u32) -> GuardResult {
        Ok(())
    }
    fn serialize_u64(self, _: u64) -> GuardResult {
        Ok(())
    }
    fn serialize_f32(self, v: f32) -> GuardResult {
        if v.is_finite() {
            Ok(())
        } else {
            Err(GuardError)
        }
    }
    fn serialize_f64(self, v: f64) -> GuardResult {
        if v.is_finite() {
            Ok(())
        } else {
            Err(GuardError)
        }
    }
    fn serialize_char(self, _: char) -> GuardResult {
        Ok(())
    }
    fn serialize_str(self, _: &str) -> GuardResult {
        Ok(())
    }
    fn serialize_bytes(self, _: &[u8]) -> GuardResult {
        Ok(())
    }
    fn serialize_none(self) -> GuardResult {
        Ok(())
    }
    fn serialize_some<T: ?Sized + Serialize>(self, value: &T) -> GuardResult {
        value.serialize(self)
    }
    fn serialize_unit(self) -> GuardResult {
        Ok(())
    }
    fn serialize_unit_struct(self, _: &'static str) -> GuardResult {
        Ok(())
    }
    fn serialize_unit_variant(self, _: &'static str, _: u32, _: &'static str) -> GuardResult {
        Ok(())
    }
    fn serialize_newtype_struct<T: ?Sized + Serialize>(
        self,
        _: &'static str,
        value: &T,
    ) -> GuardResult {
        value.serialize(self)
    }
    fn serialize_newtype_variant<T: ?Sized + Serialize>(
        self,
        _: &'static str,
        _: u32,
        _: &'static str,
        value: &T,
    ) -> GuardResult {
        value.serialize(self)
    }
    fn serialize_seq(self, _: Option<usize>) -> Result<Self, GuardError> {
        Ok(self)
    }
    fn serialize_tuple(self, _: usize) -> Result<Self, GuardError> {
        Ok(self)
    }
    fn serialize_tuple_struct(self, _: &'static str, _: usize) -> Result<Self, GuardError> {
        Ok(self)
    }
    fn serialize_tuple_variant(
        self,
        _: &'static str,
        _: u32,
        _: &'static str,
        _: usize,
    ) -> Result<Self, GuardError> {
        Ok(self)
    }
    fn serialize_map(self, _: Option<usize>) -> Result<Self, GuardError> {
        Ok(self)
    }
    fn serialize_struct(self, _: &'static str, _: usize) -> Result<Self, GuardError> {
        Ok(self)
    }
    fn serialize_struct_variant(
        self,
        _: &'static str,
        _: u32,
        _: &'static str,
        _: usize,
    ) -> Result<Self, GuardError> {
        Ok(self)
    }
}

impl ser::SerializeSeq for FiniteGuard {
    type Ok = ();
    type Error = GuardError;
    fn serialize_element<T: ?Sized + Serialize>(&mut self, value: &T) -> GuardResult {
        value.serialize(FiniteGuard)
    }
    fn end(self) -> GuardResult {
        Ok(())
    }
}

impl ser::SerializeTuple for FiniteGuard {
    type Ok = ();
    type Error = GuardError;
    fn serialize_element<T: ?Sized + Serialize>(&mut self, value: &T) -> GuardResult {
        value.serialize(FiniteGuard)
    }
    fn end(self) -> GuardResult {
        Ok(())
    }
}

impl ser::SerializeTupleStruct for FiniteGuard {
    type Ok = ();
    type Error = GuardError;
    fn serialize_field<T: ?Sized + Serialize>(&mut self, value: &T) -> GuardResult {
        value.serialize(FiniteGuard)
    }
    fn end(self) -> GuardResult {
        Ok(())
    }
}

impl ser::SerializeTupleVariant for FiniteGuard {
    type Ok = ();
    type Error = GuardError;
    fn serialize_field<T: ?Sized + Serialize>(&mut self, value: &T) -> GuardResult {
        value.serialize(FiniteGuard)
    }
    fn end(self) -> GuardResult {
        Ok(())
    }
}

impl ser::SerializeMap for FiniteGuard {
    type Ok = ();
    type Error = GuardError;
    fn serialize_key<T: ?Sized + Serialize>(&mut self, key: &T) -> GuardResult {
        key.serialize(FiniteGuard)
    }
    fn serialize_value<T: ?Sized + Serialize>(&mut self, value: &T) -> GuardResult {
        value.serialize(FiniteGuard)
    }
    fn end(self) -> GuardResult {
        Ok(())
    }
}

impl ser::SerializeStruct for FiniteGuard {
    type Ok = ();
    type Error = GuardError;
    fn serialize_field<T: ?Sized + Serialize>(&mut self, _: &'static str, value: &T) -> GuardResult {
        value.serialize(FiniteGuard)
    }
    fn end(self) -> GuardResult {
        Ok(())
    }
}

impl ser::SerializeStructVariant for FiniteGuard {
    type Ok = ();
    type Error = GuardError;
    fn serialize_field<T: ?Sized + Serialize>(&mut self, _: &'static str, value: &T) -> GuardResult {
        value.serialize(FiniteGuard)
    }
    fn end(self) -> GuardResult {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;
    use std::collections::HashMap;

    #[test]
    fn sorts_keys_and_strips_whitespace() {
        let v = json!({"b": 1, "a": {"d": [1, 2.5, null], "c": "x y"}});
        assert_eq!(
            value_to_canonical_bytes(&v),
            br#"{"a":{"c":"x y","d":[1,2.5,null]},"b":1}"#.to_vec()
        );
    }

    #[test]
    fn key_order_follows_code_points() {
        let v = json!({"é": 1, "z": 2, "Z": 3, "a": 4});
        assert_eq!(
            String::from_utf8(value_to_canonical_bytes(&v)).unwrap(),
            r#"{"Z":3,"a":4,"z":2,"é":1}"#
        );
    }

    #[test]
    fn in_memory_order_does_not_matter() {
        let mut a = HashMap::new();
        let mut b = HashMap::new();
        for i in 0..50 {
            a.insert(format!("k{i}"), i);
        }
        for i in (0..50).rev() {
            b.insert(format!("k{i}"), i);
        }
        assert_eq!(to_canonical_bytes(&a).unwrap(), to_canonical_bytes(&b).unwrap());
    }

    #[test]
    fn numbers_are_shortest_round_trip() {
        let v = vec![0.1f64, 1.0 / 3.0, 1e-9, 2.0, -0.0, 123456789.0];
        let s = String::from_utf8(to_canonical_bytes(&v).unwrap()).unwrap();
        assert_eq!(s, "[0.1,0.3333333333333333,1e-9,2.0,0.0,123456789.0]");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[1], 1.0 / 3.0);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(to_canonical_bytes(&vec![f64::NAN]), Err(CanonicalError::NonFinite)));
        assert!(matches!(
            to_canonical_bytes(&Some(f64::INFINITY)),
            Err(CanonicalError::NonFinite)
        ));
        assert!(to_canonical_bytes(&crate::ExtendedReal::Infinite).is_ok());
    }

    #[test]
    fn escapes_strings() {
        let v = json!({"q": "a\"b\\c\n\u{1}"});
        assert_eq!(
            String::from_utf8(value_to_canonical_bytes(&v)).unwrap(),
            r#"{"q":"a\"b\\c\n\u0001"}"#
        );
    }
}
