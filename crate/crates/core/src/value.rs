//! Runtime values and their type tags.

use std::fmt;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

/// Declared type of a parameter, variable, or function result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeTag {
    Int,
    Float,
    Text,
    Bool,
    /// A pair of integers, written `(x,y)`.
    Coord,
}

impl TypeTag {
    pub fn from_name(name: &str) -> Option<TypeTag> {
        match name.to_ascii_lowercase().as_str() {
            "int" | "integer" | "int4" | "int8" | "bigint" => Some(TypeTag::Int),
            "float" | "float8" | "double" | "real" | "numeric" => Some(TypeTag::Float),
            "text" | "varchar" => Some(TypeTag::Text),
            "bool" | "boolean" => Some(TypeTag::Bool),
            "coord" => Some(TypeTag::Coord),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TypeTag::Int => "int",
            TypeTag::Float => "float",
            TypeTag::Text => "text",
            TypeTag::Bool => "bool",
            TypeTag::Coord => "coord",
        }
    }

    /// Parses a literal of this type from its textual form (CSV cells, CLI arguments).
    pub fn parse_literal(self, text: &str) -> Result<Value, String> {
        let t = text.trim();
        if t.eq_ignore_ascii_case("null") && self != TypeTag::Text {
            return Ok(Value::Null);
        }
        match self {
            TypeTag::Int => t
                .parse::<i64>()
                .map(Value::Int)
                .map_err(|_| format!("invalid int literal `{t}`")),
            TypeTag::Float => t
                .parse::<f64>()
                .map(Value::Float)
                .map_err(|_| format!("invalid float literal `{t}`")),
            TypeTag::Text => Ok(Value::Text(text.to_string())),
            TypeTag::Bool => match t.to_ascii_lowercase().as_str() {
                "true" | "t" => Ok(Value::Bool(true)),
                "false" | "f" => Ok(Value::Bool(false)),
                _ => Err(format!("invalid bool literal `{t}`")),
            },
            TypeTag::Coord => parse_coord(t).ok_or_else(|| format!("invalid coord literal `{t}`")),
        }
    }
}

impl fmt::Display for TypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn parse_coord(t: &str) -> Option<Value> {
    let inner = t.strip_prefix('(')?.strip_suffix(')')?;
    let (x, y) = inner.split_once(',')?;
    Some(Value::coord(x.trim().parse().ok()?, y.trim().parse().ok()?))
}

/// A value flowing through every stage of the pipeline.
///
/// Equality is bitwise on floats so that stage-equivalence checks are exact.
#[derive(Debug, Clone)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
    Tuple(Vec<Value>),
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Null, Value::Null) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (Value::Text(a), Value::Text(b)) => a == b,
            (Value::Tuple(a), Value::Tuple(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Value {
    pub fn coord(x: i64, y: i64) -> Value {
        Value::Tuple(vec![Value::Int(x), Value::Int(y)])
    }

    pub fn text(s: impl Into<String>) -> Value {
        Value::Text(s.into())
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// Whether the value may be stored in a slot declared with `ty`. Null conforms to every type.
    pub fn conforms(&self, ty: TypeTag) -> bool {
        match (self, ty) {
            (Value::Null, _) => true,
            (Value::Bool(_), TypeTag::Bool) => true,
            (Value::Int(_), TypeTag::Int) => true,
            (Value::Float(_), TypeTag::Float) => true,
            (Value::Text(_), TypeTag::Text) => true,
            (Value::Tuple(items), TypeTag::Coord) => {
                items.len() == 2
                    && items
                        .iter()
                        .all(|v| matches!(v, Value::Int(_) | Value::Null))
            }
            _ => false,
        }
    }

    /// Number of characters of text carried by this value (recursively through tuples).
    pub fn text_payload(&self) -> usize {
        match self {
            Value::Text(s) => s.chars().count(),
            Value::Tuple(items) => items.iter().map(Value::text_payload).sum(),
            _ => 0,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Null => "null",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Text(_) => "text",
            Value::Tuple(_) => "tuple",
        }
    }
}

/// Renders a float so that it reads back as a float (always has a `.` or exponent).
pub(crate) fn format_float(x: f64) -> String {
    if x.is_finite() {
        let s = format!("{x:?}");
        if s.contains('.') || s.contains('e') || s.contains("inf") {
            s
        } else {
            format!("{s}.0")
        }
    } else if x.is_nan() {
        "'NaN'".to_string()
    } else if x > 0.0 {
        "'Infinity'".to_string()
    } else {
        "'-Infinity'".to_string()
    }
}

pub(crate) fn quote_text(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

impl fmt::Display for Value {
    /// SQL-flavored literal syntax: `NULL`, `true`, `42`, `0.5`, `'txt'`, `(0,2)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => f.write_str(&format_float(*x)),
            Value::Text(s) => f.write_str(&quote_text(s)),
            Value::Tuple(items) => {
                f.write_str("(")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Null => s.serialize_none(),
            Value::Bool(b) => s.serialize_bool(*b),
            Value::Int(i) => s.serialize_i64(*i),
            Value::Float(x) => s.serialize_f64(*x),
            Value::Text(t) => s.serialize_str(t),
            Value::Tuple(items) => {
                let mut seq = s.serialize_seq(Some(items.len()))?;
                for v in items {
                    seq.serialize_element(v)?;
                }
                seq.end()
            }
        }
    }
}

struct ValueVisitor;

impl<'de> Visitor<'de> for ValueVisitor {
    type Value = Value;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("null, bool, number, string or array")
    }

    fn visit_unit<E: de::Error>(self) -> Result<Value, E> {
        Ok(Value::Null)
    }
    fn visit_none<E: de::Error>(self) -> Result<Value, E> {
        Ok(Value::Null)
    }
    fn visit_bool<E: de::Error>(self, v: bool) -> Result<Value, E> {
        Ok(Value::Bool(v))
    }
    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Value, E> {
        Ok(Value::Int(v))
    }
    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Value, E> {
        i64::try_from(v)
            .map(Value::Int)
            .map_err(|_| E::custom("integer out of range"))
    }
    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Value, E> {
        Ok(Value::Float(v))
    }
    fn visit_str<E: de::Error>(self, v: &str) -> Result<Value, E> {
        Ok(Value::Text(v.to_string()))
    }
    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Value, A::Error> {
        let mut items = Vec::new();
        while let Some(v) = seq.next_element()? {
            items.push(v);
        }
        Ok(Value::Tuple(items))
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Value, D::Error> {
        d.deserialize_any(ValueVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_equality_is_bitwise() {
        assert_eq!(Value::Float(0.1 + 0.2), Value::Float(0.1 + 0.2));
        assert_ne!(Value::Float(0.0), Value::Float(-0.0));
        assert_ne!(Value::Int(1), Value::Float(1.0));
    }

    #[test]
    fn coord_literals() {
        assert_eq!(
            TypeTag::Coord.parse_literal("(3, 2)").unwrap(),
            Value::coord(3, 2)
        );
        assert!(TypeTag::Coord.parse_literal("3,2").is_err());
        assert_eq!(Value::coord(-1, 4).to_string(), "(-1,4)");
    }

    #[test]
    fn json_round_trip_keeps_int_float_distinct() {
        let v = Value::Tuple(vec![
            Value::Int(1),
            Value::Float(1.0),
            Value::Null,
            Value::text("a"),
        ]);
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"[1,1.0,null,"a"]"#);
        let back: Value = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn text_payload_counts_chars() {
        assert_eq!(Value::text("héllo").text_payload(), 5);
        assert_eq!(
            Value::Tuple(vec![Value::text("ab"), Value::Int(3)]).text_payload(),
            2
        );
    }
}
