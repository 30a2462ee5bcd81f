//! Integers that survive JSON clients with 53-bit number precision.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Largest integer a binary64 float represents exactly.
pub const SAFE_MAX: i64 = (1 << 53) - 1;

/// An `i64` written as a JSON number when it is within ±(2⁵³−1) and as a
/// decimal string otherwise. Both forms are accepted on input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct JsonInt(pub i64);

impl From<i64> for JsonInt {
    fn from(v: i64) -> Self {
        JsonInt(v)
    }
}

impl From<JsonInt> for i64 {
    fn from(v: JsonInt) -> Self {
        v.0
    }
}

impl fmt::Display for JsonInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for JsonInt {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if (-SAFE_MAX..=SAFE_MAX).contains(&self.0) {
            s.serialize_i64(self.0)
        } else {
            s.serialize_str(&self.0.to_string())
        }
    }
}

struct JsonIntVisitor;

impl Visitor<'_> for JsonIntVisitor {
    type Value = JsonInt;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a 64-bit integer as a number or a decimal string")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<JsonInt, E> {
        Ok(JsonInt(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<JsonInt, E> {
        i64::try_from(v)
            .map(JsonInt)
            .map_err(|_| E::custom(format!("{v} is out of the 64-bit signed range")))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<JsonInt, E> {
        if v.fract() == 0.0 && v.abs() <= SAFE_MAX as f64 {
            Ok(JsonInt(v as i64))
        } else {
            Err(E::custom(format!("{v} is not an exact integer")))
        }
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<JsonInt, E> {
        v.trim()
            .parse()
            .map(JsonInt)
            .map_err(|_| E::custom(format!("`{v}` is not a 64-bit integer")))
    }
}

impl<'de> Deserialize<'de> for JsonInt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(JsonIntVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn switches_to_strings_past_the_safe_range() {
        assert_eq!(serde_json::to_string(&JsonInt(SAFE_MAX)).unwrap(), "9007199254740991");
        assert_eq!(serde_json::to_string(&JsonInt(SAFE_MAX + 1)).unwrap(), "\"9007199254740992\"");
        assert_eq!(serde_json::to_string(&JsonInt(i64::MIN)).unwrap(), "\"-9223372036854775808\"");
        for v in [0, -5, SAFE_MAX + 1, i64::MAX, i64::MIN] {
            let s = serde_json::to_string(&JsonInt(v)).unwrap();
            assert_eq!(serde_json::from_str::<JsonInt>(&s).unwrap(), JsonInt(v));
        }
    }
}
