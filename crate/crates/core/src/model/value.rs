use std::fmt;
use std::str::FromStr;

use once_cell::sync::Lazy;
use regex::Regex;
use rust_decimal::Decimal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

static NUMERIC_LITERAL: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$").unwrap());

/// A number as printed in its source, together with its exact decimal value.
///
/// Two numbers with the same value but different printed precision
/// (`15` and `15.00`) are distinct `Number`s; comparisons that should ignore
/// precision go through [`Number::value`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Number {
    raw: String,
    value: Decimal,
}

impl Number {
    pub fn parse(raw: &str) -> Option<Self> {
        let raw = raw.trim();
        if !NUMERIC_LITERAL.is_match(raw) {
            return None;
        }
        let value = if raw.contains(['e', 'E']) {
            Decimal::from_scientific(raw).ok()?
        } else {
            Decimal::from_str(raw.trim_start_matches('+')).ok()?
        };
        Some(Self {
            raw: raw.to_string(),
            value,
        })
    }

    /// Builds a number whose printed form is the decimal's own rendering.
    pub fn from_decimal(value: Decimal) -> Self {
        Self {
            raw: value.to_string(),
            value,
        }
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn value(&self) -> Decimal {
        self.value
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

/// A cell or answer value: numeric, free text, or a yes/no verdict.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Number(Number),
    Text(String),
    YesNo(bool),
}

impl Value {
    /// Classifies trimmed text. Numeric literals keep their printed form;
    /// `yes`/`no` in any case become [`Value::YesNo`].
    pub fn parse(raw: &str) -> Self {
        let raw = raw.trim();
        if let Some(n) = Number::parse(raw) {
            return Value::Number(n);
        }
        if raw.eq_ignore_ascii_case("yes") {
            return Value::YesNo(true);
        }
        if raw.eq_ignore_ascii_case("no") {
            return Value::YesNo(false);
        }
        Value::Text(raw.to_string())
    }

    pub fn number(value: Decimal) -> Self {
        Value::Number(Number::from_decimal(value))
    }

    pub fn as_decimal(&self) -> Option<Decimal> {
        match self {
            Value::Number(n) => Some(n.value),
            _ => None,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Value::Number(_))
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(n) => f.write_str(&n.raw),
            Value::Text(t) => f.write_str(t),
            Value::YesNo(true) => f.write_str("yes"),
            Value::YesNo(false) => f.write_str("no"),
        }
    }
}

impl From<&str> for Value {
    fn from(raw: &str) -> Self {
        Value::parse(raw)
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        // Numbers arrive with their literal text intact (arbitrary_precision).
        match serde_json::Value::deserialize(deserializer)? {
            serde_json::Value::String(s) => Ok(Value::parse(&s)),
            serde_json::Value::Number(n) => Ok(Value::parse(&n.to_string())),
            serde_json::Value::Bool(b) => Ok(Value::YesNo(b)),
            other => Err(serde::de::Error::custom(format!(
                "expected a string, number or bool cell, found {other}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn keeps_printed_precision() {
        let v = Value::parse("296.0");
        assert_eq!(v.render(), "296.0");
        assert_eq!(v.as_decimal(), Some(Decimal::new(2960, 1)));
        assert_eq!(Value::parse("2784.00").render(), "2784.00");
        assert_ne!(Value::parse("15"), Value::parse("15.00"));
    }

    #[test]
    fn classifies_kinds() {
        assert_eq!(Value::parse(" Yes "), Value::YesNo(true));
        assert_eq!(Value::parse("no"), Value::YesNo(false));
        assert_eq!(Value::parse("Gambia, The"), Value::Text("Gambia, The".into()));
        assert!(Value::parse("-50752953286.0").is_numeric());
        assert!(Value::parse("1.5e-3").is_numeric());
        assert!(!Value::parse("45%").is_numeric());
        assert!(!Value::parse("1.2.3").is_numeric());
    }

    #[test]
    fn json_numbers_keep_their_literal() {
        let v: Vec<Value> = serde_json::from_str("[20.0, \"18\", true, 1e3]").unwrap();
        assert_eq!(v[0].render(), "20.0");
        assert_eq!(v[1].render(), "18");
        assert_eq!(v[2], Value::YesNo(true));
        assert_eq!(v[3].as_decimal(), Some(Decimal::from(1000)));
        assert_eq!(serde_json::to_string(&v[0]).unwrap(), "\"20.0\"");
    }

    proptest! {
        #[test]
        fn render_then_parse_is_identity(s in "\\PC{0,24}") {
            let v = Value::parse(&s);
            prop_assert_eq!(Value::parse(&v.render()), v);
        }

        #[test]
        fn decimals_round_trip(int in -1_000_000i64..1_000_000, scale in 0u32..6) {
            let d = Decimal::new(int, scale);
            let v = Value::number(d);
            prop_assert_eq!(Value::parse(&v.render()), v.clone());
            prop_assert_eq!(v.as_decimal(), Some(d));
        }
    }
}
