//! CWE identifiers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// A MITRE CWE identifier, rendered as `CWE-<n>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cwe(pub u32);

impl Cwe {
    pub const NULL_DEREF: Cwe = Cwe(476);
    pub const DOUBLE_FREE: Cwe = Cwe(415);
    pub const USE_AFTER_FREE: Cwe = Cwe(416);
    pub const OUT_OF_BOUNDS_WRITE: Cwe = Cwe(787);
    pub const HEAP_OVERFLOW: Cwe = Cwe(122);
    pub const FORMAT_STRING: Cwe = Cwe(134);
    pub const MEMORY_LEAK: Cwe = Cwe(401);
    pub const INTEGER_OVERFLOW: Cwe = Cwe(190);

    /// Short MITRE name, when known.
    pub fn name(self) -> Option<&'static str> {
        Some(match self.0 {
            20 => "Improper Input Validation",
            119 => "Improper Restriction of Operations within the Bounds of a Memory Buffer",
            120 => "Classic Buffer Overflow",
            121 => "Stack-based Buffer Overflow",
            122 => "Heap-based Buffer Overflow",
            125 => "Out-of-bounds Read",
            134 => "Use of Externally-Controlled Format String",
            190 => "Integer Overflow or Wraparound",
            369 => "Divide By Zero",
            400 => "Uncontrolled Resource Consumption",
            401 => "Missing Release of Memory after Effective Lifetime",
            415 => "Double Free",
            416 => "Use After Free",
            476 => "NULL Pointer Dereference",
            787 => "Out-of-bounds Write",
            835 => "Loop with Unreachable Exit Condition",
            _ => return None,
        })
    }

    /// Weaknesses whose triggering commonly needs large inputs or
    /// allocations, so a harness must not cap sizes.
    pub fn is_size_sensitive(self) -> bool {
        matches!(self.0, 415 | 416 | 787 | 122)
    }
}

impl fmt::Display for Cwe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CWE-{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("not a CWE identifier: {0:?}")]
pub struct ParseCweError(pub String);

impl FromStr for Cwe {
    type Err = ParseCweError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let digits = t
            .get(..4)
            .filter(|p| p.eq_ignore_ascii_case("cwe-"))
            .map(|_| &t[4..])
            .ok_or_else(|| ParseCweError(s.to_string()))?;
        digits.parse::<u32>().map(Cwe).map_err(|_| ParseCweError(s.to_string()))
    }
}

impl Serialize for Cwe {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Cwe {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
