//! Extended reals `ℝ ∪ {+∞}` for merit-function values.
//!
//! Merit functions are `+∞` outside their effective domain. That case is
//! carried as its own variant instead of an `f64::INFINITY` sentinel, and
//! serializes to the JSON string `"+inf"`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInfinity,
}

impl ExtReal {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInfinity => None,
        }
    }

    /// Total order with `+∞` above every finite value.
    pub fn total_cmp(&self, other: &ExtReal) -> Ordering {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.total_cmp(b),
            (ExtReal::Finite(_), ExtReal::PosInfinity) => Ordering::Less,
            (ExtReal::PosInfinity, ExtReal::Finite(_)) => Ordering::Greater,
            (ExtReal::PosInfinity, ExtReal::PosInfinity) => Ordering::Equal,
        }
    }

    pub fn lt(&self, other: &ExtReal) -> bool {
        self.total_cmp(other) == Ordering::Less
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal::Finite(v)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInfinity => write!(f, "+inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::PosInfinity => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(ExtReal::Finite(v)),
            Repr::Str(s) if s == "+inf" => Ok(ExtReal::PosInfinity),
            Repr::Str(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"+inf\", got {s:?}"
            ))),
        }
    }
}
