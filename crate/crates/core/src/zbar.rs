//! The max-plus semiring `Z̄ = {-∞} ∪ Z ∪ {+∞}`.
//!
//! Addition `⊕` is `max`, multiplication `⊙` is integer addition. `-∞` is the
//! neutral element of `⊕` and absorbs everything under `⊙`, including `+∞`.
//! `+∞` absorbs every element other than `-∞` under `⊙`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Value};

/// An element of the max-plus semiring. The derived order is the semiring
/// order: `NegInf < Fin(a) < PosInf`, finite values ordered as integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ZBar {
    NegInf,
    Fin(BigInt),
    PosInf,
}

impl ZBar {
    pub fn fin(v: impl Into<BigInt>) -> Self {
        ZBar::Fin(v.into())
    }

    pub fn zero() -> Self {
        ZBar::Fin(BigInt::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ZBar::Fin(_))
    }

    pub fn as_fin(&self) -> Option<&BigInt> {
        match self {
            ZBar::Fin(v) => Some(v),
            _ => None,
        }
    }

    /// Finite value as `i64`, if it fits.
    pub fn to_i64(&self) -> Option<i64> {
        self.as_fin().and_then(|v| v.to_i64())
    }

    /// `a ⊕ b = max(a, b)`.
    pub fn oplus(&self, other: &ZBar) -> ZBar {
        if self >= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    /// `a ⊙ b`: integer addition with the absorption conventions.
    pub fn odot(&self, other: &ZBar) -> ZBar {
        match (self, other) {
            (ZBar::NegInf, _) | (_, ZBar::NegInf) => ZBar::NegInf,
            (ZBar::PosInf, _) | (_, ZBar::PosInf) => ZBar::PosInf,
            (ZBar::Fin(a), ZBar::Fin(b)) => ZBar::Fin(a + b),
        }
    }

    /// Adds a plain integer; infinities are unchanged.
    pub fn shift(&self, by: &BigInt) -> ZBar {
        match self {
            ZBar::Fin(a) => ZBar::Fin(a + by),
            other => other.clone(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            ZBar::NegInf => json!({ "neginf": true }),
            ZBar::PosInf => json!({ "posinf": true }),
            ZBar::Fin(v) => json!({ "fin": bigint_json(v) }),
        }
    }

    pub fn from_json(v: &Value) -> Option<ZBar> {
        let obj = v.as_object()?;
        if obj.len() != 1 {
            return None;
        }
        if obj.get("neginf") == Some(&Value::Bool(true)) {
            return Some(ZBar::NegInf);
        }
        if obj.get("posinf") == Some(&Value::Bool(true)) {
            return Some(ZBar::PosInf);
        }
        let n = obj.get("fin")?;
        match n {
            Value::Number(num) => num.to_string().parse::<BigInt>().ok().map(ZBar::Fin),
            _ => None,
        }
    }
}

/// ⊕-fold; the empty fold is `-∞`.
pub fn sup<'a, I>(items: I) -> ZBar
where
    I: IntoIterator<Item = &'a ZBar>,
{
    items.into_iter().fold(ZBar::NegInf, |acc, x| acc.oplus(x))
}

/// ⊕-fold over owned values.
pub fn sup_owned<I>(items: I) -> ZBar
where
    I: IntoIterator<Item = ZBar>,
{
    items.into_iter().fold(ZBar::NegInf, |acc, x| acc.oplus(&x))
}

/// A JSON number carrying an arbitrary-precision integer verbatim.
pub(crate) fn bigint_json(v: &BigInt) -> Value {
    // arbitrary_precision keeps the digits exactly
    serde_json::from_str(&v.to_string()).expect("integer literal is valid JSON")
}

impl From<i64> for ZBar {
    fn from(v: i64) -> Self {
        ZBar::Fin(BigInt::from(v))
    }
}

impl From<BigInt> for ZBar {
    fn from(v: BigInt) -> Self {
        ZBar::Fin(v)
    }
}

impl PartialEq<i64> for ZBar {
    fn eq(&self, other: &i64) -> bool {
        matches!(self, ZBar::Fin(v) if *v == BigInt::from(*other))
    }
}

impl PartialOrd<i64> for ZBar {
    fn partial_cmp(&self, other: &i64) -> Option<Ordering> {
        Some(self.cmp(&ZBar::from(*other)))
    }
}

impl fmt::Display for ZBar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZBar::NegInf => f.write_str("-inf"),
            ZBar::PosInf => f.write_str("+inf"),
            ZBar::Fin(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not an element of Z-bar: {0:?}")]
pub struct ParseZBarError(pub String);

impl FromStr for ZBar {
    type Err = ParseZBarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "-inf" => Ok(ZBar::NegInf),
            "+inf" => Ok(ZBar::PosInf),
            _ => {
                // BigInt accepts a leading '+', which the text rendering never emits
                if s.starts_with('+') {
                    return Err(ParseZBarError(s.to_string()));
                }
                s.parse::<BigInt>().map(ZBar::Fin).map_err(|_| ParseZBarError(s.to_string()))
            }
        }
    }
}
