//! Non-negative extended reals, the value domain of cost functions.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A value in `[0, +inf]`.
///
/// Multiplication by a mass follows the measure-theoretic convention
/// `(+inf) * 0 = 0`, see [`ExtendedReal::weighted`].
#[derive(Clone, Copy, PartialEq)]
pub struct ExtendedReal(f64);

impl ExtendedReal {
    pub const ZERO: ExtendedReal = ExtendedReal(0.0);
    pub const ONE: ExtendedReal = ExtendedReal(1.0);
    pub const INFINITY: ExtendedReal = ExtendedReal(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::Input(format!(
                "extended real must lie in [0, inf], got {value}"
            )));
        }
        Ok(ExtendedReal(value))
    }

    /// Clamps slightly negative round-off to zero; panics on NaN.
    pub fn from_f64_lossy(value: f64) -> Self {
        assert!(!value.is_nan(), "NaN is not an extended real");
        ExtendedReal(value.max(0.0))
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// The finite value, or `None` for `+inf`.
    pub fn finite(self) -> Option<f64> {
        self.is_finite().then_some(self.0)
    }

    /// Raw `f64` view (`+inf` maps to `f64::INFINITY`).
    pub fn to_f64(self) -> f64 {
        self.0
    }

    /// `self * mass` with `(+inf) * 0 = 0`.
    pub fn weighted(self, mass: f64) -> ExtendedReal {
        debug_assert!(mass >= 0.0);
        if mass == 0.0 {
            ExtendedReal::ZERO
        } else {
            ExtendedReal(self.0 * mass)
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn clamp_to(self, level: f64) -> Self {
        ExtendedReal(self.0.min(level))
    }

    pub fn approx_eq(self, other: Self, tol: f64) -> bool {
        match (self.is_infinite(), other.is_infinite()) {
            (true, true) => true,
            (false, false) => (self.0 - other.0).abs() <= tol,
            _ => false,
        }
    }
}

impl Eq for ExtendedReal {}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Add for ExtendedReal {
    type Output = ExtendedReal;

    fn add(self, rhs: Self) -> Self {
        ExtendedReal(self.0 + rhs.0)
    }
}

impl std::iter::Sum for ExtendedReal {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(ExtendedReal::ZERO, Add::add)
    }
}

impl fmt::Debug for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl TryFrom<f64> for ExtendedReal {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        ExtendedReal::new(value)
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

struct ExtendedRealVisitor;

impl<'de> Visitor<'de> for ExtendedRealVisitor {
    type Value = ExtendedReal;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a non-negative number or the string \"inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtendedReal, E> {
        ExtendedReal::new(v).map_err(E::custom)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtendedReal, E> {
        self.visit_f64(v as f64)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtendedReal, E> {
        self.visit_f64(v as f64)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtendedReal, E> {
        match v {
            "inf" | "+inf" | "infinity" => Ok(ExtendedReal::INFINITY),
            other => Err(E::custom(format!("unknown extended real literal {other:?}"))),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        deserializer.deserialize_any(ExtendedRealVisitor)
    }
}
