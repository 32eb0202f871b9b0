//! Extended reals for scores, penalties and divergences.
//!
//! Scores live in `[0, +inf]`; penalty differences may reach `-inf`. The
//! wrapped value is never NaN, so the type is totally ordered. Two
//! conventions are fixed here and used everywhere else:
//!
//! * `0 * inf = 0` (see [`ExtReal::weighted`]), so an expected score with a
//!   zero-probability outcome ignores that outcome's score.
//! * `inf - inf = 0` (see [`ExtReal::margin`]), which makes a margin of zero
//!   mean "tie": `inf <= inf` holds and `inf < inf` does not.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg};

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal(0.0);
    pub const INFINITY: ExtReal = ExtReal(f64::INFINITY);
    pub const NEG_INFINITY: ExtReal = ExtReal(f64::NEG_INFINITY);

    /// Wraps `value`. Panics on NaN.
    pub fn new(value: f64) -> Self {
        assert!(!value.is_nan(), "extended real cannot be NaN");
        ExtReal(value)
    }

    pub fn try_new(value: f64) -> Option<Self> {
        (!value.is_nan()).then_some(ExtReal(value))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    #[inline]
    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// Finite value, or `None` for either infinity.
    pub fn finite(self) -> Option<f64> {
        self.is_finite().then_some(self.0)
    }

    /// `weight * self` with `0 * inf = 0`.
    pub fn weighted(self, weight: f64) -> ExtReal {
        assert!(!weight.is_nan(), "weight cannot be NaN");
        if weight == 0.0 {
            ExtReal::ZERO
        } else {
            ExtReal::new(weight * self.0)
        }
    }

    /// `self - other` with `inf - inf = 0` and `-inf - -inf = 0`.
    pub fn margin(self, other: ExtReal) -> ExtReal {
        if self.0.is_infinite() && self.0 == other.0 {
            ExtReal::ZERO
        } else {
            ExtReal(self.0 - other.0)
        }
    }

    pub fn min(self, other: ExtReal) -> ExtReal {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).expect("ExtReal is never NaN")
    }
}

impl From<f64> for ExtReal {
    fn from(value: f64) -> Self {
        ExtReal::new(value)
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    /// Panics on `inf + -inf`; scores are bounded below so this never
    /// arises when summing penalties.
    fn add(self, rhs: ExtReal) -> ExtReal {
        ExtReal::new(self.0 + rhs.0)
    }
}

impl AddAssign for ExtReal {
    fn add_assign(&mut self, rhs: ExtReal) {
        *self = *self + rhs;
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;
    fn neg(self) -> ExtReal {
        ExtReal(-self.0)
    }
}

impl Sum for ExtReal {
    fn sum<I: Iterator<Item = ExtReal>>(iter: I) -> ExtReal {
        iter.fold(ExtReal::ZERO, Add::add)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == f64::INFINITY {
            f.write_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            f.write_str("-inf")
        } else if let Some(precision) = f.precision() {
            write!(f, "{:.*}", precision, self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

// JSON has no infinity literal: infinities travel as the strings "inf"/"-inf".
impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            serializer.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            serializer.serialize_str("-inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

struct ExtRealVisitor;

impl<'de> Visitor<'de> for ExtRealVisitor {
    type Value = ExtReal;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number or one of \"inf\", \"-inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<ExtReal, E> {
        ExtReal::try_new(v).ok_or_else(|| E::custom("NaN is not an extended real"))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtReal, E> {
        Ok(ExtReal(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtReal, E> {
        Ok(ExtReal(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtReal, E> {
        match v {
            "inf" | "+inf" => Ok(ExtReal::INFINITY),
            "-inf" => Ok(ExtReal::NEG_INFINITY),
            other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<ExtReal, D::Error> {
        deserializer.deserialize_any(ExtRealVisitor)
    }
}
