//! Shared tolerances and serialization helpers.

/// Relative tolerance for slope comparisons (kink detection, collinearity).
pub const SLOPE_RTOL: f64 = 1e-9;

/// Relative tolerance used when deciding whether a probe point lies on an
/// envelope. Points within this band are treated as touching.
pub const HEIGHT_RTOL: f64 = 1e-12;

/// Backward-time tolerance for treating two shock collisions as simultaneous.
pub const EVENT_TOL: f64 = 1e-12;

#[inline]
pub(crate) fn close(a: f64, b: f64, rtol: f64) -> bool {
    (a - b).abs() <= rtol * (1.0 + a.abs().max(b.abs()))
}

/// Serializes `f64` values so that infinities become the strings `"-inf"`
/// and `"inf"`; finite values stay numbers.
pub mod extended_real {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    struct ExtendedReal;

    impl<'de> Visitor<'de> for ExtendedReal {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number or one of \"inf\", \"-inf\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(ExtendedReal)
    }
}
