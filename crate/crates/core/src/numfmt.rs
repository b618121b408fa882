//! Serialization of floats rounded to 10 significant digits.

use serde::{Deserialize, Deserializer, Serializer};

pub const SIGNIFICANT_DIGITS: usize = 10;

/// Rounds `v` to ten significant digits. Non-finite values pass through.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v)
        .parse()
        .expect("formatted float parses")
}

pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig(*v))
}

/// Reads a float, mapping `null` (how JSON carries NaN) back to NaN.
pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

pub mod vec {
    use super::round_sig;
    use serde::ser::SerializeSeq;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&round_sig(*x))?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round_sig(215.864379428571), 215.8643794);
        assert_eq!(round_sig(6.0 / 11.0), 0.5454545455);
        assert_eq!(round_sig(0.0), 0.0);
        assert_eq!(round_sig(1234567890123.0), 1234567890000.0);
        assert!(round_sig(f64::NAN).is_nan());
    }
}
