//! JSON instance files with bit-exact binary64 payloads.
//!
//! Floats are written as C99 hexadecimal literals (`0x1.8p-1`), so an
//! instance reloads to exactly the same bits. Plain JSON numbers are accepted
//! on input for hand-written files.

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HexF64(pub f64);

/// Format a binary64 value as a C99 hexadecimal floating literal.
pub fn format_hexf64(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 && frac == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, e) = if exp == 0 { (0, -1022) } else { (1, exp - 1023) };
    let mut digits = format!("{:013x}", frac);
    while digits.ends_with('0') {
        digits.pop();
    }
    let esign = if e >= 0 { "+" } else { "-" };
    if digits.is_empty() {
        format!("{sign}0x{lead}p{esign}{}", e.abs())
    } else {
        format!("{sign}0x{lead}.{digits}p{esign}{}", e.abs())
    }
}

pub fn parse_hexf64(s: &str) -> Result<f64, String> {
    let t = s.trim();
    match t {
        "nan" => return Ok(f64::NAN),
        "inf" => return Ok(f64::INFINITY),
        "-inf" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    if t.contains("0x") || t.contains("0X") {
        // the parser rejects an explicit '+' in the exponent
        let cleaned = t.replace("p+", "p").replace("P+", "P");
        hexf_parse::parse_hexf64(&cleaned, false).map_err(|e| format!("{t}: {e}"))
    } else {
        t.parse::<f64>().map_err(|e| format!("{t}: {e}"))
    }
}

impl Serialize for HexF64 {
    fn serialize<Se: Serializer>(&self, s: Se) -> Result<Se::Ok, Se::Error> {
        s.serialize_str(&format_hexf64(self.0))
    }
}

impl<'de> Deserialize<'de> for HexF64 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = HexF64;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a hex float string or a number")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<HexF64, E> {
                parse_hexf64(v).map(HexF64).map_err(E::custom)
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<HexF64, E> {
                Ok(HexF64(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<HexF64, E> {
                Ok(HexF64(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<HexF64, E> {
                Ok(HexF64(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

/// Serde adapters for `Vec<f64>` and `Vec<Vec<f64>>` fields.
pub mod hex_vec {
    use super::HexF64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<Se: Serializer>(v: &[f64], s: Se) -> Result<Se::Ok, Se::Error> {
        v.iter().map(|&x| HexF64(x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<HexF64>::deserialize(d)?.into_iter().map(|h| h.0).collect())
    }
}

pub mod hex_mat {
    use super::HexF64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<Se: Serializer>(v: &[Vec<f64>], s: Se) -> Result<Se::Ok, Se::Error> {
        v.iter().map(|r| r.iter().map(|&x| HexF64(x)).collect::<Vec<_>>()).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        Ok(Vec::<Vec<HexF64>>::deserialize(d)?.into_iter().map(|r| r.into_iter().map(|h| h.0).collect()).collect())
    }
}

pub mod hex_opt_vec {
    use super::HexF64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<Se: Serializer>(v: &Option<Vec<f64>>, s: Se) -> Result<Se::Ok, Se::Error> {
        v.as_ref().map(|r| r.iter().map(|&x| HexF64(x)).collect::<Vec<_>>()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<f64>>, D::Error> {
        Ok(Option::<Vec<HexF64>>::deserialize(d)?.map(|r| r.into_iter().map(|h| h.0).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_literals() {
        assert_eq!(format_hexf64(1.0), "0x1p+0");
        assert_eq!(format_hexf64(0.75), "0x1.8p-1");
        assert_eq!(format_hexf64(-0.1), "-0x1.999999999999ap-4");
        assert_eq!(format_hexf64(0.0), "0x0p+0");
        assert_eq!(parse_hexf64("0x1.8p-1").unwrap(), 0.75);
        assert_eq!(parse_hexf64("0.5").unwrap(), 0.5);
    }

    proptest! {
        #[test]
        fn round_trip_bits(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let back = parse_hexf64(&format_hexf64(v)).unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }
}
